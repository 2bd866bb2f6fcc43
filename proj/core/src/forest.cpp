#include "popsyn/forest.hpp"

#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace popsyn {

namespace {

double gini(std::span<const double> counts, double total) {
    if (total <= 0.0) {
        return 0.0;
    }
    double sum_sq = 0.0;
    for (double c : counts) {
        sum_sq += c * c;
    }
    return 1.0 - sum_sq / (total * total);
}

} // namespace

class TreeBuilder {
  public:
    TreeBuilder(const RecordTable &data, std::size_t target, std::span<const std::size_t> predictors,
                const ForestParams &params, std::size_t classes, std::vector<double> &importance,
                SplitMix64 &rng)
        : data_{data}, target_{target}, predictors_{predictors}, params_{params},
          classes_{classes}, importance_{importance}, rng_{rng} {}

    RandomForest::Tree build(std::vector<std::size_t> &rows) {
        total_ = static_cast<double>(rows.size());
        tree_.clear();
        grow(rows, 0, rows.size(), 0);
        return std::move(tree_);
    }

  private:
    std::vector<double> class_counts(const std::vector<std::size_t> &rows, std::size_t begin,
                                     std::size_t end) const {
        std::vector<double> counts(classes_, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            counts[data_.at(rows[i], target_)] += 1.0;
        }
        return counts;
    }

    std::size_t grow(std::vector<std::size_t> &rows, std::size_t begin, std::size_t end,
                     std::size_t depth) {
        const std::size_t id = tree_.size();
        tree_.emplace_back();
        auto counts = class_counts(rows, begin, end);
        const double n = static_cast<double>(end - begin);
        const double node_gini = gini(counts, n);
        {
            auto &node = tree_[id];
            node.distribution = counts;
            for (auto &p : node.distribution) {
                p /= n;
            }
        }
        if (depth >= params_.max_depth || end - begin < 2 * params_.min_leaf || node_gini <= 0.0) {
            return id;
        }

        // Candidate predictors for this node.
        const std::size_t p = predictors_.size();
        std::size_t m = params_.features_per_split;
        if (m == 0) {
            m = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
        }
        m = std::min(m, p);
        std::vector<std::size_t> order(p);
        std::iota(order.begin(), order.end(), 0);
        for (std::size_t i = 0; i < m; ++i) {
            std::uniform_int_distribution<std::size_t> pick{i, p - 1};
            std::swap(order[i], order[pick(rng_)]);
        }

        double best_gain = 1e-12;
        std::size_t best_predictor = p;
        Level best_level = 0;
        const auto min_leaf = static_cast<double>(params_.min_leaf);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t j = order[k];
            const std::size_t col = predictors_[j];
            const std::size_t levels = data_.schema()[col].cardinality();
            std::vector<double> joint(levels * classes_, 0.0);
            for (std::size_t i = begin; i < end; ++i) {
                joint[data_.at(rows[i], col) * classes_ + data_.at(rows[i], target_)] += 1.0;
            }
            for (std::size_t l = 0; l < levels; ++l) {
                std::span<const double> left{joint.data() + l * classes_, classes_};
                double nl = std::accumulate(left.begin(), left.end(), 0.0);
                double nr = n - nl;
                if (nl < min_leaf || nr < min_leaf) {
                    continue;
                }
                std::vector<double> right(classes_);
                for (std::size_t c = 0; c < classes_; ++c) {
                    right[c] = counts[c] - left[c];
                }
                double gain = n * node_gini - nl * gini(left, nl) - nr * gini(right, nr);
                if (gain > best_gain) {
                    best_gain = gain;
                    best_predictor = j;
                    best_level = static_cast<Level>(l);
                }
            }
        }
        if (best_predictor == p) {
            return id;
        }

        importance_[best_predictor] += best_gain / total_;
        const std::size_t col = predictors_[best_predictor];
        auto mid = std::stable_partition(rows.begin() + static_cast<long>(begin),
                                         rows.begin() + static_cast<long>(end),
                                         [&](std::size_t r) { return data_.at(r, col) == best_level; });
        const auto split = static_cast<std::size_t>(mid - rows.begin());
        auto left = grow(rows, begin, split, depth + 1);
        auto right = grow(rows, split, end, depth + 1);
        auto &node = tree_[id];
        node.feature = static_cast<int>(col);
        node.level = best_level;
        node.left = left;
        node.right = right;
        return id;
    }

    const RecordTable &data_;
    std::size_t target_;
    std::span<const std::size_t> predictors_;
    const ForestParams &params_;
    std::size_t classes_;
    std::vector<double> &importance_;
    SplitMix64 &rng_;
    RandomForest::Tree tree_;
    double total_ = 1.0;
};

RandomForest RandomForest::fit(const RecordTable &data, std::size_t target,
                               std::span<const std::size_t> predictors,
                               const ForestParams &params) {
    if (data.empty()) {
        throw EmptyTableError("cannot train a forest on an empty table");
    }
    if (params.trees == 0) {
        throw ArgumentError("forest needs at least one tree");
    }
    RandomForest forest;
    forest.classes_ = data.schema()[target].cardinality();
    forest.importance_.assign(predictors.size(), 0.0);
    if (predictors.empty()) {
        return forest;
    }

    SplitMix64 rng{params.seed};
    TreeBuilder builder{data, target, predictors, params, forest.classes_, forest.importance_, rng};
    const std::size_t n = data.rows();
    std::vector<std::size_t> rows(n);
    for (std::size_t t = 0; t < params.trees; ++t) {
        if (params.bootstrap) {
            std::uniform_int_distribution<std::size_t> pick{0, n - 1};
            for (auto &r : rows) {
                r = pick(rng);
            }
        } else {
            std::iota(rows.begin(), rows.end(), 0);
        }
        forest.trees_.push_back(builder.build(rows));
    }

    double total = std::accumulate(forest.importance_.begin(), forest.importance_.end(), 0.0);
    if (total > 0.0) {
        for (auto &v : forest.importance_) {
            v /= total;
        }
    }
    return forest;
}

std::vector<double> RandomForest::predict_proba(std::span<const Level> row) const {
    std::vector<double> out(classes_, 0.0);
    for (const auto &tree : trees_) {
        std::size_t id = 0;
        while (tree[id].feature >= 0) {
            const auto &node = tree[id];
            id = row[static_cast<std::size_t>(node.feature)] == node.level ? node.left : node.right;
        }
        for (std::size_t c = 0; c < classes_; ++c) {
            out[c] += tree[id].distribution[c];
        }
    }
    for (auto &p : out) {
        p /= static_cast<double>(trees_.size());
    }
    return out;
}

} // namespace popsyn
