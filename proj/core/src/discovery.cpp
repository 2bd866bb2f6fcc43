#include "popsyn/discovery.hpp"

#include "popsyn/error.hpp"
#include "popsyn/random.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/fisher_f.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace popsyn {

namespace {

void sort_ranking(std::vector<PredictorScore> &ranking) {
    std::sort(ranking.begin(), ranking.end(), [](const auto &a, const auto &b) {
        if (a.statistic != b.statistic) {
            return a.statistic > b.statistic;
        }
        return a.predictor < b.predictor;
    });
}

// One-hot design over every column: column 0 is the intercept, then one
// indicator per observed level. The Gram matrix Z'Z holds every cross product
// a least-squares fit needs.
struct OneHotGram {
    std::vector<std::vector<Eigen::Index>> blocks; // per data column
    Eigen::MatrixXd gram;
};

OneHotGram one_hot_gram(const RecordTable &data) {
    OneHotGram g;
    const auto &schema = data.schema();
    std::vector<std::vector<Eigen::Index>> level_index(schema.size());
    Eigen::Index next = 1;
    g.blocks.resize(schema.size());
    for (std::size_t c = 0; c < schema.size(); ++c) {
        std::vector<char> seen(schema[c].cardinality(), 0);
        for (std::size_t r = 0; r < data.rows(); ++r) {
            seen[data.at(r, c)] = 1;
        }
        level_index[c].assign(schema[c].cardinality(), -1);
        for (std::size_t l = 0; l < seen.size(); ++l) {
            if (seen[l]) {
                level_index[c][l] = next;
                g.blocks[c].push_back(next++);
            }
        }
    }
    g.gram = Eigen::MatrixXd::Zero(next, next);
    std::vector<Eigen::Index> active(schema.size() + 1);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        active[0] = 0;
        for (std::size_t c = 0; c < schema.size(); ++c) {
            active[c + 1] = level_index[c][data.at(r, c)];
        }
        for (auto a : active) {
            for (auto b : active) {
                g.gram(a, b) += 1.0;
            }
        }
    }
    return g;
}

struct LeastSquaresFit {
    Eigen::Index rank = 0;
    double rss = 0.0; // summed over responses
};

LeastSquaresFit fit_subset(const Eigen::MatrixXd &gram, const std::vector<Eigen::Index> &design,
                           const std::vector<Eigen::Index> &responses) {
    const auto p = static_cast<Eigen::Index>(design.size());
    const auto m = static_cast<Eigen::Index>(responses.size());
    Eigen::MatrixXd xtx(p, p);
    Eigen::MatrixXd xty(p, m);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            xtx(i, j) = gram(design[i], design[j]);
        }
        for (Eigen::Index j = 0; j < m; ++j) {
            xty(i, j) = gram(design[i], responses[j]);
        }
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod;
    cod.setThreshold(1e-10);
    cod.compute(xtx);
    Eigen::MatrixXd beta = cod.solve(xty);
    LeastSquaresFit fit;
    fit.rank = cod.rank();
    for (Eigen::Index j = 0; j < m; ++j) {
        double rss = gram(responses[j], responses[j]) - xty.col(j).dot(beta.col(j));
        fit.rss += std::max(rss, 0.0);
    }
    return fit;
}

std::size_t observed_levels(const RecordTable &data, std::size_t col) {
    std::vector<char> seen(data.schema()[col].cardinality(), 0);
    for (std::size_t r = 0; r < data.rows(); ++r) {
        seen[data.at(r, col)] = 1;
    }
    return static_cast<std::size_t>(std::count(seen.begin(), seen.end(), 1));
}

} // namespace

DiscoveryResult discover_edges_ols(const RecordTable &data, std::span<const std::string> targets,
                                   const OlsDiscoveryParams &params) {
    if (params.top_m < 1) {
        throw ArgumentError("top_m must be >= 1");
    }
    DiscoveryResult result;
    if (data.empty()) {
        return result;
    }
    const auto &schema = data.schema();
    const auto g = one_hot_gram(data);
    const auto n = static_cast<double>(data.rows());

    for (const auto &target_label : targets) {
        const std::size_t t = schema.index_of(target_label);
        const auto &tblock = g.blocks[t];
        if (tblock.size() < 2) {
            result.warnings.push_back(
                fmt::format("OLS: target '{}' has a single observed level; skipped", target_label));
            continue;
        }
        // r - 1 indicator responses; the dropped level is implied.
        std::vector<Eigen::Index> responses(tblock.begin(), tblock.end() - 1);
        const double m = static_cast<double>(responses.size());

        std::vector<Eigen::Index> design{0};
        std::vector<std::pair<std::size_t, std::vector<Eigen::Index>>> groups;
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (c == t) {
                continue;
            }
            // First observed level is the baseline.
            std::vector<Eigen::Index> cols(g.blocks[c].begin() + 1, g.blocks[c].end());
            design.insert(design.end(), cols.begin(), cols.end());
            groups.emplace_back(c, std::move(cols));
        }

        const auto full = fit_subset(g.gram, design, responses);
        const auto null_fit = fit_subset(g.gram, {0}, responses);
        if (full.rank < static_cast<Eigen::Index>(design.size())) {
            result.warnings.push_back(fmt::format(
                "OLS: design for '{}' is rank deficient ({} of {}); collinear columns dropped",
                target_label, full.rank, design.size()));
        }
        const double dof_resid = n - static_cast<double>(full.rank);
        if (dof_resid <= 0.0) {
            result.warnings.push_back(fmt::format(
                "OLS: target '{}' has no residual degrees of freedom; skipped", target_label));
            continue;
        }
        const bool perfect = full.rss <= 1e-9 * std::max(null_fit.rss, 1.0);

        std::vector<PredictorScore> ranking;
        for (const auto &[c, cols] : groups) {
            PredictorScore score{schema[c].label(), 0.0, 1.0};
            std::vector<Eigen::Index> reduced;
            for (auto d : design) {
                if (std::find(cols.begin(), cols.end(), d) == cols.end()) {
                    reduced.push_back(d);
                }
            }
            const auto red = fit_subset(g.gram, reduced, responses);
            const double df = static_cast<double>(full.rank - red.rank);
            const double delta = std::max(red.rss - full.rss, 0.0);
            if (df > 0.0) {
                if (perfect) {
                    if (delta > 1e-9 * std::max(null_fit.rss, 1.0)) {
                        score.statistic = std::numeric_limits<double>::infinity();
                        score.p_value = 0.0;
                    }
                } else {
                    score.statistic = (delta / (df * m)) / (full.rss / (dof_resid * m));
                    boost::math::fisher_f dist{df * m, dof_resid * m};
                    score.p_value = boost::math::cdf(boost::math::complement(dist, score.statistic));
                }
            }
            ranking.push_back(std::move(score));
        }
        sort_ranking(ranking);
        std::size_t taken = 0;
        for (const auto &s : ranking) {
            if (taken == params.top_m) {
                break;
            }
            if (s.p_value < params.alpha) {
                result.edges.insert(Edge{s.predictor, target_label});
                ++taken;
            }
        }
        result.rankings.emplace(target_label, std::move(ranking));
    }
    return result;
}

DiscoveryResult discover_edges_rf(const RecordTable &data, std::span<const std::string> targets,
                                  const RfDiscoveryParams &params) {
    if (params.top_m < 1) {
        throw ArgumentError("top_m must be >= 1");
    }
    DiscoveryResult result;
    if (data.empty()) {
        return result;
    }
    const auto &schema = data.schema();
    for (const auto &target_label : targets) {
        const std::size_t t = schema.index_of(target_label);
        if (observed_levels(data, t) < 2) {
            result.warnings.push_back(
                fmt::format("RF: target '{}' has a single observed level; skipped", target_label));
            continue;
        }
        std::vector<std::size_t> predictors;
        for (std::size_t c = 0; c < schema.size(); ++c) {
            if (c != t) {
                predictors.push_back(c);
            }
        }
        if (predictors.empty()) {
            continue;
        }
        ForestParams forest_params = params.forest;
        forest_params.seed = mix_seed(params.forest.seed, t);
        auto forest = RandomForest::fit(data, t, predictors, forest_params);

        std::vector<PredictorScore> ranking;
        for (std::size_t i = 0; i < predictors.size(); ++i) {
            ranking.push_back({schema[predictors[i]].label(), forest.importance()[i], 1.0});
        }
        sort_ranking(ranking);
        const double threshold =
            params.share_multiplier / static_cast<double>(predictors.size());
        std::size_t taken = 0;
        for (const auto &s : ranking) {
            if (taken == params.top_m) {
                break;
            }
            if (s.statistic > threshold) {
                result.edges.insert(Edge{s.predictor, target_label});
                ++taken;
            }
        }
        result.rankings.emplace(target_label, std::move(ranking));
    }
    return result;
}

} // namespace popsyn
