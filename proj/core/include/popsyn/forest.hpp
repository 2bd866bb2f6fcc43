#pragma once

#include "popsyn/tabular.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace popsyn {

struct ForestParams {
    std::size_t trees = 50;
    std::size_t max_depth = 8;
    std::size_t min_leaf = 5;
    std::size_t features_per_split = 0; // 0 = ceil(sqrt(number of predictors))
    bool bootstrap = true;
    std::uint64_t seed = 0;
};

/// Classification forest over categorical predictors. Each split tests one
/// predictor against one level (a one-hot indicator); impurity is Gini.
class RandomForest {
  public:
    static RandomForest fit(const RecordTable &data, std::size_t target,
                            std::span<const std::size_t> predictors, const ForestParams &params);

    /// Mean decrease in Gini impurity per predictor (same order as passed to
    /// fit), averaged over trees and normalized to sum to 1 (all zero when no
    /// split was ever made).
    const std::vector<double> &importance() const noexcept { return importance_; }

    /// Class probabilities for a full data row.
    std::vector<double> predict_proba(std::span<const Level> row) const;

  private:
    struct Node {
        // Leaf when feature < 0.
        int feature = -1; // data column
        Level level = 0;  // go left when row[feature] == level
        std::size_t left = 0;
        std::size_t right = 0;
        std::vector<double> distribution;
    };
    using Tree = std::vector<Node>;

    std::size_t classes_ = 0;
    std::vector<Tree> trees_;
    std::vector<double> importance_;

    friend class TreeBuilder;
};

} // namespace popsyn
