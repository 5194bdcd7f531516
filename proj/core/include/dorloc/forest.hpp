#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dorloc/factors.hpp"

namespace dor {

/// One training example. `waypoint_id` and `range` form the row identity the
/// bootstrap is keyed by, so row order never affects the trained model.
struct DataRow {
  std::vector<double> features;  // NaN marks a missing value
  double target_cm = 0.0;
  int waypoint_id = 0;
  double range = 0.0;
};

struct Dataset {
  std::vector<std::string> feature_names;
  std::vector<DataRow> rows;
};

struct ForestParams {
  int n_trees = 100;
  int max_depth = 8;
  int min_leaf = 2;
  int features_per_split = 0;  // 0 selects ceil(d / 3)
  std::uint64_t seed = 0;
  bool bootstrap = true;       // test hook; off trains every tree on all rows
};

/// Binary regression tree stored as a flat node list (preorder). Internal
/// nodes route on feature <= threshold; leaves hold the mean target of
/// their training rows.
struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
  int count = 0;

  bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
  std::vector<TreeNode> nodes;

  double predict(std::span<const double> features) const;
};

/// CART forest for one observation range.
struct ForestModel {
  ForestParams params;
  double range_m = 0.0;
  std::vector<std::string> feature_names;
  std::vector<double> medians;  // per-column imputation values
  std::vector<RegressionTree> trees;
};

/// The documented feature column order for factor-vector datasets. When
/// `range_as_feature` is set a leading "range" column is added and a single
/// model covers all ranges.
std::vector<std::string> factor_feature_names(bool range_as_feature);
std::vector<double> factor_features(const FactorVector& fv, bool range_as_feature);

ForestModel train_forest(const Dataset& data, const ForestParams& params,
                         double range_m);

/// Mean of the per-tree predictions; nonnegative whenever the targets were.
double predict_row(const ForestModel& model, std::span<const double> features);
double predict_error(const ForestModel& model, const FactorVector& fv);

struct EvalMetrics {
  double mae_cm = 0.0;
  double mse_cm2 = 0.0;
};
EvalMetrics evaluate_model(const ForestModel& model, const Dataset& holdout);

/// Text serialization, one tree per block with a preorder node list; fixed
/// seed training round-trips bitwise.
void save_forest(const std::filesystem::path& path, const ForestModel& model);
ForestModel load_forest(const std::filesystem::path& path);

}  // namespace dor
