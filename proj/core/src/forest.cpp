#include "dorloc/forest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "dorloc/csv.hpp"
#include "dorloc/rng.hpp"

namespace dor {

std::vector<std::string> factor_feature_names(bool range_as_feature) {
  std::vector<std::string> names;
  if (range_as_feature) names.push_back("range");
  const char* base[] = {"feature_count", "d1_count",        "d2_count",
                        "d3_count",      "d1_ratio",        "d2_ratio",
                        "d3_ratio",      "occupancy_ratio", "normal_entropy",
                        "r_average",     "r_average_missing", "score_entropy"};
  names.insert(names.end(), std::begin(base), std::end(base));
  return names;
}

std::vector<double> factor_features(const FactorVector& fv, bool range_as_feature) {
  std::vector<double> f;
  if (range_as_feature) f.push_back(fv.range);
  f.insert(f.end(),
           {static_cast<double>(fv.feature_count), static_cast<double>(fv.d1_count),
            static_cast<double>(fv.d2_count), static_cast<double>(fv.d3_count),
            fv.d1_ratio, fv.d2_ratio, fv.d3_ratio, fv.occupancy_ratio,
            fv.normal_entropy,
            fv.r_average_missing ? std::numeric_limits<double>::quiet_NaN()
                                 : fv.r_average,
            fv.r_average_missing ? 1.0 : 0.0, fv.score_entropy});
  return f;
}

double RegressionTree::predict(std::span<const double> features) const {
  std::size_t node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& n = nodes[node];
    node = features[static_cast<std::size_t>(n.feature)] <= n.threshold
               ? static_cast<std::size_t>(n.left)
               : static_cast<std::size_t>(n.right);
  }
  return nodes[node].value;
}

namespace {

struct TrainingView {
  // imputed feature matrix in canonical (identity-sorted) row order
  std::vector<std::vector<double>> features;
  std::vector<double> targets;
  std::size_t dims = 0;
};

struct TreeBuilder {
  const TrainingView& view;
  const ForestParams& params;
  SplitRng rng;
  std::vector<TreeNode> nodes;

  struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double total_sse = 0.0;
  };

  static double subset_sse(double sum, double sumsq, std::size_t n) {
    return sumsq - sum * sum / static_cast<double>(n);
  }

  Split best_split(const std::vector<std::size_t>& rows,
                   const std::vector<int>& candidate_features) const {
    Split best;
    std::vector<std::pair<double, double>> column(rows.size());
    for (int f : candidate_features) {
      for (std::size_t i = 0; i < rows.size(); ++i) {
        column[i] = {view.features[rows[i]][static_cast<std::size_t>(f)],
                     view.targets[rows[i]]};
      }
      std::sort(column.begin(), column.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });

      double sum_left = 0.0, sumsq_left = 0.0;
      double sum_total = 0.0, sumsq_total = 0.0;
      for (const auto& [v, t] : column) {
        sum_total += t;
        sumsq_total += t * t;
      }
      for (std::size_t i = 0; i + 1 < column.size(); ++i) {
        sum_left += column[i].second;
        sumsq_left += column[i].second * column[i].second;
        if (column[i].first == column[i + 1].first) continue;  // same value group
        const std::size_t n_left = i + 1;
        const std::size_t n_right = column.size() - n_left;
        if (n_left < static_cast<std::size_t>(params.min_leaf) ||
            n_right < static_cast<std::size_t>(params.min_leaf)) {
          continue;
        }
        const double total =
            subset_sse(sum_left, sumsq_left, n_left) +
            subset_sse(sum_total - sum_left, sumsq_total - sumsq_left, n_right);
        if (!best.found || total < best.total_sse) {
          best.found = true;
          best.feature = f;
          best.threshold = 0.5 * (column[i].first + column[i + 1].first);
          best.total_sse = total;
        }
      }
    }
    return best;
  }

  std::vector<int> sample_features() {
    const int d = static_cast<int>(view.dims);
    const int k = params.features_per_split;
    std::vector<int> all(d);
    std::iota(all.begin(), all.end(), 0);
    for (int i = 0; i < k; ++i) {
      const std::size_t j =
          i + static_cast<std::size_t>(rng.next_below(static_cast<std::uint64_t>(d - i)));
      std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    std::vector<int> chosen(all.begin(), all.begin() + k);
    std::sort(chosen.begin(), chosen.end());
    return chosen;
  }

  int build(const std::vector<std::size_t>& rows, int depth) {
    const int index = static_cast<int>(nodes.size());
    nodes.emplace_back();

    double sum = 0.0, sumsq = 0.0;
    double min_t = view.targets[rows[0]], max_t = min_t;
    for (std::size_t r : rows) {
      const double t = view.targets[r];
      sum += t;
      sumsq += t * t;
      min_t = std::min(min_t, t);
      max_t = std::max(max_t, t);
    }
    nodes[index].count = static_cast<int>(rows.size());
    nodes[index].value =
        (min_t == max_t) ? min_t : sum / static_cast<double>(rows.size());

    const bool can_split = depth < params.max_depth &&
                           rows.size() >= 2 * static_cast<std::size_t>(params.min_leaf) &&
                           min_t != max_t;
    if (!can_split) return index;

    const Split split = best_split(rows, sample_features());
    if (!split.found ||
        split.total_sse >= subset_sse(sum, sumsq, rows.size()) - 1e-12) {
      return index;
    }

    std::vector<std::size_t> left, right;
    for (std::size_t r : rows) {
      (view.features[r][static_cast<std::size_t>(split.feature)] <= split.threshold
           ? left
           : right)
          .push_back(r);
    }
    nodes[index].feature = split.feature;
    nodes[index].threshold = split.threshold;
    const int left_index = build(left, depth + 1);
    const int right_index = build(right, depth + 1);
    nodes[index].left = left_index;
    nodes[index].right = right_index;
    return index;
  }
};

}  // namespace

ForestModel train_forest(const Dataset& data, const ForestParams& params,
                         double range_m) {
  if (data.rows.empty()) {
    throw std::invalid_argument("train_forest: empty dataset");
  }
  const std::size_t dims = data.feature_names.size();
  for (const DataRow& row : data.rows) {
    if (row.features.size() != dims) {
      throw std::invalid_argument("train_forest: row width does not match schema");
    }
    if (!std::isfinite(row.target_cm)) {
      throw std::invalid_argument("train_forest: non-finite target");
    }
  }
  ForestParams resolved = params;
  if (resolved.features_per_split <= 0) {
    resolved.features_per_split =
        static_cast<int>((dims + 2) / 3);  // ceil(d / 3)
  }
  resolved.features_per_split =
      std::clamp(resolved.features_per_split, 1, static_cast<int>(dims));
  if (resolved.n_trees < 1 || resolved.min_leaf < 1 || resolved.max_depth < 0) {
    throw std::invalid_argument("train_forest: bad params");
  }

  // Canonical row order keyed by identity, so shuffling the input rows
  // cannot change the bootstrap streams or the trained model.
  std::vector<std::size_t> order(data.rows.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const DataRow& ra = data.rows[a];
    const DataRow& rb = data.rows[b];
    if (ra.waypoint_id != rb.waypoint_id) return ra.waypoint_id < rb.waypoint_id;
    return ra.range < rb.range;
  });

  // Column medians over present values for imputation.
  std::vector<double> medians(dims, 0.0);
  for (std::size_t c = 0; c < dims; ++c) {
    std::vector<double> present;
    present.reserve(data.rows.size());
    for (const DataRow& row : data.rows) {
      if (!std::isnan(row.features[c])) present.push_back(row.features[c]);
    }
    if (present.empty()) continue;
    std::sort(present.begin(), present.end());
    const std::size_t n = present.size();
    medians[c] = (n % 2 == 1) ? present[n / 2]
                              : 0.5 * (present[n / 2 - 1] + present[n / 2]);
  }

  TrainingView view;
  view.dims = dims;
  view.features.reserve(order.size());
  view.targets.reserve(order.size());
  for (std::size_t src : order) {
    std::vector<double> f = data.rows[src].features;
    for (std::size_t c = 0; c < dims; ++c) {
      if (std::isnan(f[c])) f[c] = medians[c];
    }
    view.features.push_back(std::move(f));
    view.targets.push_back(data.rows[src].target_cm);
  }

  ForestModel model;
  model.params = resolved;
  model.range_m = range_m;
  model.feature_names = data.feature_names;
  model.medians = medians;
  model.trees.reserve(static_cast<std::size_t>(resolved.n_trees));

  const SplitRng base(resolved.seed);
  const std::size_t n = view.targets.size();
  for (int t = 0; t < resolved.n_trees; ++t) {
    SplitRng tree_rng = base.child(static_cast<std::uint64_t>(t));
    std::vector<std::size_t> rows;
    rows.reserve(n);
    if (resolved.bootstrap) {
      for (std::size_t i = 0; i < n; ++i) {
        rows.push_back(static_cast<std::size_t>(tree_rng.next_below(n)));
      }
      std::sort(rows.begin(), rows.end());
    } else {
      rows.resize(n);
      std::iota(rows.begin(), rows.end(), 0);
    }
    TreeBuilder builder{view, resolved, tree_rng, {}};
    builder.build(rows, 0);
    model.trees.push_back(RegressionTree{std::move(builder.nodes)});
  }
  return model;
}

double predict_row(const ForestModel& model, std::span<const double> features) {
  if (features.size() != model.feature_names.size()) {
    throw std::invalid_argument("predict: feature count does not match model");
  }
  std::vector<double> imputed(features.begin(), features.end());
  for (std::size_t c = 0; c < imputed.size(); ++c) {
    if (std::isnan(imputed[c])) imputed[c] = model.medians[c];
  }
  const double first = model.trees.front().predict(imputed);
  double sum = 0.0;
  bool all_same = true;
  for (const RegressionTree& tree : model.trees) {
    const double p = tree.predict(imputed);
    sum += p;
    all_same = all_same && (p == first);
  }
  return all_same ? first : sum / static_cast<double>(model.trees.size());
}

double predict_error(const ForestModel& model, const FactorVector& fv) {
  for (const bool with_range : {false, true}) {
    if (model.feature_names == factor_feature_names(with_range)) {
      return predict_row(model, factor_features(fv, with_range));
    }
  }
  throw std::invalid_argument("predict_error: model feature schema mismatch");
}

EvalMetrics evaluate_model(const ForestModel& model, const Dataset& holdout) {
  if (holdout.rows.empty()) {
    throw std::invalid_argument("evaluate_model: empty holdout");
  }
  EvalMetrics m;
  for (const DataRow& row : holdout.rows) {
    const double err = predict_row(model, row.features) - row.target_cm;
    m.mae_cm += std::abs(err);
    m.mse_cm2 += err * err;
  }
  const double n = static_cast<double>(holdout.rows.size());
  m.mae_cm /= n;
  m.mse_cm2 /= n;
  return m;
}

void save_forest(const std::filesystem::path& path, const ForestModel& model) {
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error("cannot write forest model: " + path.string());
  }
  out << "# dorloc forest v1\n";
  out << "range " << format_double(model.range_m) << "\n";
  out << "params " << model.params.n_trees << ' ' << model.params.max_depth << ' '
      << model.params.min_leaf << ' ' << model.params.features_per_split << ' '
      << model.params.seed << ' ' << (model.params.bootstrap ? 1 : 0) << "\n";
  out << "features " << model.feature_names.size();
  for (const std::string& name : model.feature_names) out << ' ' << name;
  out << "\nmedians";
  for (double v : model.medians) out << ' ' << format_double(v);
  out << "\ntrees " << model.trees.size() << "\n";
  for (std::size_t t = 0; t < model.trees.size(); ++t) {
    const RegressionTree& tree = model.trees[t];
    out << "tree " << t << ' ' << tree.nodes.size() << "\n";
    for (const TreeNode& n : tree.nodes) {
      out << "node " << n.feature << ' ' << format_double(n.threshold) << ' '
          << n.left << ' ' << n.right << ' ' << format_double(n.value) << ' '
          << n.count << "\n";
    }
  }
  if (!out) {
    throw std::runtime_error("write failed: " + path.string());
  }
}

ForestModel load_forest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open forest model: " + path.string());
  }
  ForestModel model;
  std::string line;
  RegressionTree* current = nullptr;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream iss(line);
    std::string tag;
    iss >> tag;
    if (tag == "range") {
      iss >> model.range_m;
    } else if (tag == "params") {
      int bootstrap = 1;
      iss >> model.params.n_trees >> model.params.max_depth >>
          model.params.min_leaf >> model.params.features_per_split >>
          model.params.seed >> bootstrap;
      model.params.bootstrap = bootstrap != 0;
    } else if (tag == "features") {
      std::size_t count = 0;
      iss >> count;
      model.feature_names.resize(count);
      for (std::string& name : model.feature_names) iss >> name;
    } else if (tag == "medians") {
      double v;
      while (iss >> v) model.medians.push_back(v);
    } else if (tag == "trees") {
      std::size_t count = 0;
      iss >> count;
      model.trees.reserve(count);
    } else if (tag == "tree") {
      model.trees.emplace_back();
      current = &model.trees.back();
    } else if (tag == "node") {
      if (current == nullptr) {
        throw std::runtime_error(path.string() + ": node record before tree");
      }
      TreeNode n;
      if (!(iss >> n.feature >> n.threshold >> n.left >> n.right >> n.value >>
            n.count)) {
        throw std::runtime_error(path.string() + ": malformed node record");
      }
      current->nodes.push_back(n);
    } else {
      throw std::runtime_error(path.string() + ": unknown record '" + tag + "'");
    }
  }
  if (model.feature_names.empty() || model.trees.empty()) {
    throw std::runtime_error(path.string() + ": incomplete forest model");
  }
  return model;
}

}  // namespace dor
