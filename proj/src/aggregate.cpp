#include "voxagg/aggregate.hpp"

#include <algorithm>
#include <numeric>

namespace voxagg {

std::string_view to_string(SignMode m) {
  switch (m) {
    case SignMode::absolute: return "absolute";
    case SignMode::positive_only: return "positive_only";
    case SignMode::negative_only: return "negative_only";
  }
  return "unknown";
}

SignMode sign_mode_from_string(std::string_view name) {
  for (auto m : {SignMode::absolute, SignMode::positive_only, SignMode::negative_only}) {
    if (name == to_string(m)) return m;
  }
  throw Error(ErrorKind::config, "unknown sign mode '" + std::string(name) + "'");
}

double roi_importance(const AttributionField& e, const ClassMask& roi, SignMode mode) {
  require_same_dims(e.values.dims(), roi.dims(), "roi_importance");
  return roi_importance(e.values.data(), roi, mode);
}

double context_fraction(const AttributionField& e, const ClassMask& own_mask) {
  return roi_importance(e, own_mask, SignMode::absolute);
}

bool ExplanationMatrix::row_defined(Index a) const {
  return values.row(a).unaryExpr([](double v) { return std::isnan(v) ? 0.0 : 1.0; }).sum() > 0;
}

ExplanationMatrix local_matrix(const std::vector<AttributionField>& fields, const RoISet& rois,
                               SignMode mode, const std::vector<std::string>& class_names) {
  ExplanationMatrix m;
  m.rows = class_names;
  m.cols = rois.names();
  m.scope = MatrixScope::local;
  m.sign_mode = mode;
  const auto nrows = static_cast<Index>(m.rows.size());
  const auto ncols = static_cast<Index>(m.cols.size());
  m.values = Eigen::MatrixXd::Constant(nrows, ncols, kUndefined);
  m.support = Eigen::MatrixXi::Zero(nrows, ncols);

  std::vector<bool> seen(m.rows.size(), false);
  for (const auto& field : fields) {
    if (field.class_id < 0 || field.class_id >= nrows) {
      throw Error(ErrorKind::label_mismatch, "attribution for class " + std::to_string(field.class_id) +
                                                 " has no row label");
    }
    if (seen[static_cast<std::size_t>(field.class_id)]) {
      throw Error(ErrorKind::invalid_argument, "duplicate attribution for class " + std::to_string(field.class_id));
    }
    seen[static_cast<std::size_t>(field.class_id)] = true;
    for (Index b = 0; b < ncols; ++b) {
      const double v = roi_importance(field, rois[static_cast<std::size_t>(b)].mask, mode);
      m.values(field.class_id, b) = v;
      m.support(field.class_id, b) = std::isnan(v) ? 0 : 1;
    }
  }
  return m;
}

ExplanationMatrix global_matrix(const std::vector<ExplanationMatrix>& locals) {
  if (locals.empty()) throw Error(ErrorKind::invalid_argument, "global_matrix needs at least one input");
  const auto& first = locals.front();
  ExplanationMatrix g;
  g.rows = first.rows;
  g.cols = first.cols;
  g.scope = MatrixScope::global;
  g.sign_mode = first.sign_mode;
  Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(first.values.rows(), first.values.cols());
  g.support = Eigen::MatrixXi::Zero(first.values.rows(), first.values.cols());
  for (const auto& m : locals) {
    if (m.rows != g.rows || m.cols != g.cols) {
      throw Error(ErrorKind::label_mismatch, "explanation matrices have different labels");
    }
    if (m.sign_mode != g.sign_mode) throw Error(ErrorKind::label_mismatch, "explanation matrices mix sign modes");
    for (Index a = 0; a < mean.rows(); ++a) {
      for (Index b = 0; b < mean.cols(); ++b) {
        const double v = m.values(a, b);
        if (std::isnan(v)) continue;
        g.support(a, b) += 1;
        // Running mean: exact when every input carries the same value.
        mean(a, b) += (v - mean(a, b)) / g.support(a, b);
      }
    }
  }
  g.values = Eigen::MatrixXd::Constant(mean.rows(), mean.cols(), kUndefined);
  for (Index a = 0; a < mean.rows(); ++a) {
    for (Index b = 0; b < mean.cols(); ++b) {
      if (g.support(a, b) > 0) g.values(a, b) = mean(a, b);
    }
  }
  return g;
}

ImportanceGraph topk_graph(const ExplanationMatrix& m, Index k, const std::map<std::string, std::string>& groups) {
  if (k < 1) throw Error(ErrorKind::invalid_argument, "top-k graph needs k >= 1");
  ImportanceGraph g;
  g.k = k;
  auto add_node = [&](const std::string& name) {
    for (const auto& n : g.nodes) {
      if (n.name == name) return;
    }
    auto it = groups.find(name);
    g.nodes.push_back({name, it == groups.end() ? "other" : it->second});
  };
  for (const auto& r : m.rows) add_node(r);
  for (const auto& c : m.cols) add_node(c);

  for (Index a = 0; a < m.values.rows(); ++a) {
    std::vector<Index> order;
    for (Index b = 0; b < m.values.cols(); ++b) {
      if (!std::isnan(m.values(a, b))) order.push_back(b);
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](Index l, Index r) { return m.values(a, l) > m.values(a, r); });
    if (static_cast<Index>(order.size()) > k) order.resize(static_cast<std::size_t>(k));
    for (Index b : order) {
      g.edges.push_back({m.cols[static_cast<std::size_t>(b)], m.rows[static_cast<std::size_t>(a)], m.values(a, b)});
    }
  }
  return g;
}

}  // namespace voxagg
