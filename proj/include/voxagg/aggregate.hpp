#pragma once

#include <Eigen/Core>

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "voxagg/attribution.hpp"
#include "voxagg/volume.hpp"

namespace voxagg {

enum class SignMode { absolute, positive_only, negative_only };
enum class MatrixScope { local, global };

std::string_view to_string(SignMode m);
SignMode sign_mode_from_string(std::string_view name);

inline constexpr double kUndefined = std::numeric_limits<double>::quiet_NaN();

/// L1 mass of the attributions selected by `mode`.
template <typename Derived>
double attribution_mass(const Eigen::MatrixBase<Derived>& e, SignMode mode) {
  switch (mode) {
    case SignMode::absolute: return e.template cast<double>().cwiseAbs().sum();
    case SignMode::positive_only: return e.template cast<double>().cwiseMax(0.0).sum();
    case SignMode::negative_only: return -e.template cast<double>().cwiseMin(0.0).sum();
  }
  return 0.0;
}

/// Mass accuracy ||e restricted to roi||_1 / ||e||_1, both masses taken over
/// the same sign selection. NaN when the field has no such mass.
template <typename Derived>
double roi_importance(const Eigen::MatrixBase<Derived>& e, const ClassMask& roi, SignMode mode) {
  if (e.size() != roi.size()) throw Error(ErrorKind::dim_mismatch, "roi_importance: size mismatch");
  const double total = attribution_mass(e, mode);
  if (!(total > 0.0)) return kUndefined;
  const auto inside = e.template cast<double>().cwiseProduct(roi.data().template cast<double>().matrix());
  return attribution_mass(inside, mode) / total;
}

double roi_importance(const AttributionField& e, const ClassMask& roi, SignMode mode);

/// Share of absolute attribution mass inside the explained class's own
/// predicted region; 1 - result is the context share.
double context_fraction(const AttributionField& e, const ClassMask& own_mask);

/// RoI-importance matrix: rows are explained classes, columns RoIs.
/// Undefined cells hold NaN; `support` counts contributing inputs.
struct ExplanationMatrix {
  std::vector<std::string> rows;
  std::vector<std::string> cols;
  Eigen::MatrixXd values;
  Eigen::MatrixXi support;
  MatrixScope scope = MatrixScope::local;
  SignMode sign_mode = SignMode::absolute;

  bool row_defined(Index a) const;
};

/// Cell (a, b) = roi_importance(e_a, R_b). Rows follow `class_names`; a class
/// with no field gets a NaN row.
ExplanationMatrix local_matrix(const std::vector<AttributionField>& fields, const RoISet& rois,
                               SignMode mode, const std::vector<std::string>& class_names);

/// Cell-wise mean over the inputs where the cell is defined.
ExplanationMatrix global_matrix(const std::vector<ExplanationMatrix>& locals);

struct GraphNode {
  std::string name;
  std::string group;
};

/// Edge b -> a carrying e_{b -> a}.
struct GraphEdge {
  std::string from;
  std::string to;
  double weight = 0.0;
};

struct ImportanceGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
  Index k = 3;
};

/// For every row keeps the k largest defined cells as in-edges; ties go to
/// the earlier column. Nodes absent from `groups` are tagged "other".
ImportanceGraph topk_graph(const ExplanationMatrix& m, Index k,
                           const std::map<std::string, std::string>& groups = {});

// Serialization.
std::string to_csv(const ExplanationMatrix& m);
nlohmann::json to_json(const ExplanationMatrix& m);
ExplanationMatrix matrix_from_json(const nlohmann::json& j);
std::string to_dot(const ImportanceGraph& g);
nlohmann::json to_json(const ImportanceGraph& g);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace voxagg
