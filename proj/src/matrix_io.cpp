#include <array>
#include <charconv>
#include <cstdio>

#include "voxagg/aggregate.hpp"

namespace voxagg {

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

std::string dot_id(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"' || ch == '\\') out += '\\';
    out += ch;
  }
  return out + "\"";
}

nlohmann::json nullable(double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); }

}  // namespace

std::string format_double(double v) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

std::string to_csv(const ExplanationMatrix& m) {
  std::string out = "class";
  for (const auto& c : m.cols) out += "," + csv_field(c);
  out += "\n";
  for (Index a = 0; a < m.values.rows(); ++a) {
    out += csv_field(m.rows[static_cast<std::size_t>(a)]);
    for (Index b = 0; b < m.values.cols(); ++b) {
      out += ",";
      if (!std::isnan(m.values(a, b))) out += format_double(m.values(a, b));
    }
    out += "\n";
  }
  return out;
}

nlohmann::json to_json(const ExplanationMatrix& m) {
  nlohmann::json values = nlohmann::json::array();
  nlohmann::json support = nlohmann::json::array();
  for (Index a = 0; a < m.values.rows(); ++a) {
    nlohmann::json vrow = nlohmann::json::array();
    nlohmann::json srow = nlohmann::json::array();
    for (Index b = 0; b < m.values.cols(); ++b) {
      vrow.push_back(nullable(m.values(a, b)));
      srow.push_back(m.support(a, b));
    }
    values.push_back(std::move(vrow));
    support.push_back(std::move(srow));
  }
  return {{"rows", m.rows},
          {"cols", m.cols},
          {"values", std::move(values)},
          {"support", std::move(support)},
          {"sign_mode", to_string(m.sign_mode)},
          {"scope", m.scope == MatrixScope::local ? "local" : "global"}};
}

ExplanationMatrix matrix_from_json(const nlohmann::json& j) {
  ExplanationMatrix m;
  try {
    m.rows = j.at("rows").get<std::vector<std::string>>();
    m.cols = j.at("cols").get<std::vector<std::string>>();
    m.sign_mode = sign_mode_from_string(j.value("sign_mode", "absolute"));
    m.scope = j.value("scope", "local") == "global" ? MatrixScope::global : MatrixScope::local;
    const auto nr = static_cast<Index>(m.rows.size());
    const auto nc = static_cast<Index>(m.cols.size());
    const auto& values = j.at("values");
    if (values.size() != m.rows.size()) throw Error(ErrorKind::bad_header, "matrix row count mismatch");
    m.values = Eigen::MatrixXd::Constant(nr, nc, kUndefined);
    m.support = Eigen::MatrixXi::Zero(nr, nc);
    const bool has_support = j.contains("support");
    for (Index a = 0; a < nr; ++a) {
      const auto& row = values[static_cast<std::size_t>(a)];
      if (row.size() != m.cols.size()) throw Error(ErrorKind::bad_header, "matrix column count mismatch");
      for (Index b = 0; b < nc; ++b) {
        const auto& cell = row[static_cast<std::size_t>(b)];
        if (!cell.is_null()) m.values(a, b) = cell.get<double>();
        m.support(a, b) = has_support ? j["support"][static_cast<std::size_t>(a)][static_cast<std::size_t>(b)].get<int>()
                                      : (cell.is_null() ? 0 : 1);
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::bad_header, std::string("malformed explanation matrix: ") + e.what());
  }
  return m;
}

std::string to_dot(const ImportanceGraph& g) {
  std::string out = "digraph importance {\n";
  for (const auto& n : g.nodes) out += "  " + dot_id(n.name) + " [group=" + dot_id(n.group) + "];\n";
  for (const auto& e : g.edges) {
    std::array<char, 64> w{};
    std::snprintf(w.data(), w.size(), "%.4f", e.weight);
    out += "  " + dot_id(e.from) + " -> " + dot_id(e.to) + " [weight=\"" + w.data() + "\"];\n";
  }
  return out + "}\n";
}

nlohmann::json to_json(const ImportanceGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"name", n.name}, {"group", n.group}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({{"from", e.from}, {"to", e.to}, {"weight", e.weight}});
  return {{"k", g.k}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace voxagg
