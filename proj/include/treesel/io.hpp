#pragma once

#include <charconv>
#include <cstddef>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treesel/baseline.hpp"
#include "treesel/error.hpp"
#include "treesel/model.hpp"
#include "treesel/protocol.hpp"
#include "treesel/riccati.hpp"
#include "treesel/scheduler.hpp"
#include "treesel/testbed.hpp"

namespace treesel {

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

/// A system together with its communication tree, optionally with a budget.
struct ModelFile {
  LinearSystem system;
  SensorTree tree;
  std::optional<double> budget;
};

namespace detail {

inline nlohmann::json matrix_to_json(const Matrix& m) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out.push_back(m(i, j));
  return out;
}

inline Matrix matrix_from_json(const nlohmann::json& j, Eigen::Index rows, Eigen::Index cols, const char* name) {
  if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols))
    throw Error(ErrorKind::DimensionMismatch, std::string(name) + " must hold " + std::to_string(rows * cols) +
                                                  " numbers in row-major order");
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = j.at(k++).get<double>();
  return m;
}

inline const nlohmann::json& field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) throw Error(ErrorKind::Parse, std::string("missing field '") + name + "'");
  return j.at(name);
}

inline nlohmann::json parse_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, path + ": " + e.what());
  }
}

inline std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
  return out;
}

}  // namespace detail

inline nlohmann::json model_to_json(const ModelFile& model) {
  const LinearSystem& s = model.system;
  nlohmann::json j;
  j["n"] = s.n();
  j["m"] = s.m();
  j["A"] = detail::matrix_to_json(s.A);
  j["Q"] = detail::matrix_to_json(s.Q);
  j["C"] = detail::matrix_to_json(s.C);
  j["r"] = detail::matrix_to_json(s.r);
  j["Sigma0"] = detail::matrix_to_json(s.Sigma0);
  j["parent"] = model.tree.parents();
  j["cost"] = model.tree.costs();
  if (model.budget) j["budget"] = *model.budget;
  return j;
}

/// Parses and validates (system invariants, tree shape, matching sizes).
inline ModelFile model_from_json(const nlohmann::json& j) {
  try {
    ModelFile model;
    const auto n = detail::field(j, "n").get<Eigen::Index>();
    const auto m = detail::field(j, "m").get<Eigen::Index>();
    if (n <= 0 || m < 0) throw Error(ErrorKind::DimensionMismatch, "n must be positive and m non-negative");
    LinearSystem& s = model.system;
    s.A = detail::matrix_from_json(detail::field(j, "A"), n, n, "A");
    s.Q = detail::matrix_from_json(detail::field(j, "Q"), n, n, "Q");
    s.C = detail::matrix_from_json(detail::field(j, "C"), m, n, "C");
    s.r = detail::matrix_from_json(detail::field(j, "r"), m, 1, "r");
    s.Sigma0 = detail::matrix_from_json(detail::field(j, "Sigma0"), n, n, "Sigma0");
    auto parent = detail::field(j, "parent").get<std::vector<std::size_t>>();
    auto cost = detail::field(j, "cost").get<std::vector<double>>();
    if (parent.size() != static_cast<std::size_t>(m) || cost.size() != static_cast<std::size_t>(m))
      throw Error(ErrorKind::DimensionMismatch, "parent and cost need one entry per sensor");
    model.tree = SensorTree(std::move(parent), std::move(cost));
    if (j.contains("budget")) model.budget = j.at("budget").get<double>();
    validate_system(s);
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, e.what());
  }
}

inline ModelFile read_model(const std::string& path) { return model_from_json(detail::parse_json_file(path)); }

inline void write_model(const std::string& path, const ModelFile& model) {
  auto out = detail::open_output(path);
  out << model_to_json(model).dump(2) << '\n';
}

// CSV exporters. Numbers use the shortest round-trip form so reruns are
// byte-identical.

inline void write_sample_path_csv(std::ostream& out, const SamplePath& path) {
  out << "step,trace_P,selected_tree_id\n";
  for (std::size_t k = 0; k < path.trace.size(); ++k)
    out << k + 1 << ',' << format_double(path.trace[k]) << ',' << path.tree_index[k] << '\n';
}

inline void write_distribution_csv(std::ostream& out, const TreeDistribution& dist) {
  out << "tree_id,member_list,probability\n";
  for (std::size_t j = 0; j < dist.entries.size(); ++j)
    out << j << ',' << dist.entries[j].tree.to_string() << ',' << format_double(dist.entries[j].probability) << '\n';
}

inline void write_greedy_csv(std::ostream& out, const GreedyTrace& trace) {
  const Eigen::Index m = trace.p_star.size();
  out << "outer_iter,trace_L";
  for (Eigen::Index i = 1; i <= m; ++i) out << ",p_" << i;
  out << '\n';
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    const auto& it = trace.iterates[k];
    out << k << ',' << format_double(it.trace);
    for (Eigen::Index i = 0; i < m; ++i) out << ',' << format_double(it.p(i));
    out << '\n';
  }
}

inline void write_round_log_csv(std::ostream& out, const std::vector<RoundOutcome>& log) {
  out << "round,alpha,selected_members,energy,packet_count\n";
  for (std::size_t k = 0; k < log.size(); ++k) {
    const auto& r = log[k];
    out << k + 1 << ',' << format_double(r.alpha) << ',' << r.selected.to_string() << ',' << format_double(r.energy)
        << ',' << r.transmissions.size() << '\n';
  }
}

inline void write_baseline_csv(std::ostream& out, const DeterministicResult& result) {
  out << "tree_members,energy,trace_P_inf\n";
  for (const auto& c : result.candidates)
    out << c.tree.to_string() << ',' << format_double(c.energy) << ','
        << (std::isfinite(c.trace) ? format_double(c.trace) : std::string("inf")) << '\n';
}

inline void write_positions_csv(std::ostream& out, const std::vector<Point>& positions, const SensorTree& tree) {
  out << "sensor,x,y,parent,cost\n";
  for (std::size_t i = 0; i < positions.size(); ++i)
    out << i + 1 << ',' << format_double(positions[i].x) << ',' << format_double(positions[i].y) << ','
        << tree.parent(i + 1) << ',' << format_double(tree.cost(i + 1)) << '\n';
}

inline void write_text_file(const std::string& path, const std::string& text) {
  auto out = detail::open_output(path);
  out << text;
  if (!out) throw Error(ErrorKind::Io, "failed writing " + path);
}

template <typename Writer>
void write_csv_file(const std::string& path, Writer&& writer) {
  std::ostringstream buf;
  writer(buf);
  write_text_file(path, buf.str());
}

}  // namespace treesel
