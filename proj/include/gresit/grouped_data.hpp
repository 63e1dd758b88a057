#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "gresit/common.hpp"
#include "gresit/graph.hpp"

namespace gresit {

struct Group {
  std::string name;
  std::size_t dim = 1;

  friend bool operator==(const Group&, const Group&) = default;
};

/// Ordered list of named groups. Column layout is contiguous in list order.
class GroupSpec {
 public:
  GroupSpec() = default;

  explicit GroupSpec(std::vector<Group> groups) : groups_(std::move(groups)) {
    std::unordered_set<std::string> seen;
    offsets_.reserve(groups_.size() + 1);
    offsets_.push_back(0);
    for (const auto& g : groups_) {
      if (g.name.empty()) throw ArgumentError("group name must be non-empty");
      if (g.dim == 0) throw ArgumentError("group '" + g.name + "' has dimension 0");
      if (!seen.insert(g.name).second) throw ArgumentError("duplicate group name '" + g.name + "'");
      offsets_.push_back(offsets_.back() + g.dim);
    }
  }

  /// p groups named g1..gp, each of dimension dim.
  static GroupSpec uniform(std::size_t p, std::size_t dim) {
    std::vector<Group> groups;
    for (std::size_t i = 0; i < p; ++i) groups.push_back({"g" + std::to_string(i + 1), dim});
    return GroupSpec(std::move(groups));
  }

  std::size_t size() const noexcept { return groups_.size(); }
  std::size_t total_dim() const noexcept { return offsets_.empty() ? 0 : offsets_.back(); }
  const std::vector<Group>& groups() const noexcept { return groups_; }
  const Group& group(std::size_t g) const { return groups_.at(g); }
  std::size_t dim(std::size_t g) const { return groups_.at(g).dim; }
  std::size_t offset(std::size_t g) const { return offsets_.at(g); }

  std::size_t index_of(std::string_view name) const {
    for (std::size_t g = 0; g < groups_.size(); ++g)
      if (groups_[g].name == name) return g;
    throw ArgumentError("unknown group '" + std::string(name) + "'");
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& g : groups_) out.push_back(g.name);
    return out;
  }

  /// Column header names "<group>.<k>", k 1-based.
  std::vector<std::string> column_names() const {
    std::vector<std::string> out;
    for (const auto& g : groups_)
      for (std::size_t k = 1; k <= g.dim; ++k) out.push_back(g.name + "." + std::to_string(k));
    return out;
  }

  friend bool operator==(const GroupSpec& a, const GroupSpec& b) { return a.groups_ == b.groups_; }

 private:
  std::vector<Group> groups_;
  std::vector<std::size_t> offsets_;
};

class GroupedDataset {
 public:
  GroupedDataset() = default;

  GroupedDataset(Matrix data, GroupSpec spec, bool standardized = false)
      : data_(std::move(data)), spec_(std::move(spec)), standardized_(standardized) {
    if (data_.rows() < 2) throw DimensionError("dataset needs at least 2 rows");
    if (static_cast<std::size_t>(data_.cols()) != spec_.total_dim()) {
      throw DimensionError("dataset has " + std::to_string(data_.cols()) +
                           " columns but the group spec totals " + std::to_string(spec_.total_dim()));
    }
    if (!data_.allFinite()) throw ArgumentError("dataset contains non-finite entries");
  }

  Index n() const noexcept { return data_.rows(); }
  std::size_t p() const noexcept { return spec_.size(); }
  const Matrix& data() const noexcept { return data_; }
  const GroupSpec& spec() const noexcept { return spec_; }
  bool standardized() const noexcept { return standardized_; }

  /// n x d_g block for group g (a view into the dataset).
  auto group_view(std::size_t g) const {
    if (g >= spec_.size()) throw IndexError("group index " + std::to_string(g) + " out of range");
    return data_.middleCols(static_cast<Index>(spec_.offset(g)), static_cast<Index>(spec_.dim(g)));
  }

  /// Concatenation of the given groups' columns, in the order passed.
  Matrix groups_view(std::span<const Node> groups) const {
    Index cols = 0;
    for (Node g : groups) {
      if (g >= spec_.size()) throw IndexError("group index " + std::to_string(g) + " out of range");
      cols += static_cast<Index>(spec_.dim(g));
    }
    Matrix out(data_.rows(), cols);
    Index c = 0;
    for (Node g : groups) {
      const auto d = static_cast<Index>(spec_.dim(g));
      out.middleCols(c, d) = group_view(g);
      c += d;
    }
    return out;
  }

  Matrix groups_view(const std::vector<Node>& groups) const {
    return groups_view(std::span<const Node>(groups.data(), groups.size()));
  }

  /// Rows selected by index, same spec.
  GroupedDataset rows(const std::vector<Index>& idx) const {
    Matrix sub(static_cast<Index>(idx.size()), data_.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) sub.row(static_cast<Index>(i)) = data_.row(idx[i]);
    return GroupedDataset(std::move(sub), spec_, false);
  }

 private:
  Matrix data_;
  GroupSpec spec_;
  bool standardized_ = false;
};

/// Column-wise z-scoring with the population (1/n) standard deviation.
/// Columns whose spread is negligible relative to their magnitude become zero.
inline Matrix standardize_columns(const Matrix& x) {
  Matrix out(x.rows(), x.cols());
  for (Index c = 0; c < x.cols(); ++c) {
    const double mean = x.col(c).mean();
    const double sd = std::sqrt((x.col(c).array() - mean).square().mean());
    const double scale = std::max(1.0, std::abs(mean));
    if (!(sd > 1e-12 * scale)) {
      out.col(c).setZero();
    } else {
      out.col(c) = (x.col(c).array() - mean) / sd;
    }
  }
  return out;
}

inline GroupedDataset standardize(const GroupedDataset& ds) {
  return GroupedDataset(standardize_columns(ds.data()), ds.spec(), true);
}

// ---------------------------------------------------------------------------
// File formats

class ParseError : public Error {
 public:
  enum class Kind { io, malformed_header, spec_mismatch, non_numeric, ragged_row, bad_json };

  ParseError(Kind kind, const std::string& what, long row = -1, long column = -1)
      : Error(format(what, row, column)), kind_(kind), row_(row), column_(column) {}

  Kind kind() const noexcept { return kind_; }
  long row() const noexcept { return row_; }
  long column() const noexcept { return column_; }

 private:
  static std::string format(const std::string& what, long row, long column) {
    std::string s = what;
    if (row >= 0) s += " [row " + std::to_string(row);
    if (column >= 0) s += (row >= 0 ? ", column " : " [column ") + std::to_string(column);
    if (row >= 0 || column >= 0) s += "]";
    return s;
  }

  Kind kind_;
  long row_;
  long column_;
};

inline nlohmann::json spec_to_json(const GroupSpec& spec) {
  nlohmann::json groups = nlohmann::json::array();
  for (const auto& g : spec.groups()) groups.push_back({{"name", g.name}, {"dim", g.dim}});
  return {{"groups", groups}};
}

inline GroupSpec spec_from_json(const nlohmann::json& j) {
  try {
    std::vector<Group> groups;
    for (const auto& g : j.at("groups")) {
      const auto dim = g.at("dim").get<long long>();
      if (dim < 1) throw ArgumentError("group dimension must be >= 1");
      groups.push_back({g.at("name").get<std::string>(), static_cast<std::size_t>(dim)});
    }
    return GroupSpec(std::move(groups));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::bad_json, std::string("invalid group spec JSON: ") + e.what());
  }
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Shortest decimal string that round-trips the double exactly.
inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace detail

inline nlohmann::json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(ParseError::Kind::io, "cannot open '" + path + "'");
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::bad_json, "'" + path + "': " + e.what());
  }
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw Error("failed writing '" + path + "'");
}

inline GroupSpec load_spec(const std::string& path) { return spec_from_json(read_json_file(path)); }

/// Parses CSV text against a spec. Rows are numbered from 1 (header = row 0).
inline Matrix parse_csv(std::istream& in, const GroupSpec& spec) {
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(ParseError::Kind::malformed_header, "missing CSV header", 0);
  }
  const auto header = detail::split_csv_line(line);
  const auto expected = spec.column_names();
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto name = detail::trim(header[c]);
    const auto dot = name.rfind('.');
    if (name.empty() || dot == std::string_view::npos || dot == 0 || dot + 1 == name.size()) {
      throw ParseError(ParseError::Kind::malformed_header,
                       "header cell '" + std::string(name) + "' is not of the form <group>.<k>", 0,
                       static_cast<long>(c + 1));
    }
  }
  if (header.size() != expected.size()) {
    throw ParseError(ParseError::Kind::spec_mismatch,
                     "header has " + std::to_string(header.size()) + " columns, spec expects " +
                         std::to_string(expected.size()),
                     0);
  }
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (detail::trim(header[c]) != expected[c]) {
      throw ParseError(ParseError::Kind::spec_mismatch,
                       "header cell '" + std::string(detail::trim(header[c])) + "' does not match spec column '" +
                           expected[c] + "'",
                       0, static_cast<long>(c + 1));
    }
  }

  std::vector<double> values;
  long row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (cells.size() != expected.size()) {
      throw ParseError(ParseError::Kind::ragged_row,
                       "expected " + std::to_string(expected.size()) + " cells, found " +
                           std::to_string(cells.size()),
                       row);
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto cell = detail::trim(cells[c]);
      if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
      double v = 0.0;
      const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        throw ParseError(ParseError::Kind::non_numeric, "cell '" + std::string(cell) + "' is not a finite number",
                         row, static_cast<long>(c + 1));
      }
      values.push_back(v);
    }
  }
  const auto cols = static_cast<Index>(expected.size());
  const Index n = cols == 0 ? 0 : static_cast<Index>(values.size()) / cols;
  Matrix m(n, cols);
  for (Index i = 0; i < n; ++i)
    for (Index c = 0; c < cols; ++c) m(i, c) = values[static_cast<std::size_t>(i * cols + c)];
  return m;
}

inline std::string format_csv(const Matrix& data, const GroupSpec& spec) {
  std::string out;
  const auto names = spec.column_names();
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (c) out += ',';
    out += names[c];
  }
  out += '\n';
  for (Index i = 0; i < data.rows(); ++i) {
    for (Index c = 0; c < data.cols(); ++c) {
      if (c) out += ',';
      out += detail::format_double(data(i, c));
    }
    out += '\n';
  }
  return out;
}

inline GroupedDataset load_dataset(const std::string& data_path, const std::string& spec_path) {
  const GroupSpec spec = load_spec(spec_path);
  std::ifstream in(data_path);
  if (!in) throw ParseError(ParseError::Kind::io, "cannot open '" + data_path + "'");
  Matrix m = parse_csv(in, spec);
  return GroupedDataset(std::move(m), spec, false);
}

inline void save_dataset(const GroupedDataset& ds, const std::string& data_path, const std::string& spec_path) {
  write_text_file(data_path, format_csv(ds.data(), ds.spec()));
  write_text_file(spec_path, spec_to_json(ds.spec()).dump(2) + "\n");
}

// Graph JSON: {"nodes": [...], "edges": [[source, target], ...]} using group names.
inline nlohmann::json graph_to_json(const GroupDag& dag, const GroupSpec& spec) {
  if (dag.p() != spec.size()) throw DimensionError("graph and spec disagree on the number of groups");
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& [from, to] : dag.edges()) edges.push_back({spec.group(from).name, spec.group(to).name});
  return {{"nodes", spec.names()}, {"edges", edges}};
}

inline GroupDag graph_from_json(const nlohmann::json& j, const GroupSpec& spec) {
  try {
    const auto nodes = j.at("nodes").get<std::vector<std::string>>();
    if (nodes != spec.names()) {
      throw ParseError(ParseError::Kind::spec_mismatch, "graph node names do not match the dataset's group spec");
    }
    std::vector<Edge> edges;
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(ParseError::Kind::bad_json, "edge must be [source, target]");
      edges.emplace_back(spec.index_of(e[0].get<std::string>()), spec.index_of(e[1].get<std::string>()));
    }
    return GroupDag(spec.size(), edges);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(ParseError::Kind::bad_json, std::string("invalid graph JSON: ") + e.what());
  }
}

}  // namespace gresit
