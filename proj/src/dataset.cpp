#include "wcr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "wcr/errors.hpp"

namespace wcr {

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == delim) {
      out.push_back(field);
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  out.push_back(field);
  return out;
}

double parse_cell(const std::string& cell, const std::string& column,
                  long line_no) {
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse '" +
                     cell + "' as a number in column '" + column + "'");
  }
  return value;
}

// Resolve a schema column name to an index, either through the header map or
// as a literal 0-based index when the file has no header.
int resolve_column(const std::string& name,
                   const std::map<std::string, int>& header_index,
                   bool has_header, int ncols) {
  if (has_header) {
    auto it = header_index.find(name);
    if (it == header_index.end()) {
      throw SchemaError("column '" + name + "' not found in header");
    }
    return it->second;
  }
  int idx = -1;
  auto [ptr, ec] = std::from_chars(name.data(), name.data() + name.size(), idx);
  if (ec != std::errc() || ptr != name.data() + name.size() || idx < 0 ||
      idx >= ncols) {
    throw SchemaError("column '" + name +
                      "' is not a valid 0-based index for a headerless file");
  }
  return idx;
}

void check_schema_distinct(const SchemaSpec& schema) {
  std::vector<std::string> names = {schema.outcome, schema.regressor,
                                    schema.cluster, schema.subcluster};
  names.insert(names.end(), schema.controls.begin(), schema.controls.end());
  std::vector<std::string> sorted = names;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw SchemaError("schema columns must be distinct");
  }
}

}  // namespace

void validate_dataset(const Dataset& ds) {
  const long n = ds.n();
  if (n < 1) throw ValidationError("dataset must contain at least one row");
  if (ds.x.size() != n || ds.w.rows() != n ||
      static_cast<long>(ds.cluster_id.size()) != n ||
      static_cast<long>(ds.subcluster_id.size()) != n) {
    throw ValidationError("dataset columns have mismatched lengths");
  }
  for (long i = 0; i < n; ++i) {
    if (!std::isfinite(ds.y[i]) || !std::isfinite(ds.x[i])) {
      throw ValidationError("non-finite value in row " + std::to_string(i + 1));
    }
    for (int c = 0; c < ds.d(); ++c) {
      if (!std::isfinite(ds.w(i, c))) {
        throw ValidationError("non-finite control in row " +
                              std::to_string(i + 1));
      }
    }
    if (ds.cluster_id[i].empty() || ds.subcluster_id[i].empty()) {
      throw ValidationError("empty group label in row " + std::to_string(i + 1));
    }
  }
  // Nesting: a sub-cluster label may appear under exactly one cluster label.
  std::map<std::string, std::string> parent;
  for (long i = 0; i < n; ++i) {
    auto [it, inserted] =
        parent.emplace(ds.subcluster_id[i], ds.cluster_id[i]);
    if (!inserted && it->second != ds.cluster_id[i]) {
      throw ValidationError("sub-cluster '" + ds.subcluster_id[i] +
                            "' appears under clusters '" + it->second +
                            "' and '" + ds.cluster_id[i] + "'");
    }
  }
}

Dataset load_dataset(const std::string& path, const SchemaSpec& schema) {
  check_schema_distinct(schema);
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) throw ParseError(path + ": file is empty");

  std::map<std::string, int> header_index;
  long first_data_line = 0;
  int ncols = static_cast<int>(split_line(lines[0], schema.delimiter).size());
  if (schema.header) {
    auto header = split_line(lines[0], schema.delimiter);
    for (int i = 0; i < static_cast<int>(header.size()); ++i) {
      header_index.emplace(header[i], i);
    }
    first_data_line = 1;
  }

  const int col_y = resolve_column(schema.outcome, header_index, schema.header, ncols);
  const int col_x = resolve_column(schema.regressor, header_index, schema.header, ncols);
  const int col_k = resolve_column(schema.cluster, header_index, schema.header, ncols);
  const int col_j = resolve_column(schema.subcluster, header_index, schema.header, ncols);
  std::vector<int> col_w;
  for (const auto& name : schema.controls) {
    col_w.push_back(resolve_column(name, header_index, schema.header, ncols));
  }

  const long nrows = static_cast<long>(lines.size()) - first_data_line;
  if (nrows < 1) throw ParseError(path + ": no data rows");
  const int d = static_cast<int>(col_w.size());

  Dataset ds;
  ds.y.resize(nrows);
  ds.x.resize(nrows);
  ds.w.resize(nrows, d);
  ds.cluster_id.resize(nrows);
  ds.subcluster_id.resize(nrows);

  for (long row = 0; row < nrows; ++row) {
    const long line_no = first_data_line + row + 1;  // 1-based file line
    auto fields = split_line(lines[first_data_line + row], schema.delimiter);
    const int needed = std::max({col_y, col_x, col_k, col_j,
                                 col_w.empty() ? -1 : *std::max_element(
                                                          col_w.begin(),
                                                          col_w.end())});
    if (static_cast<int>(fields.size()) <= needed) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": expected at least " + std::to_string(needed + 1) +
                       " fields, got " + std::to_string(fields.size()));
    }
    ds.y[row] = parse_cell(fields[col_y], schema.outcome, line_no);
    ds.x[row] = parse_cell(fields[col_x], schema.regressor, line_no);
    for (int c = 0; c < d; ++c) {
      ds.w(row, c) = parse_cell(fields[col_w[c]], schema.controls[c], line_no);
    }
    ds.cluster_id[row] = fields[col_k];
    ds.subcluster_id[row] = fields[col_j];
  }

  validate_dataset(ds);
  return ds;
}

void write_dataset(const Dataset& ds, const std::string& path,
                   const SchemaSpec& schema) {
  check_schema_distinct(schema);
  if (static_cast<int>(schema.controls.size()) != ds.d()) {
    throw SchemaError("schema lists " + std::to_string(schema.controls.size()) +
                      " controls but dataset has " + std::to_string(ds.d()));
  }
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open file for writing: " + path);
  const char delim = schema.delimiter;

  auto fmt = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
  };

  if (schema.header) {
    out << schema.outcome << delim << schema.regressor;
    for (const auto& c : schema.controls) out << delim << c;
    out << delim << schema.cluster << delim << schema.subcluster << '\n';
  }
  for (long i = 0; i < ds.n(); ++i) {
    out << fmt(ds.y[i]) << delim << fmt(ds.x[i]);
    for (int c = 0; c < ds.d(); ++c) out << delim << fmt(ds.w(i, c));
    out << delim << ds.cluster_id[i] << delim << ds.subcluster_id[i] << '\n';
  }
}

ClusterLayout build_layout(const Dataset& ds) {
  validate_dataset(ds);

  // cluster label -> (sub-cluster label -> rows); std::map keeps both levels
  // sorted lexicographically.
  std::map<std::string, std::map<std::string, std::vector<int>>> tree;
  for (long i = 0; i < ds.n(); ++i) {
    tree[ds.cluster_id[i]][ds.subcluster_id[i]].push_back(static_cast<int>(i));
  }

  ClusterLayout layout;
  layout.n = ds.n();
  layout.r = static_cast<int>(tree.size());
  layout.cluster_begin.push_back(0);
  for (auto& [k_label, subs] : tree) {
    layout.cluster_labels.push_back(k_label);
    layout.q_k.push_back(static_cast<int>(subs.size()));
    for (auto& [j_label, rows] : subs) {
      layout.subcluster_labels.push_back(j_label);
      layout.cluster_of.push_back(static_cast<int>(layout.cluster_labels.size()) - 1);
      layout.n_j.push_back(static_cast<int>(rows.size()));
      layout.members.push_back(std::move(rows));
    }
    layout.cluster_begin.push_back(static_cast<int>(layout.subcluster_labels.size()));
  }
  layout.q = static_cast<int>(layout.subcluster_labels.size());
  return layout;
}

std::vector<std::vector<int>> cluster_members(const ClusterLayout& layout) {
  std::vector<std::vector<int>> groups(layout.r);
  for (int j = 0; j < layout.q; ++j) {
    auto& g = groups[layout.cluster_of[j]];
    g.insert(g.end(), layout.members[j].begin(), layout.members[j].end());
  }
  return groups;
}

}  // namespace wcr
