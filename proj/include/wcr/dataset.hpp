#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

namespace wcr {

// Column binding for CSV files. When `header` is false, column names are
// 0-based column indices written as strings ("0", "3", ...).
struct SchemaSpec {
  std::string outcome;
  std::string regressor;
  std::vector<std::string> controls;  // may be empty (d = 0)
  std::string cluster;
  std::string subcluster;
  char delimiter = ',';
  bool header = true;
};

// One regression sample with a two-level grouping. Labels are opaque
// strings taken verbatim from the source; rows keep file order.
// Immutable after construction; safe to share across threads.
struct Dataset {
  Eigen::VectorXd y;               // outcome
  Eigen::VectorXd x;               // regressor of interest
  Eigen::MatrixXd w;               // controls, n x d (d may be 0)
  std::vector<std::string> cluster_id;
  std::vector<std::string> subcluster_id;

  long n() const { return y.size(); }
  int d() const { return static_cast<int>(w.cols()); }
};

// Nesting map cluster -> sub-clusters -> row indices, with deterministic
// lexicographic ordering of labels so that anything indexed by sub-cluster
// position is reproducible across runs.
struct ClusterLayout {
  std::vector<std::string> cluster_labels;     // size r, sorted
  std::vector<std::string> subcluster_labels;  // size q, grouped by cluster, sorted within
  std::vector<int> cluster_of;                 // size q, cluster index per sub-cluster
  std::vector<std::vector<int>> members;       // size q, row indices per sub-cluster
  std::vector<int> q_k;                        // size r, sub-clusters per cluster
  std::vector<int> n_j;                        // size q, rows per sub-cluster
  std::vector<int> cluster_begin;              // size r+1, prefix offsets into sub-cluster arrays
  int r = 0;
  int q = 0;
  long n = 0;

  // Global sub-cluster indices belonging to cluster k.
  std::pair<int, int> subcluster_range(int k) const {
    return {cluster_begin[k], cluster_begin[k + 1]};
  }
};

// Throws ValidationError if invariants fail: n >= 1, all numerics finite,
// no empty labels, every sub-cluster label nested under a single cluster.
void validate_dataset(const Dataset& ds);

// Reads a delimited text file per `schema`. Throws SchemaError, ParseError
// (with 1-based file line numbers) or ValidationError.
Dataset load_dataset(const std::string& path, const SchemaSpec& schema);

// Writes columns in the order outcome, regressor, controls, cluster,
// subcluster. Floats are printed with 17 significant digits so a reload
// reproduces the dataset bit for bit.
void write_dataset(const Dataset& ds, const std::string& path,
                   const SchemaSpec& schema);

ClusterLayout build_layout(const Dataset& ds);

// Row indices per cluster (each cluster's sub-cluster member lists merged).
std::vector<std::vector<int>> cluster_members(const ClusterLayout& layout);

}  // namespace wcr
