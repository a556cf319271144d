#pragma once

#include <string>
#include <vector>

namespace cemee {

/// One decision point for one individual.
struct DecisionRow {
  int t = 0;            // 1-based decision index
  int a = 0;            // treatment in {0,1}
  double prob_a = 0.5;  // randomization probability P(A=1 | history)
  int avail = 1;        // availability indicator
  int y = 0;            // proximal binary outcome
  std::vector<double> state;  // values of the panel's state columns, in registry order
};

struct IndividualSeries {
  std::string id;
  std::vector<DecisionRow> rows;  // complete series t = 1..T after normalization
};

struct Cluster {
  std::string id;
  std::vector<IndividualSeries> members;
  int size() const { return static_cast<int>(members.size()); }
};

/// Immutable after construction; reads are safe from any number of threads.
class ClusterPanel {
 public:
  ClusterPanel() = default;
  ClusterPanel(std::vector<Cluster> clusters, std::vector<std::string> state_columns);

  const std::vector<Cluster>& clusters() const { return clusters_; }
  const std::vector<std::string>& state_columns() const { return state_columns_; }

  /// Index into DecisionRow::state, or -1 when the column is not present.
  int column_index(const std::string& name) const;

  int cluster_count() const { return static_cast<int>(clusters_.size()); }
  int individual_count() const;

  /// Shared series length T; 0 for an empty panel.
  int horizon() const;

  /// Orders clusters and members by id and rows by t. Called by load_panel.
  void normalize_order();

 private:
  std::vector<Cluster> clusters_;
  std::vector<std::string> state_columns_;
};

/// Column-name mapping for CSV ingestion. Any field may be renamed; when the
/// availability column is absent from the file, I_t defaults to 1 everywhere.
struct SchemaMap {
  std::string cluster = "cluster_id";
  std::string id = "user_id";
  std::string time = "t";
  std::string treatment = "A";
  std::string prob = "prob_A";
  std::string avail = "avail";
  std::string outcome = "Y";
};

struct Violation {
  std::string cluster;
  std::string individual;
  int t = 0;
  std::string message;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string to_string() const;
};

/// Checks every panel invariant and reports all violations found.
ValidationReport validate_panel(const ClusterPanel& panel);

/// Parses, normalizes row order to (cluster, individual, t) and validates.
/// Throws DataError on the first problem found.
ClusterPanel load_panel(const std::string& path, const SchemaMap& schema = {});

/// Parses and normalizes without enforcing panel invariants, so that
/// validate_panel can report every violation. Structural problems (missing
/// columns, unparsable fields) still throw.
ClusterPanel load_panel_lenient(const std::string& path, const SchemaMap& schema = {});

void write_panel(const ClusterPanel& panel, const std::string& path,
                 const SchemaMap& schema = {});

}  // namespace cemee
