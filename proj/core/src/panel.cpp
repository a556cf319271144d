#include "cemee/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cemee/errors.hpp"

namespace cemee {

ClusterPanel::ClusterPanel(std::vector<Cluster> clusters,
                           std::vector<std::string> state_columns)
    : clusters_(std::move(clusters)), state_columns_(std::move(state_columns)) {}

int ClusterPanel::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < state_columns_.size(); ++i)
    if (state_columns_[i] == name) return static_cast<int>(i);
  return -1;
}

int ClusterPanel::individual_count() const {
  int n = 0;
  for (const auto& c : clusters_) n += c.size();
  return n;
}

int ClusterPanel::horizon() const {
  for (const auto& c : clusters_)
    for (const auto& m : c.members) return static_cast<int>(m.rows.size());
  return 0;
}

void ClusterPanel::normalize_order() {
  for (auto& c : clusters_) {
    for (auto& m : c.members)
      std::sort(m.rows.begin(), m.rows.end(),
                [](const DecisionRow& a, const DecisionRow& b) { return a.t < b.t; });
    std::sort(c.members.begin(), c.members.end(),
              [](const IndividualSeries& a, const IndividualSeries& b) { return a.id < b.id; });
  }
  std::sort(clusters_.begin(), clusters_.end(),
            [](const Cluster& a, const Cluster& b) { return a.id < b.id; });
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  if (ok()) {
    os << "panel valid\n";
    return os.str();
  }
  for (const auto& v : violations)
    os << "cluster=" << v.cluster << " individual=" << v.individual << " t=" << v.t
       << ": " << v.message << "\n";
  return os.str();
}

ValidationReport validate_panel(const ClusterPanel& panel) {
  ValidationReport report;
  auto add = [&](const std::string& c, const std::string& i, int t, std::string msg) {
    report.violations.push_back({c, i, t, std::move(msg)});
  };

  std::set<std::string> cluster_ids;
  const int horizon = panel.horizon();
  for (const auto& cluster : panel.clusters()) {
    if (!cluster_ids.insert(cluster.id).second)
      add(cluster.id, "", 0, "duplicate cluster id");
    if (cluster.members.empty()) add(cluster.id, "", 0, "empty cluster");
    std::set<std::string> member_ids;
    for (const auto& member : cluster.members) {
      if (!member_ids.insert(member.id).second)
        add(cluster.id, member.id, 0, "duplicate individual id");
      if (static_cast<int>(member.rows.size()) != horizon)
        add(cluster.id, member.id, 0, "inconsistent horizon across individuals");
      int expected_t = 1;
      for (const auto& row : member.rows) {
        if (row.t != expected_t) {
          if (row.t == expected_t - 1)
            add(cluster.id, member.id, row.t, "duplicate decision index");
          else
            add(cluster.id, member.id, row.t, "gap in decision index");
          expected_t = row.t;  // keep reporting from here
        }
        ++expected_t;
        if (row.y != 0 && row.y != 1)
          add(cluster.id, member.id, row.t, "non-binary outcome");
        if (row.a != 0 && row.a != 1)
          add(cluster.id, member.id, row.t, "non-binary treatment");
        if (row.avail != 0 && row.avail != 1)
          add(cluster.id, member.id, row.t, "non-binary availability");
        if (!(row.prob_a > 0.0 && row.prob_a < 1.0))
          add(cluster.id, member.id, row.t, "probability out of open interval");
        if (row.a == 1 && row.avail == 0)
          add(cluster.id, member.id, row.t, "treated while unavailable");
        if (row.state.size() != panel.state_columns().size())
          add(cluster.id, member.id, row.t, "missing state value");
      }
    }
  }
  return report;
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("could not parse " + what + " value '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("could not parse " + what + " value '" + s + "'");
  return v;
}

int parse_indicator(const std::string& s, const std::string& what) {
  // Accept integer-valued fields ("0", "1", "1.0", also "2"); domain checks
  // are validate_panel's job so lenient loads can report them.
  const double v = parse_double(s, what);
  const long long r = std::llround(v);
  if (std::fabs(v - static_cast<double>(r)) > 1e-9)
    throw DataError(what + " value '" + s + "' is not an integer");
  return static_cast<int>(r);
}

ClusterPanel parse_panel_csv(const std::string& path, const SchemaMap& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open panel file '" + path + "'");

  std::string header_line;
  if (!std::getline(in, header_line)) throw DataError("empty panel file '" + path + "'");
  const auto header = split_csv_line(header_line);

  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    return -1;
  };
  auto require_col = [&](const std::string& name) {
    int idx = find_col(name);
    if (idx < 0) throw DataError("missing column '" + name + "' in '" + path + "'");
    return idx;
  };

  const int c_cluster = require_col(schema.cluster);
  const int c_id = require_col(schema.id);
  const int c_time = require_col(schema.time);
  const int c_a = require_col(schema.treatment);
  const int c_prob = require_col(schema.prob);
  const int c_avail = find_col(schema.avail);  // optional: defaults to available
  const int c_y = require_col(schema.outcome);

  std::vector<std::string> state_columns;
  std::vector<int> state_idx;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const int idx = static_cast<int>(i);
    if (idx == c_cluster || idx == c_id || idx == c_time || idx == c_a ||
        idx == c_prob || idx == c_avail || idx == c_y)
      continue;
    state_columns.push_back(header[i]);
    state_idx.push_back(idx);
  }

  std::map<std::string, std::map<std::string, IndividualSeries>> grouped;
  std::string line;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    DecisionRow row;
    row.t = parse_int(fields[c_time], schema.time);
    row.a = parse_indicator(fields[c_a], schema.treatment);
    row.prob_a = parse_double(fields[c_prob], schema.prob);
    row.avail = c_avail >= 0 ? parse_indicator(fields[c_avail], schema.avail) : 1;
    row.y = parse_indicator(fields[c_y], schema.outcome);
    row.state.reserve(state_idx.size());
    for (int idx : state_idx) row.state.push_back(parse_double(fields[idx], header[idx]));
    grouped[fields[c_cluster]][fields[c_id]].rows.push_back(row);
  }

  std::vector<Cluster> clusters;
  clusters.reserve(grouped.size());
  for (auto& [cid, members] : grouped) {
    Cluster cluster;
    cluster.id = cid;
    for (auto& [mid, series] : members) {
      series.id = mid;
      cluster.members.push_back(std::move(series));
    }
    clusters.push_back(std::move(cluster));
  }

  ClusterPanel panel(std::move(clusters), std::move(state_columns));
  panel.normalize_order();
  return panel;
}

}  // namespace

ClusterPanel load_panel(const std::string& path, const SchemaMap& schema) {
  ClusterPanel panel = parse_panel_csv(path, schema);
  const auto report = validate_panel(panel);
  if (!report.ok()) {
    const auto& v = report.violations.front();
    throw DataError("invalid panel '" + path + "': cluster=" + v.cluster +
                    " individual=" + v.individual + " t=" + std::to_string(v.t) +
                    ": " + v.message);
  }
  return panel;
}

ClusterPanel load_panel_lenient(const std::string& path, const SchemaMap& schema) {
  return parse_panel_csv(path, schema);
}

void write_panel(const ClusterPanel& panel, const std::string& path,
                 const SchemaMap& schema) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open '" + path + "' for writing");

  out << schema.cluster << ',' << schema.id << ',' << schema.time << ','
      << schema.treatment << ',' << schema.prob << ',' << schema.avail << ','
      << schema.outcome;
  for (const auto& col : panel.state_columns()) out << ',' << col;
  out << '\n';

  char buf[40];
  auto put_double = [&](double v) {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    out << ',' << buf;
  };
  for (const auto& cluster : panel.clusters()) {
    for (const auto& member : cluster.members) {
      for (const auto& row : member.rows) {
        out << cluster.id << ',' << member.id << ',' << row.t << ',' << row.a;
        put_double(row.prob_a);
        out << ',' << row.avail << ',' << row.y;
        for (double s : row.state) put_double(s);
        out << '\n';
      }
    }
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

}  // namespace cemee
