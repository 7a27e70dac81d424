#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "ocfl/datagen.hpp"
#include "ocfl/federation.hpp"

namespace ocfl {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All reals in CSV/JSON artifacts carry 17 significant digits so a reader
// recovers the exact double.
inline std::string fmt17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

using ordered_json = nlohmann::ordered_json;

namespace detail {

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);  // binary: no platform newline games
  if (!out) throw IoError("io: cannot write " + path.string());
  return out;
}

}  // namespace detail

inline void write_json_file(const std::filesystem::path& path, const ordered_json& j) {
  auto out = detail::open_out(path);
  out << j.dump(2) << "\n";
}

// ---- partition artifacts ----

inline void write_partition_artifacts(const GeneratedData& data,
                                      const std::filesystem::path& dir) {
  const PartitionPlan& plan = data.plan;

  ordered_json manifest;
  manifest["split_kind"] = split_kind_name(plan.kind);
  manifest["alpha"] = plan.alpha;
  manifest["seed"] = plan.seed;
  manifest["n_classes"] = plan.n_classes;
  manifest["feature_dim"] = plan.feature_dim;
  ordered_json clusters = ordered_json::array();
  for (const auto& dist : plan.distributions) {
    ordered_json c;
    c["cluster_id"] = dist.dist_id;
    c["class_support"] = dist.class_support;
    clusters.push_back(std::move(c));
  }
  manifest["clusters"] = std::move(clusters);
  manifest["cluster_of_client"] = plan.cluster_of_client;
  ordered_json clients = ordered_json::array();
  for (const auto& e : plan.clients) {
    ordered_json c;
    c["client_id"] = e.client_id;
    c["cluster"] = e.cluster;
    c["train_count"] = e.train_count;
    c["test_count"] = e.test_count;
    clients.push_back(std::move(c));
  }
  manifest["clients"] = std::move(clients);
  write_json_file(dir / "partition.json", manifest);

  auto write_samples = [&](const std::filesystem::path& path, const LabeledData& d) {
    auto out = detail::open_out(path);
    out << "label";
    for (int f = 0; f < d.dim; ++f) out << ",f" << f;
    out << "\n";
    for (int i = 0; i < d.count; ++i) {
      out << d.labels[i];
      auto row = d.row(i);
      for (double x : row) out << "," << fmt17(x);
      out << "\n";
    }
  };
  for (const auto& client : data.clients) {
    write_samples(dir / ("client_" + std::to_string(client.id) + "_train.csv"), client.train);
    write_samples(dir / ("client_" + std::to_string(client.id) + "_test.csv"), client.test);
  }
  write_samples(dir / "orchestrator_test.csv", data.orchestrator.data);
}

// ---- run telemetry ----

inline void write_rounds_csv(const std::filesystem::path& path,
                             const std::vector<RoundRecord>& records) {
  auto out = detail::open_out(path);
  out << "round,client_id,cluster_id,train_loss,local_f1\n";
  for (const auto& rec : records)
    for (const auto& c : rec.clients)
      out << rec.round << "," << c.client_id << "," << c.cluster << "," << fmt17(c.train_loss)
          << "," << fmt17(c.local_f1) << "\n";
}

inline void write_clusters_csv(const std::filesystem::path& path,
                               const std::vector<RoundRecord>& records) {
  auto out = detail::open_out(path);
  out << "round,cluster_id,size,global_f1\n";
  for (const auto& rec : records)
    for (size_t j = 0; j < rec.cluster_sizes.size(); ++j)
      out << rec.round << "," << j << "," << rec.cluster_sizes[j] << ","
          << fmt17(rec.global_f1[j]) << "\n";
}

inline void write_temperature_csv(const std::filesystem::path& path,
                                  const std::vector<RoundRecord>& records) {
  auto out = detail::open_out(path);
  out << "round,temperature,fired\n";
  for (const auto& rec : records)
    if (rec.temperature.has_value())
      out << rec.round << "," << fmt17(*rec.temperature) << "," << (rec.fired ? 1 : 0) << "\n";
}

inline void write_clustering_csv(const std::filesystem::path& path, const ScoreSeries& scores) {
  auto out = detail::open_out(path);
  out << "round,rand,ami,completeness\n";
  for (const auto& s : scores.per_round)
    out << s.round << "," << fmt17(s.rand) << "," << fmt17(s.ami) << ","
        << fmt17(s.completeness) << "\n";
}

inline void write_ledger_json(const std::filesystem::path& path, const std::string& method,
                              const PerformanceLedger& ledger) {
  ordered_json j;
  j["method"] = method;
  j["PF1"] = ledger.pf1;
  j["GF1"] = ledger.gf1;
  j["DIST"] = ledger.dist;
  write_json_file(path, j);
}

inline void write_error_json(const std::filesystem::path& path, const std::string& method,
                             int round, const std::string& message) {
  ordered_json j;
  j["method"] = method;
  j["round"] = round;
  j["message"] = message;
  write_json_file(path, j);
}

// ---- reading artifacts back ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  int column(const std::string& name) const {
    for (size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return static_cast<int>(i);
    throw IoError("csv: no column '" + name + "'");
  }
};

inline CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("io: cannot read " + path.string());
  CsvTable table;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (line.back() == ',') cells.push_back("");
    if (first) {
      table.header = std::move(cells);
      first = false;
    } else {
      table.rows.push_back(std::move(cells));
    }
  }
  if (first) throw IoError("csv: empty file " + path.string());
  return table;
}

inline ordered_json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("io: cannot read " + path.string());
  try {
    return ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw IoError("io: " + path.string() + ": " + e.what());
  }
}

// ---- plot-ready long format ----

namespace detail {

inline void write_fig_header(std::ofstream& out) { out << "series,x,y\n"; }

}  // namespace detail

// Source tokens are copied verbatim so a join against the original CSV is exact.
inline void write_fig_temperature(const std::filesystem::path& path, const CsvTable& temperature) {
  auto out = detail::open_out(path);
  detail::write_fig_header(out);
  int c_round = temperature.column("round");
  int c_temp = temperature.column("temperature");
  for (const auto& row : temperature.rows)
    out << "temperature," << row[c_round] << "," << row[c_temp] << "\n";
}

inline void write_fig_scores(const std::filesystem::path& path, const CsvTable& clustering,
                             const CsvTable& rounds, const CsvTable& clusters) {
  auto out = detail::open_out(path);
  detail::write_fig_header(out);
  int c_round = clustering.column("round");
  for (const std::string& series : {"rand", "ami", "completeness"}) {
    int c = clustering.column(series);
    for (const auto& row : clustering.rows)
      out << series << "," << row[c_round] << "," << row[c] << "\n";
  }
  // per-round means of the personalization and generalization telemetry
  auto per_round_mean = [&](const CsvTable& t, const std::string& value_col) {
    int cr = t.column("round");
    int cv = t.column(value_col);
    std::vector<std::pair<int, std::pair<double, int>>> acc;  // round -> (sum, n), insertion order
    for (const auto& row : t.rows) {
      int r = std::stoi(row[cr]);
      double v = std::stod(row[cv]);
      auto it = std::find_if(acc.begin(), acc.end(), [&](const auto& a) { return a.first == r; });
      if (it == acc.end())
        acc.push_back({r, {v, 1}});
      else {
        it->second.first += v;
        ++it->second.second;
      }
    }
    return acc;
  };
  for (const auto& [r, sn] : per_round_mean(rounds, "local_f1"))
    out << "pf1," << r << "," << fmt17(sn.first / sn.second) << "\n";
  for (const auto& [r, sn] : per_round_mean(clusters, "global_f1"))
    out << "gf1," << r << "," << fmt17(sn.first / sn.second) << "\n";
}

inline void write_fig_ledger(const std::filesystem::path& path, const ordered_json& ledger) {
  auto out = detail::open_out(path);
  detail::write_fig_header(out);
  std::string series = ledger.contains("method") ? ledger.at("method").get<std::string>()
                                                 : std::string("ledger");
  for (const std::string& key : {"PF1", "GF1", "DIST"}) {
    if (!ledger.contains(key)) throw IoError("ledger.json: missing " + key);
    out << series << "," << key << "," << fmt17(ledger.at(key).get<double>()) << "\n";
  }
}

// ---- sweep table ----

struct ComparisonRow {
  std::string method;
  bool failed = false;
  double mean_rand = 0.0, mean_ami = 0.0, mean_com = 0.0;
  double pf1 = 0.0, gf1 = 0.0, dist = 0.0;
};

inline void write_comparison_csv(const std::filesystem::path& path,
                                 const std::vector<ComparisonRow>& rows) {
  auto out = detail::open_out(path);
  out << "method,mean_rand,mean_ami,mean_com,PF1,GF1,DIST\n";
  for (const auto& r : rows) {
    if (r.failed) {
      out << r.method << ",---,---,---,---,---,---\n";
    } else {
      out << r.method << "," << fmt17(r.mean_rand) << "," << fmt17(r.mean_ami) << ","
          << fmt17(r.mean_com) << "," << fmt17(r.pf1) << "," << fmt17(r.gf1) << ","
          << fmt17(r.dist) << "\n";
    }
  }
}

}  // namespace ocfl
