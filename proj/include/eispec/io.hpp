#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eispec/common.hpp"
#include "eispec/features.hpp"
#include "eispec/filter.hpp"
#include "eispec/spectrum.hpp"
#include "eispec/timeseries.hpp"

namespace eispec {

inline constexpr const char* kVersion = "0.1.0";

using json = nlohmann::json;

// ---------------------------------------------------------------------
// text + number formatting
// ---------------------------------------------------------------------

// Shortest round-trip decimal form, stable across runs for replay.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = 0.0;
  std::sscanf(buf, "%lf", &back);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[32];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      std::sscanf(shorter, "%lf", &back);
      if (back == v) return shorter;
    }
  }
  return buf;
}

inline std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("io: cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::string& path,
                            const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw io_error("io: cannot write '" + path + "'");
  out << content;
  if (!out) throw io_error("io: short write to '" + path + "'");
}

// ---------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      cells.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  cells.push_back(cur);
  return cells;
}

inline std::vector<std::vector<std::string>> read_csv(const std::string& path) {
  const std::string text = read_text_file(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  std::istringstream in(text);
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    rows.push_back(split_csv_line(line));
  }
  if (rows.empty()) throw data_error("io: '" + path + "' has no rows");
  return rows;
}

inline double parse_cell(const std::string& cell, const std::string& path,
                         std::size_t row, std::size_t col) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(cell, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != cell.size() || cell.empty())
    throw data_error("io: non-numeric cell '" + cell + "' at row " +
                     std::to_string(row + 1) + ", column " +
                     std::to_string(col + 1) + " of '" + path + "'");
  return v;
}

// Raw numeric matrix, rows = channels, columns = samples.
inline std::vector<std::vector<double>> read_matrix_csv(
    const std::string& path) {
  const auto rows = read_csv(path);
  std::vector<std::vector<double>> out;
  out.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::vector<double> vals;
    vals.reserve(rows[r].size());
    for (std::size_t c = 0; c < rows[r].size(); ++c)
      vals.push_back(parse_cell(rows[r][c], path, r, c));
    if (!out.empty() && vals.size() != out[0].size())
      throw data_error("io: ragged row " + std::to_string(r + 1) + " in '" +
                       path + "'");
    out.push_back(std::move(vals));
  }
  return out;
}

inline void write_matrix_csv(const std::string& path,
                             const std::vector<std::vector<double>>& m) {
  std::ostringstream out;
  for (const auto& row : m) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << ',';
      out << format_double(row[c]);
    }
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline void write_spectrum_csv(const std::string& path, const Spectrum& s) {
  s.validate();
  std::ostringstream out;
  out << (s.normalized ? "freq_hz,relative_power\n" : "freq_hz,power\n");
  for (std::size_t i = 0; i < s.freqs.size(); ++i)
    out << format_double(s.freqs[i]) << ',' << format_double(s.power[i])
        << '\n';
  write_text_file(path, out.str());
}

inline Spectrum read_spectrum_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows[0].size() != 2 || rows[0][0] != "freq_hz" ||
      (rows[0][1] != "power" && rows[0][1] != "relative_power"))
    throw data_error("io: '" + path + "' is not a spectrum CSV");
  Spectrum s;
  s.normalized = rows[0][1] == "relative_power";
  for (std::size_t r = 1; r < rows.size(); ++r) {
    s.freqs.push_back(parse_cell(rows[r][0], path, r, 0));
    s.power.push_back(parse_cell(rows[r][1], path, r, 1));
  }
  s.validate();
  return s;
}

// Connectivity matrix CSV: label header row, label-leading rows; band
// and subject travel in the JSON sidecar.
inline void write_conn_csv(const std::string& path, const ConnMatrix& cm,
                           const std::vector<std::string>& labels) {
  cm.validate();
  if (labels.size() != cm.size())
    throw data_error("io: connectivity label count mismatch");
  std::ostringstream out;
  out << "label";
  for (const auto& l : labels) out << ',' << l;
  out << '\n';
  for (std::size_t i = 0; i < cm.size(); ++i) {
    out << labels[i];
    for (std::size_t j = 0; j < cm.size(); ++j)
      out << ',' << format_double(cm.values[i][j]);
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline ConnMatrix read_conn_csv(const std::string& path,
                                std::vector<std::string>* labels = nullptr) {
  const auto rows = read_csv(path);
  if (rows[0].empty() || rows[0][0] != "label")
    throw data_error("io: '" + path + "' is not a connectivity CSV");
  const std::size_t n = rows[0].size() - 1;
  if (rows.size() != n + 1)
    throw data_error("io: connectivity CSV '" + path + "' is not square");
  const std::vector<std::string> labs(rows[0].begin() + 1, rows[0].end());
  ConnMatrix cm;
  cm.values.assign(n, std::vector<double>(n, 0.0));
  for (std::size_t i = 0; i < n; ++i) {
    if (rows[i + 1].size() != n + 1 || rows[i + 1][0] != labs[i])
      throw data_error("io: row label mismatch in '" + path + "'");
    for (std::size_t j = 0; j < n; ++j)
      cm.values[i][j] = parse_cell(rows[i + 1][j + 1], path, i + 1, j + 1);
  }
  cm.validate();
  if (labels) *labels = labs;
  return cm;
}

// Window-level feature table: subject_id, group, epoch, then the
// feature layout columns.
inline void write_features_csv(const std::string& path,
                               const std::vector<FeatureVector>& fvs) {
  if (fvs.empty()) throw data_error("io: no feature rows to write");
  std::ostringstream out;
  out << "subject_id,group,epoch";
  for (const auto& n : fvs[0].names) out << ',' << n;
  out << '\n';
  for (const auto& fv : fvs) {
    fv.validate();
    if (fv.names != fvs[0].names)
      throw data_error("io: inconsistent feature layout across rows");
    out << fv.subject_id << ','
        << (fv.label == GroupLabel::AD ? "AD" : "HC") << ',' << fv.epoch_index;
    for (double v : fv.values) out << ',' << format_double(v);
    out << '\n';
  }
  write_text_file(path, out.str());
}

inline std::vector<FeatureVector> read_features_csv(const std::string& path) {
  const auto rows = read_csv(path);
  if (rows[0].size() < 4 || rows[0][0] != "subject_id" ||
      rows[0][1] != "group" || rows[0][2] != "epoch")
    throw data_error("io: '" + path + "' is not a feature CSV");
  const std::vector<std::string> names(rows[0].begin() + 3, rows[0].end());
  std::vector<FeatureVector> fvs;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw data_error("io: ragged row " + std::to_string(r + 1) + " in '" +
                       path + "'");
    FeatureVector fv;
    fv.subject_id = rows[r][0];
    if (rows[r][1] == "AD")
      fv.label = GroupLabel::AD;
    else if (rows[r][1] == "HC")
      fv.label = GroupLabel::HC;
    else
      throw data_error("io: unknown group '" + rows[r][1] + "' in '" + path +
                       "'");
    fv.epoch_index = static_cast<std::size_t>(
        parse_cell(rows[r][2], path, r, 2));
    fv.names = names;
    for (std::size_t c = 3; c < rows[r].size(); ++c)
      fv.values.push_back(parse_cell(rows[r][c], path, r, c));
    fv.validate();
    fvs.push_back(std::move(fv));
  }
  return fvs;
}

// ---------------------------------------------------------------------
// manifest + dataset ingestion
// ---------------------------------------------------------------------

struct ManifestEntry {
  std::string subject_id;
  GroupLabel group = GroupLabel::HC;
  std::string path;
  double fs = 500.0;
  std::vector<std::string> channels;
};

struct Manifest {
  std::vector<ManifestEntry> entries;

  void validate() const {
    if (entries.empty()) throw data_error("manifest: no subjects");
    std::set<std::string> ids;
    const double fs0 = entries[0].fs;
    for (const auto& e : entries) {
      if (e.subject_id.empty()) throw data_error("manifest: empty subject_id");
      if (!ids.insert(e.subject_id).second)
        throw data_error("manifest: duplicate subject_id '" + e.subject_id +
                         "'");
      if (!(e.fs > 0.0))
        throw data_error("manifest: fs must be positive for '" +
                         e.subject_id + "'");
      if (e.fs != fs0)
        throw data_error("manifest: inconsistent fs across subjects");
      if (e.channels.empty())
        throw data_error("manifest: no channel labels for '" + e.subject_id +
                         "'");
    }
  }
};

inline GroupLabel parse_group(const std::string& s) {
  if (s == "AD") return GroupLabel::AD;
  if (s == "HC") return GroupLabel::HC;
  throw data_error("manifest: group must be AD or HC, got '" + s + "'");
}

inline Manifest manifest_from_json(const json& j) {
  Manifest m;
  if (!j.is_array()) throw data_error("manifest: top level must be an array");
  for (const auto& rec : j) {
    ManifestEntry e;
    e.subject_id = rec.at("subject_id").get<std::string>();
    e.group = parse_group(rec.at("group").get<std::string>());
    e.path = rec.at("path").get<std::string>();
    e.fs = rec.value("fs", 500.0);
    if (rec.contains("channels"))
      e.channels = rec.at("channels").get<std::vector<std::string>>();
    else
      e.channels = standard_channel_labels();
    m.entries.push_back(std::move(e));
  }
  m.validate();
  return m;
}

inline json manifest_to_json(const Manifest& m) {
  json j = json::array();
  for (const auto& e : m.entries)
    j.push_back({{"subject_id", e.subject_id},
                 {"group", e.group == GroupLabel::AD ? "AD" : "HC"},
                 {"path", e.path},
                 {"fs", e.fs},
                 {"channels", e.channels}});
  return j;
}

inline Manifest load_manifest(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& ex) {
    throw data_error("manifest: cannot parse '" + path + "': " + ex.what());
  }
  return manifest_from_json(j);
}

inline void save_manifest(const Manifest& m, const std::string& path) {
  m.validate();
  write_text_file(path, manifest_to_json(m).dump(2) + "\n");
}

struct SubjectRecording {
  std::string subject_id;
  GroupLabel group = GroupLabel::HC;
  std::vector<TimeSeries> epochs;
};

// Loads every manifest subject: CSV rows = channels in label order,
// band-pass 0.5-45 Hz, then non-overlapping fixed-length epochs.
inline std::vector<SubjectRecording> load_dataset(
    const Manifest& manifest, const std::string& base_dir = "",
    std::size_t epoch_samples = 500, double bp_lo_hz = 0.5,
    double bp_hi_hz = 45.0) {
  manifest.validate();
  std::vector<SubjectRecording> out;
  for (const auto& e : manifest.entries) {
    const std::string path =
        base_dir.empty()
            ? e.path
            : (std::filesystem::path(base_dir) / e.path).string();
    if (!std::filesystem::exists(path))
      throw io_error("io: recording file missing: '" + path + "'");
    const auto m = read_matrix_csv(path);
    if (m.size() != e.channels.size())
      throw data_error("io: channel-count mismatch for '" + e.subject_id +
                       "': file '" + path + "' has " +
                       std::to_string(m.size()) + " rows, manifest lists " +
                       std::to_string(e.channels.size()) + " labels");
    TimeSeries ts;
    ts.data = m;
    ts.fs = e.fs;
    ts.labels = e.channels;
    const TimeSeries filtered = bandpass(ts, bp_lo_hz, bp_hi_hz);
    SubjectRecording rec;
    rec.subject_id = e.subject_id;
    rec.group = e.group;
    rec.epochs = split_epochs(filtered, epoch_samples);
    out.push_back(std::move(rec));
  }
  return out;
}

inline void write_timeseries_csv(const std::string& path,
                                 const TimeSeries& ts) {
  ts.validate();
  write_matrix_csv(path, ts.data);
}

// ---------------------------------------------------------------------
// config hash + provenance
// ---------------------------------------------------------------------

inline std::uint64_t fnv1a64(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

// Hash of the canonical (key-sorted) JSON dump of a config tree.
inline std::string config_hash(const json& config) {
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(config.dump())));
  return buf;
}

// Record written next to every command's outputs; replaying the stored
// command with the stored config and seed reproduces the outputs
// bit-identically.
struct Provenance {
  std::string command;
  json config;
  std::string hash;
  std::uint64_t master_seed = 0;
  std::string version = kVersion;
};

inline void save_provenance(const Provenance& p, const std::string& out_dir) {
  const json j = {{"command", p.command},
                  {"config", p.config},
                  {"config_hash", p.hash},
                  {"master_seed", p.master_seed},
                  {"version", p.version}};
  write_text_file((std::filesystem::path(out_dir) / "provenance.json").string(),
                  j.dump(2) + "\n");
}

inline Provenance load_provenance(const std::string& out_dir) {
  const std::string path =
      (std::filesystem::path(out_dir) / "provenance.json").string();
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& ex) {
    throw data_error("io: cannot parse '" + path + "': " + ex.what());
  }
  Provenance p;
  p.command = j.at("command").get<std::string>();
  p.config = j.at("config");
  p.hash = j.at("config_hash").get<std::string>();
  p.master_seed = j.at("master_seed").get<std::uint64_t>();
  p.version = j.at("version").get<std::string>();
  if (p.hash != config_hash(p.config))
    throw data_error("io: provenance hash mismatch in '" + path + "'");
  return p;
}

}  // namespace eispec
