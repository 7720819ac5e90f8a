#pragma once

#include <cstdint>
#include <filesystem>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "eispec/classify.hpp"
#include "eispec/io.hpp"
#include "eispec/nbs.hpp"
#include "eispec/proxies.hpp"
#include "eispec/stats.hpp"
#include "eispec/synth.hpp"

namespace eispec {

// Complete parameter tree for one command invocation.  Everything that
// influences outputs lives here (and serializes into the provenance
// record); out_dir only says where results land, so it is excluded from
// the config hash and replays can target a fresh directory.
struct RunConfig {
  std::uint64_t seed = 0;
  std::string out_dir = "eispec-out";
  std::string manifest;  // input manifest for data-driven commands

  // simulation
  int model = 2;
  std::string condition = "HC";
  std::size_t n_runs = 10;
  NetworkConfig network;
  HeterogeneityConfig het;
  FcConfig fc;
  std::vector<std::string> bands = {"delta", "theta", "alpha", "beta",
                                    "gamma"};
  double fit_lo_hz = 1.0;
  double fit_hi_hz = 40.0;

  // ingestion + features
  std::size_t epoch_samples = 500;
  double bp_lo_hz = 0.5;
  double bp_hi_hz = 45.0;
  FeatureConfig features;

  // network-based statistic
  std::string band = "theta";
  double nbs_t_primary = 3.0;
  double nbs_alpha = 0.01;
  std::size_t nbs_n_perm = 5000;
  std::string nbs_tail = "left";
  bool nbs_exhaustive = false;

  // classification
  std::string classifier = "both";  // snn | ann | both
  std::size_t cv_folds = 5;
  SnnHyper snn;
  AnnHyper ann;
  std::string attribution = "none";  // none | permutation | shapley
  std::size_t attribution_repeats = 5;
  std::size_t attribution_samples = 200;
  std::size_t feat_subjects_per_group = 12;   // bundled feature dataset
  std::size_t feat_epochs_per_subject = 20;

  // synthetic EEG
  SynthProfile synth;
  std::size_t n_per_group = 10;

  // effect-size comparison
  bool simulate = false;
  std::size_t n_subjects = 30;
  double fc_drive_rate = 40.0;  // subnet drive for FC-based populations

  void validate() const {
    if (!(fc_drive_rate >= 0.0))
      throw config_error("config: fc_drive_rate must be >= 0");
    if (model != 1 && model != 2)
      throw config_error("config: model must be 1 or 2");
    condition_by_name(condition);  // rejects unknown names
    band_by_name(band);
    for (const auto& b : bands) band_by_name(b);
    if (bands.empty()) throw config_error("config: bands must be non-empty");
    if (classifier != "snn" && classifier != "ann" && classifier != "both")
      throw config_error("config: classifier must be snn, ann, or both");
    if (attribution != "none" && attribution != "permutation" &&
        attribution != "shapley")
      throw config_error(
          "config: attribution must be none, permutation, or shapley");
    if (nbs_tail != "left" && nbs_tail != "right")
      throw config_error("config: nbs_tail must be left or right");
    if (!(bp_lo_hz > 0.0 && bp_hi_hz > bp_lo_hz))
      throw config_error("config: need 0 < bp_lo_hz < bp_hi_hz");
    if (!(fit_lo_hz > 0.0 && fit_hi_hz > fit_lo_hz))
      throw config_error("config: need 0 < fit_lo_hz < fit_hi_hz");
    if (epoch_samples == 0)
      throw config_error("config: epoch_samples must be positive");
    if (n_runs == 0) throw config_error("config: n_runs must be positive");
    if (cv_folds < 2) throw config_error("config: cv_folds must be >= 2");
    if (out_dir.empty()) throw config_error("config: out_dir must be set");
  }
};

namespace detail {

inline void check_keys(const json& j, const std::string& scope,
                       std::initializer_list<const char*> allowed) {
  if (!j.is_object())
    throw config_error("config: '" + scope + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw config_error("config: unknown key '" + scope + "." + it.key() +
                         "'");
  }
}

template <typename T>
inline void assign(const json& j, const char* key, T& target,
                   const std::string& scope) {
  if (!j.contains(key)) return;
  try {
    target = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw config_error("config: wrong type for '" + scope + "." + key + "'");
  }
}

}  // namespace detail

// Schema-checked deserialization: unknown keys and wrong types are
// config errors, reported before any compute.
inline RunConfig runconfig_from_json(const json& j) {
  using detail::assign;
  using detail::check_keys;
  RunConfig c;
  check_keys(j, "run",
             {"seed", "manifest", "model", "condition", "n_runs", "bands",
              "fit_lo_hz", "fit_hi_hz", "epoch_samples", "bp_lo_hz",
              "bp_hi_hz", "band", "network", "heterogeneity", "fc",
              "features", "nbs", "classify", "synth", "compare"});
  assign(j, "seed", c.seed, "run");
  assign(j, "manifest", c.manifest, "run");
  assign(j, "model", c.model, "run");
  assign(j, "condition", c.condition, "run");
  assign(j, "n_runs", c.n_runs, "run");
  assign(j, "bands", c.bands, "run");
  assign(j, "fit_lo_hz", c.fit_lo_hz, "run");
  assign(j, "fit_hi_hz", c.fit_hi_hz, "run");
  assign(j, "epoch_samples", c.epoch_samples, "run");
  assign(j, "bp_lo_hz", c.bp_lo_hz, "run");
  assign(j, "bp_hi_hz", c.bp_hi_hz, "run");
  assign(j, "band", c.band, "run");

  if (j.contains("network")) {
    const json& n = j.at("network");
    check_keys(n, "network",
               {"n_neurons", "frac_excitatory", "p_connect", "g_E", "g_ratio",
                "drive_rate", "drive_rate_jitter_frac", "duration_ms",
                "warmup_ms", "dt_ms", "delay_ms", "tonic_current_pA"});
    assign(n, "n_neurons", c.network.n_neurons, "network");
    assign(n, "frac_excitatory", c.network.frac_excitatory, "network");
    assign(n, "p_connect", c.network.p_connect, "network");
    assign(n, "g_E", c.network.g_E, "network");
    assign(n, "g_ratio", c.network.g_ratio, "network");
    assign(n, "drive_rate", c.network.drive_rate, "network");
    assign(n, "drive_rate_jitter_frac", c.network.drive_rate_jitter_frac,
           "network");
    assign(n, "duration_ms", c.network.duration_ms, "network");
    assign(n, "warmup_ms", c.network.warmup_ms, "network");
    assign(n, "dt_ms", c.network.dt_ms, "network");
    assign(n, "delay_ms", c.network.delay_ms, "network");
    assign(n, "tonic_current_pA", c.network.tonic_current_pA, "network");
  }
  if (j.contains("heterogeneity")) {
    const json& h = j.at("heterogeneity");
    check_keys(h, "heterogeneity", {"randomize_v_init", "v_th_sigma_mv"});
    assign(h, "randomize_v_init", c.het.randomize_v_init, "heterogeneity");
    assign(h, "v_th_sigma_mv", c.het.v_th_sigma_mv, "heterogeneity");
  }
  if (j.contains("fc")) {
    const json& f = j.at("fc");
    check_keys(f, "fc", {"p_inter", "fc_threshold", "subnet_size", "model"});
    assign(f, "p_inter", c.fc.p_inter, "fc");
    assign(f, "fc_threshold", c.fc.fc_threshold, "fc");
    assign(f, "subnet_size", c.fc.subnet_size, "fc");
    assign(f, "model", c.fc.model, "fc");
  }
  if (j.contains("features")) {
    const json& f = j.at("features");
    check_keys(f, "features",
               {"welch_nperseg", "welch_overlap", "spec_lo_hz", "spec_hi_hz",
                "fit_lo_hz", "fit_hi_hz", "filter_order", "degree_bands"});
    assign(f, "welch_nperseg", c.features.welch_nperseg, "features");
    assign(f, "welch_overlap", c.features.welch_overlap, "features");
    assign(f, "spec_lo_hz", c.features.spec_lo_hz, "features");
    assign(f, "spec_hi_hz", c.features.spec_hi_hz, "features");
    assign(f, "fit_lo_hz", c.features.fit_lo_hz, "features");
    assign(f, "fit_hi_hz", c.features.fit_hi_hz, "features");
    assign(f, "filter_order", c.features.filter_order, "features");
    assign(f, "degree_bands", c.features.degree_bands, "features");
  }
  if (j.contains("nbs")) {
    const json& n = j.at("nbs");
    check_keys(n, "nbs", {"t_primary", "alpha", "n_perm", "tail",
                          "exhaustive"});
    assign(n, "t_primary", c.nbs_t_primary, "nbs");
    assign(n, "alpha", c.nbs_alpha, "nbs");
    assign(n, "n_perm", c.nbs_n_perm, "nbs");
    assign(n, "tail", c.nbs_tail, "nbs");
    assign(n, "exhaustive", c.nbs_exhaustive, "nbs");
  }
  if (j.contains("classify")) {
    const json& k = j.at("classify");
    check_keys(k, "classify",
               {"classifier", "cv_folds", "snn", "ann", "attribution",
                "attribution_repeats", "attribution_samples",
                "feat_subjects_per_group", "feat_epochs_per_subject"});
    assign(k, "classifier", c.classifier, "classify");
    assign(k, "cv_folds", c.cv_folds, "classify");
    assign(k, "attribution", c.attribution, "classify");
    assign(k, "attribution_repeats", c.attribution_repeats, "classify");
    assign(k, "attribution_samples", c.attribution_samples, "classify");
    assign(k, "feat_subjects_per_group", c.feat_subjects_per_group,
           "classify");
    assign(k, "feat_epochs_per_subject", c.feat_epochs_per_subject,
           "classify");
    if (k.contains("snn")) {
      const json& s = k.at("snn");
      check_keys(s, "classify.snn",
                 {"epochs", "T", "B", "hidden1", "hidden2", "lr", "k", "beta",
                  "threshold"});
      assign(s, "epochs", c.snn.epochs, "classify.snn");
      assign(s, "T", c.snn.T, "classify.snn");
      assign(s, "B", c.snn.B, "classify.snn");
      assign(s, "hidden1", c.snn.hidden1, "classify.snn");
      assign(s, "hidden2", c.snn.hidden2, "classify.snn");
      assign(s, "lr", c.snn.lr, "classify.snn");
      assign(s, "k", c.snn.k, "classify.snn");
      assign(s, "beta", c.snn.beta, "classify.snn");
      assign(s, "threshold", c.snn.threshold, "classify.snn");
    }
    if (k.contains("ann")) {
      const json& a = k.at("ann");
      check_keys(a, "classify.ann",
                 {"epochs", "B", "hidden1", "hidden2", "lr"});
      assign(a, "epochs", c.ann.epochs, "classify.ann");
      assign(a, "B", c.ann.B, "classify.ann");
      assign(a, "hidden1", c.ann.hidden1, "classify.ann");
      assign(a, "hidden2", c.ann.hidden2, "classify.ann");
      assign(a, "lr", c.ann.lr, "classify.ann");
    }
  }
  if (j.contains("synth")) {
    const json& s = j.at("synth");
    check_keys(s, "synth",
               {"chi_ad", "chi_hc", "alpha_power_ad", "alpha_power_hc",
                "coupling", "chi_jitter", "power_jitter", "fs", "n_channels",
                "n_samples", "n_per_group"});
    assign(s, "chi_ad", c.synth.chi_ad, "synth");
    assign(s, "chi_hc", c.synth.chi_hc, "synth");
    assign(s, "alpha_power_ad", c.synth.alpha_power_ad, "synth");
    assign(s, "alpha_power_hc", c.synth.alpha_power_hc, "synth");
    assign(s, "coupling", c.synth.coupling, "synth");
    assign(s, "chi_jitter", c.synth.chi_jitter, "synth");
    assign(s, "power_jitter", c.synth.power_jitter, "synth");
    assign(s, "fs", c.synth.fs, "synth");
    assign(s, "n_channels", c.synth.n_channels, "synth");
    assign(s, "n_samples", c.synth.n_samples, "synth");
    assign(s, "n_per_group", c.n_per_group, "synth");
  }
  if (j.contains("compare")) {
    const json& k = j.at("compare");
    check_keys(k, "compare", {"simulate", "n_subjects", "fc_drive_rate"});
    assign(k, "simulate", c.simulate, "compare");
    assign(k, "n_subjects", c.n_subjects, "compare");
    assign(k, "fc_drive_rate", c.fc_drive_rate, "compare");
  }
  c.validate();
  return c;
}

// Full serialization (minus out_dir); runconfig_from_json of the result
// reproduces the config, which is what makes provenance replayable.
inline json runconfig_to_json(const RunConfig& c) {
  return json{
      {"seed", c.seed},
      {"manifest", c.manifest},
      {"model", c.model},
      {"condition", c.condition},
      {"n_runs", c.n_runs},
      {"bands", c.bands},
      {"fit_lo_hz", c.fit_lo_hz},
      {"fit_hi_hz", c.fit_hi_hz},
      {"epoch_samples", c.epoch_samples},
      {"bp_lo_hz", c.bp_lo_hz},
      {"bp_hi_hz", c.bp_hi_hz},
      {"band", c.band},
      {"network",
       {{"n_neurons", c.network.n_neurons},
        {"frac_excitatory", c.network.frac_excitatory},
        {"p_connect", c.network.p_connect},
        {"g_E", c.network.g_E},
        {"g_ratio", c.network.g_ratio},
        {"drive_rate", c.network.drive_rate},
        {"drive_rate_jitter_frac", c.network.drive_rate_jitter_frac},
        {"duration_ms", c.network.duration_ms},
        {"warmup_ms", c.network.warmup_ms},
        {"dt_ms", c.network.dt_ms},
        {"delay_ms", c.network.delay_ms},
        {"tonic_current_pA", c.network.tonic_current_pA}}},
      {"heterogeneity",
       {{"randomize_v_init", c.het.randomize_v_init},
        {"v_th_sigma_mv", c.het.v_th_sigma_mv}}},
      {"fc",
       {{"p_inter", c.fc.p_inter},
        {"fc_threshold", c.fc.fc_threshold},
        {"subnet_size", c.fc.subnet_size},
        {"model", c.fc.model}}},
      {"features",
       {{"welch_nperseg", c.features.welch_nperseg},
        {"welch_overlap", c.features.welch_overlap},
        {"spec_lo_hz", c.features.spec_lo_hz},
        {"spec_hi_hz", c.features.spec_hi_hz},
        {"fit_lo_hz", c.features.fit_lo_hz},
        {"fit_hi_hz", c.features.fit_hi_hz},
        {"filter_order", c.features.filter_order},
        {"degree_bands", c.features.degree_bands}}},
      {"nbs",
       {{"t_primary", c.nbs_t_primary},
        {"alpha", c.nbs_alpha},
        {"n_perm", c.nbs_n_perm},
        {"tail", c.nbs_tail},
        {"exhaustive", c.nbs_exhaustive}}},
      {"classify",
       {{"classifier", c.classifier},
        {"cv_folds", c.cv_folds},
        {"attribution", c.attribution},
        {"attribution_repeats", c.attribution_repeats},
        {"attribution_samples", c.attribution_samples},
        {"feat_subjects_per_group", c.feat_subjects_per_group},
        {"feat_epochs_per_subject", c.feat_epochs_per_subject},
        {"snn",
         {{"epochs", c.snn.epochs},
          {"T", c.snn.T},
          {"B", c.snn.B},
          {"hidden1", c.snn.hidden1},
          {"hidden2", c.snn.hidden2},
          {"lr", c.snn.lr},
          {"k", c.snn.k},
          {"beta", c.snn.beta},
          {"threshold", c.snn.threshold}}},
        {"ann",
         {{"epochs", c.ann.epochs},
          {"B", c.ann.B},
          {"hidden1", c.ann.hidden1},
          {"hidden2", c.ann.hidden2},
          {"lr", c.ann.lr}}}}},
      {"synth",
       {{"chi_ad", c.synth.chi_ad},
        {"chi_hc", c.synth.chi_hc},
        {"alpha_power_ad", c.synth.alpha_power_ad},
        {"alpha_power_hc", c.synth.alpha_power_hc},
        {"coupling", c.synth.coupling},
        {"chi_jitter", c.synth.chi_jitter},
        {"power_jitter", c.synth.power_jitter},
        {"fs", c.synth.fs},
        {"n_channels", c.synth.n_channels},
        {"n_samples", c.synth.n_samples},
        {"n_per_group", c.n_per_group}}},
      {"compare",
       {{"simulate", c.simulate},
        {"n_subjects", c.n_subjects},
        {"fc_drive_rate", c.fc_drive_rate}}}};
}

inline RunConfig load_runconfig(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text_file(path));
  } catch (const json::parse_error& ex) {
    throw config_error("config: cannot parse '" + path + "': " + ex.what());
  }
  return runconfig_from_json(j);
}

namespace detail {

inline std::filesystem::path prepare_out_dir(const RunConfig& cfg) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline void stamp(const std::string& command, const RunConfig& cfg) {
  Provenance p;
  p.command = command;
  p.config = runconfig_to_json(cfg);
  p.hash = config_hash(p.config);
  p.master_seed = cfg.seed;
  save_provenance(p, cfg.out_dir);
}

// Subject-level connectivity: the mean of per-epoch PLV matrices.
inline ConnMatrix subject_band_plv(const SubjectRecording& rec,
                                   const Band& band, int filter_order) {
  if (rec.epochs.empty())
    throw data_error("cli: subject '" + rec.subject_id + "' has no epochs");
  ConnMatrix acc;
  for (std::size_t e = 0; e < rec.epochs.size(); ++e) {
    const ConnMatrix m = plv(rec.epochs[e], band, filter_order, 0.1,
                             rec.subject_id);
    if (e == 0) {
      acc = m;
    } else {
      for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = 0; j < m.size(); ++j)
          acc.values[i][j] += m.values[i][j];
    }
  }
  const double n = static_cast<double>(rec.epochs.size());
  for (auto& row : acc.values)
    for (double& v : row) v /= n;
  for (std::size_t i = 0; i < acc.size(); ++i) acc.values[i][i] = 1.0;
  acc.band = band;
  acc.subject_id = rec.subject_id;
  acc.validate();
  return acc;
}

inline std::vector<SubjectRecording> load_manifest_dataset(
    const RunConfig& cfg) {
  if (cfg.manifest.empty())
    throw config_error("cli: this command needs --manifest");
  const Manifest m = load_manifest(cfg.manifest);
  const std::string base =
      std::filesystem::path(cfg.manifest).parent_path().string();
  return load_dataset(m, base, cfg.epoch_samples, cfg.bp_lo_hz, cfg.bp_hi_hz);
}

inline std::vector<FeatureVector> compute_feature_rows(
    const RunConfig& cfg, const std::vector<SubjectRecording>& recs) {
  std::vector<FeatureVector> rows;
  for (const auto& rec : recs) {
    for (std::size_t e = 0; e < rec.epochs.size(); ++e) {
      std::map<std::string, ConnMatrix> fcs;
      for (const auto& b : canonical_bands())
        fcs[b.name] = plv(rec.epochs[e], b, cfg.features.filter_order, 0.1,
                          rec.subject_id);
      FeatureVector fv = assemble_features(rec.epochs[e], fcs, cfg.features);
      fv.subject_id = rec.subject_id;
      fv.label = rec.group;
      fv.epoch_index = e;
      rows.push_back(std::move(fv));
    }
  }
  if (rows.empty()) throw data_error("cli: no feature rows produced");
  return rows;
}

inline json fit_to_json(const AperiodicFit& f) {
  return json{{"offset", f.offset},
              {"exponent", f.exponent},
              {"fit_lo_hz", f.fit_lo_hz},
              {"fit_hi_hz", f.fit_hi_hz},
              {"r_squared", f.r_squared}};
}

}  // namespace detail

// `sim`: averaged relative proxy spectrum for one condition.
inline void run_sim(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const Spectrum spec =
      run_condition(cfg.model, condition_by_name(cfg.condition), cfg.network,
                    cfg.n_runs, cfg.seed, cfg.het);
  write_spectrum_csv((dir / "spectrum.csv").string(), spec);
  const AperiodicFit fit = fit_aperiodic(spec, cfg.fit_lo_hz, cfg.fit_hi_hz);
  const json sidecar = {{"model", cfg.model},
                        {"condition", cfg.condition},
                        {"n_runs", cfg.n_runs},
                        {"g_ratio", condition_by_name(cfg.condition).g_ratio},
                        {"aperiodic", detail::fit_to_json(fit)}};
  write_text_file((dir / "sim.json").string(), sidecar.dump(2) + "\n");
  detail::stamp("sim", cfg);
}

// `fc-sim`: band-stitched composite spectrum over the bundled synthetic
// FC prior.
inline void run_fc_sim(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  std::map<std::string, FcPrior> priors;
  for (const auto& name : cfg.bands) {
    const Band& b = band_by_name(name);
    priors[b.name] = synthetic_fc_prior(b, cfg.seed);
  }
  RunConfig fc_cfg = cfg;
  fc_cfg.fc.model = cfg.model;
  const Spectrum composite =
      fc_condition_run(priors, condition_by_name(cfg.condition),
                       fc_cfg.network, fc_cfg.fc, cfg.seed, cfg.bands);
  write_spectrum_csv((dir / "composite.csv").string(), composite);
  const AperiodicFit fit =
      fit_aperiodic(composite, cfg.fit_lo_hz, cfg.fit_hi_hz);
  const json sidecar = {{"model", cfg.model},
                        {"condition", cfg.condition},
                        {"bands", cfg.bands},
                        {"prior", "synthetic"},
                        {"aperiodic", detail::fit_to_json(fit)}};
  write_text_file((dir / "fc_sim.json").string(), sidecar.dump(2) + "\n");
  detail::stamp("fc-sim", cfg);
}

// `synth`: synthetic EEG study written as per-subject CSVs plus a
// manifest that `features`/`plv`/`nbs` can consume directly.
inline void run_synth(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const SynthEeg data = synth_eeg(cfg.n_per_group, cfg.synth, cfg.seed);
  for (std::size_t s = 0; s < data.signals.size(); ++s)
    write_timeseries_csv((dir / data.manifest.entries[s].path).string(),
                         data.signals[s]);
  save_manifest(data.manifest, (dir / "manifest.json").string());
  detail::stamp("synth", cfg);
}

// `features`: per-epoch feature table from a manifest.
inline void run_features(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const auto recs = detail::load_manifest_dataset(cfg);
  const auto rows = detail::compute_feature_rows(cfg, recs);
  write_features_csv((dir / "features.csv").string(), rows);
  detail::stamp("features", cfg);
}

// `plv`: per-subject, per-band connectivity matrices (epoch-averaged).
inline void run_plv(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const auto recs = detail::load_manifest_dataset(cfg);
  json index = json::array();
  for (const auto& rec : recs) {
    for (const auto& name : cfg.bands) {
      const Band& b = band_by_name(name);
      const ConnMatrix cm =
          detail::subject_band_plv(rec, b, cfg.features.filter_order);
      const std::string file = "conn_" + rec.subject_id + "_" + b.name +
                               ".csv";
      write_conn_csv((dir / file).string(), cm, rec.epochs[0].labels);
      index.push_back({{"subject_id", rec.subject_id},
                       {"group", to_string(rec.group)},
                       {"band", b.name},
                       {"file", file},
                       {"n_epochs", rec.epochs.size()}});
    }
  }
  write_text_file((dir / "plv.json").string(), index.dump(2) + "\n");
  detail::stamp("plv", cfg);
}

// `nbs`: group contrast of epoch-averaged PLV matrices in one band.
inline void run_nbs(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const auto recs = detail::load_manifest_dataset(cfg);
  const Band& b = band_by_name(cfg.band);

  GroupStack hc, ad;
  hc.group = GroupLabel::HC;
  ad.group = GroupLabel::AD;
  hc.band = b;
  ad.band = b;
  std::vector<std::string> labels;
  for (const auto& rec : recs) {
    const ConnMatrix cm =
        detail::subject_band_plv(rec, b, cfg.features.filter_order);
    if (labels.empty()) labels = rec.epochs[0].labels;
    (rec.group == GroupLabel::HC ? hc : ad).matrices.push_back(cm);
  }

  const NbsTail tail =
      cfg.nbs_tail == "left" ? NbsTail::left : NbsTail::right;
  const NbsResult res =
      nbs_test(hc, ad, cfg.nbs_t_primary, cfg.nbs_alpha, cfg.nbs_n_perm, tail,
               cfg.seed, cfg.nbs_exhaustive);

  json comps = json::array();
  for (const auto& comp : res.components) {
    json edges = json::array();
    for (const auto& [i, j] : comp.edges)
      edges.push_back({labels[i], labels[j]});
    json nodes = json::array();
    for (std::size_t nidx : comp.nodes) nodes.push_back(labels[nidx]);
    comps.push_back({{"n_edges", comp.size()},
                     {"fwe_p", comp.fwe_p},
                     {"significant", comp.significant},
                     {"nodes", nodes},
                     {"edges", edges}});
  }
  const json report = {{"band", b.name},
                       {"tail", cfg.nbs_tail},
                       {"t_primary", res.t_primary},
                       {"alpha", res.alpha},
                       {"n_perm", res.n_perm},
                       {"exhaustive", res.exhaustive},
                       {"n_hc", hc.n_subjects()},
                       {"n_ad", ad.n_subjects()},
                       {"components", comps},
                       {"warnings", res.warnings}};
  write_text_file((dir / ("nbs_" + b.name + ".json")).string(),
                  report.dump(2) + "\n");
  detail::stamp("nbs", cfg);
}

// `classify`: subject-disjoint cross-validation, on manifest-derived
// features or (without a manifest) on the bundled synthetic table.
inline void run_classify(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);

  Dataset d;
  if (cfg.manifest.empty()) {
    d = synth_feature_dataset(cfg.feat_subjects_per_group,
                              cfg.feat_epochs_per_subject, cfg.seed);
  } else {
    const auto recs = detail::load_manifest_dataset(cfg);
    d = dataset_from_features(detail::compute_feature_rows(cfg, recs));
  }

  json report = {{"source", cfg.manifest.empty() ? "synthetic" : "manifest"},
                 {"n_rows", d.x.size()},
                 {"n_features", d.feature_names.size()},
                 {"folds", cfg.cv_folds}};
  if (cfg.classifier == "snn" || cfg.classifier == "both") {
    const CvResult r = cross_validate(ModelKind::snn, d, cfg.snn, cfg.ann,
                                      cfg.cv_folds, cfg.seed);
    report["snn"] = {{"fold_aucs", r.fold_aucs}, {"mean_auc", r.mean_auc}};
  }
  if (cfg.classifier == "ann" || cfg.classifier == "both") {
    const CvResult r = cross_validate(ModelKind::ann, d, cfg.snn, cfg.ann,
                                      cfg.cv_folds, cfg.seed);
    report["ann"] = {{"fold_aucs", r.fold_aucs}, {"mean_auc", r.mean_auc}};
  }
  write_text_file((dir / "classify.json").string(), report.dump(2) + "\n");

  if (cfg.attribution != "none") {
    const std::vector<std::size_t> all_rows = [&] {
      std::vector<std::size_t> v(d.x.size());
      for (std::size_t i = 0; i < v.size(); ++i) v[i] = i;
      return v;
    }();
    const MinMaxScaler scaler = MinMaxScaler::fit(d, all_rows);
    const auto x = scaler.transform(d, all_rows);
    const bool use_snn = cfg.classifier != "ann";
    ScoreFn fn;
    if (use_snn) {
      SnnHyper h = cfg.snn;
      h.seed = derive_seed(cfg.seed, 33);
      fn = snn_score_fn(train_snn(x, d.y, h), h.T, derive_seed(cfg.seed, 34));
    } else {
      AnnHyper h = cfg.ann;
      h.seed = derive_seed(cfg.seed, 33);
      fn = ann_score_fn(train_ann(x, d.y, h));
    }
    AttributionReport ar;
    if (cfg.attribution == "permutation")
      ar = permutation_importance(fn, x, d.y, d.feature_names,
                                  cfg.attribution_repeats,
                                  derive_seed(cfg.seed, 35));
    else
      ar = sampled_shapley(fn, x, d.feature_names, cfg.attribution_samples,
                           derive_seed(cfg.seed, 35));
    json ranked = json::array();
    for (std::size_t r = 0; r < ar.ranking.size(); ++r) {
      const std::size_t jdx = ar.ranking[r];
      ranked.push_back({{"rank", r + 1},
                        {"feature", ar.feature_names[jdx]},
                        {"score", ar.scores[jdx]}});
    }
    const json aj = {{"method", ar.method},
                     {"model", use_snn ? "snn" : "ann"},
                     {"ranked", ranked}};
    write_text_file((dir / "attribution.json").string(), aj.dump(2) + "\n");
  }
  detail::stamp("classify", cfg);
}

// `compare-d`: effect-size table in the shape of the published exponent
// comparison.  Default mode recomputes d from the bundled summary
// statistics; simulate mode grows fresh populations per variant.
inline void run_compare_d(const RunConfig& cfg) {
  cfg.validate();
  const auto dir = detail::prepare_out_dir(cfg);
  const EffectReport eeg = eeg_reference_effect();

  std::ostringstream out;
  out << "name,n_ad,n_hc,mean_ad,mean_hc,s_pooled,cohens_d,published_d,"
         "abs_delta_vs_eeg,published_abs_delta\n";
  for (const auto& row : published_effect_table()) {
    const bool is_eeg = row.name == "EEG analysis";
    const EffectReport r =
        cohens_d_from_summary(row.name, row.mean_ad, row.mean_hc,
                              row.s_pooled, is_eeg ? 36 : 30,
                              is_eeg ? 29 : 30);
    out << row.name << ',' << r.n_ad << ',' << r.n_hc << ','
        << format_double(r.mean_ad) << ',' << format_double(r.mean_hc) << ','
        << format_double(r.s_pooled) << ',' << format_double(r.cohens_d)
        << ',' << format_double(row.published_d) << ','
        << format_double(std::abs(r.cohens_d - eeg.cohens_d)) << ','
        << format_double(row.published_abs_delta) << '\n';
  }
  write_text_file((dir / "effects.csv").string(), out.str());

  if (cfg.simulate) {
    const Condition ad = condition_by_name("AD");
    const Condition hc = condition_by_name("HC");
    std::vector<EffectReport> reports;
    for (int model : {1, 2}) {
      const auto ad_pop = exponent_population(
          model, ad, cfg.network, cfg.n_subjects,
          derive_seed(cfg.seed, 100, static_cast<std::uint64_t>(model)),
          cfg.fit_lo_hz, cfg.fit_hi_hz, cfg.het, cfg.n_runs);
      const auto hc_pop = exponent_population(
          model, hc, cfg.network, cfg.n_subjects,
          derive_seed(cfg.seed, 101, static_cast<std::uint64_t>(model)),
          cfg.fit_lo_hz, cfg.fit_hi_hz, cfg.het, cfg.n_runs);
      reports.push_back(cohens_d("M. " + std::to_string(model), ad_pop,
                                 hc_pop));
    }
    std::map<std::string, FcPrior> priors;
    for (const auto& name : cfg.bands)
      priors[name] = synthetic_fc_prior(band_by_name(name), cfg.seed);
    // Subnets see a fifth of the monolithic in-degree, so the FC
    // populations run at their own drive to stay comparably active.
    NetworkConfig fc_net = cfg.network;
    fc_net.drive_rate = cfg.fc_drive_rate;
    for (int model : {1, 2}) {
      FcConfig fc = cfg.fc;
      fc.model = model;
      const auto ad_pop = fc_exponent_population(
          priors, ad, fc_net, fc, cfg.n_subjects,
          derive_seed(cfg.seed, 102, static_cast<std::uint64_t>(model)),
          cfg.bands, cfg.fit_lo_hz, cfg.fit_hi_hz, cfg.het);
      const auto hc_pop = fc_exponent_population(
          priors, hc, fc_net, fc, cfg.n_subjects,
          derive_seed(cfg.seed, 103, static_cast<std::uint64_t>(model)),
          cfg.bands, cfg.fit_lo_hz, cfg.fit_hi_hz, cfg.het);
      reports.push_back(cohens_d("M. " + std::to_string(model) + " FC-based",
                                 ad_pop, hc_pop));
    }
    std::ostringstream sim_out;
    sim_out << "name,n_ad,n_hc,mean_ad,mean_hc,s_pooled,cohens_d,"
               "d_reference_eeg,abs_delta_vs_eeg,sign_agrees\n";
    for (const auto& c : compare_effects(reports, eeg)) {
      const EffectReport* r = nullptr;
      for (const auto& rep : reports)
        if (rep.name == c.name) r = &rep;
      sim_out << c.name << ',' << r->n_ad << ',' << r->n_hc << ','
              << format_double(r->mean_ad) << ',' << format_double(r->mean_hc)
              << ',' << format_double(r->s_pooled) << ','
              << format_double(c.d_model) << ','
              << format_double(c.d_reference) << ','
              << format_double(c.abs_delta_d) << ','
              << (c.sign_agrees ? "true" : "false") << '\n';
    }
    write_text_file((dir / "effects_simulated.csv").string(), sim_out.str());
  }
  detail::stamp("compare-d", cfg);
}

// Dispatch by command name; the provenance record stores this name, so
// a replay is run_command(p.command, config restored from p.config).
inline void run_command(const std::string& command, const RunConfig& cfg) {
  if (command == "sim") return run_sim(cfg);
  if (command == "fc-sim") return run_fc_sim(cfg);
  if (command == "synth") return run_synth(cfg);
  if (command == "features") return run_features(cfg);
  if (command == "plv") return run_plv(cfg);
  if (command == "nbs") return run_nbs(cfg);
  if (command == "classify") return run_classify(cfg);
  if (command == "compare-d") return run_compare_d(cfg);
  throw config_error("cli: unknown command '" + command + "'");
}

// Replays a finished run into a fresh directory from its provenance
// record alone.
inline void replay_run(const std::string& prov_dir,
                       const std::string& out_dir) {
  const Provenance p = load_provenance(prov_dir);
  RunConfig cfg = runconfig_from_json(p.config);
  if (cfg.seed != p.master_seed)
    throw data_error("cli: provenance seed disagrees with stored config");
  cfg.out_dir = out_dir;
  run_command(p.command, cfg);
}

}  // namespace eispec
