#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "eispec/cli.hpp"

namespace {

using eispec::RunConfig;

// Flags layer on top of the config file: defaults < --config < flags.
struct CommonOpts {
  std::string config_path;
  CLI::Option* config_opt = nullptr;
};

void add_common(CLI::App* sub, CommonOpts& common, RunConfig& cfg) {
  common.config_opt = sub->add_option("--config", common.config_path,
                                      "RunConfig JSON file");
  sub->add_option("--out", cfg.out_dir, "output directory");
  sub->add_option("--seed", cfg.seed, "master seed");
}

// Applies the config file first, then re-applies any flags the user
// actually passed on top of it.
RunConfig merged_config(const CommonOpts& common, CLI::App* sub,
                        const RunConfig& flag_cfg) {
  if (common.config_path.empty()) return flag_cfg;
  RunConfig cfg = eispec::load_runconfig(common.config_path);
  auto passed = [&](const char* flag) {
    const CLI::Option* o = sub->get_option_no_throw(flag);
    return o != nullptr && o->count() > 0;
  };
  auto take = [&](const char* flag, auto member) {
    if (passed(flag)) cfg.*member = flag_cfg.*member;
  };
  take("--out", &RunConfig::out_dir);
  take("--seed", &RunConfig::seed);
  take("--manifest", &RunConfig::manifest);
  take("--model", &RunConfig::model);
  take("--condition", &RunConfig::condition);
  take("--runs", &RunConfig::n_runs);
  take("--band", &RunConfig::band);
  take("--bands", &RunConfig::bands);
  take("--tail", &RunConfig::nbs_tail);
  take("--threshold", &RunConfig::nbs_t_primary);
  take("--alpha", &RunConfig::nbs_alpha);
  take("--perms", &RunConfig::nbs_n_perm);
  take("--exhaustive", &RunConfig::nbs_exhaustive);
  take("--classifier", &RunConfig::classifier);
  take("--folds", &RunConfig::cv_folds);
  take("--attribution", &RunConfig::attribution);
  take("--per-group", &RunConfig::n_per_group);
  if (passed("--coupling")) cfg.synth.coupling = flag_cfg.synth.coupling;
  if (passed("--samples")) cfg.synth.n_samples = flag_cfg.synth.n_samples;
  if (passed("--duration-ms"))
    cfg.network.duration_ms = flag_cfg.network.duration_ms;
  take("--simulate", &RunConfig::simulate);
  take("--subjects", &RunConfig::n_subjects);
  return cfg;
}

int dispatch(const std::string& command, const RunConfig& cfg) {
  eispec::run_command(command, cfg);
  return 0;
}

int report_error(const char* category, const std::exception& e) {
  const eispec::json j = {{"error", category}, {"message", e.what()}};
  std::cerr << j.dump() << "\n";
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"eispec: E/I-imbalance spectra simulation and EEG analysis"};
  app.require_subcommand(1);

  struct SubState {
    CLI::App* sub = nullptr;
    CommonOpts common;
    RunConfig cfg;
  };
  std::map<std::string, SubState> subs;

  auto make_sub = [&](const std::string& name, const std::string& desc) {
    SubState& st = subs[name];
    st.sub = app.add_subcommand(name, desc);
    add_common(st.sub, st.common, st.cfg);
    return st.sub;
  };

  {
    CLI::App* s = make_sub("sim", "averaged relative proxy spectrum");
    SubState& st = subs["sim"];
    s->add_option("--model", st.cfg.model, "proxy model (1 or 2)");
    s->add_option("--condition", st.cfg.condition, "AD, MCI, or HC");
    s->add_option("--runs", st.cfg.n_runs, "independent runs to average");
    s->add_option("--duration-ms", st.cfg.network.duration_ms,
                  "simulated time incl. warmup");
  }
  {
    CLI::App* s = make_sub("fc-sim", "band-stitched composite spectrum");
    SubState& st = subs["fc-sim"];
    s->add_option("--model", st.cfg.model, "proxy model (1 or 2)");
    s->add_option("--condition", st.cfg.condition, "AD, MCI, or HC");
    s->add_option("--bands", st.cfg.bands, "bands to stitch")
        ->delimiter(',');
    s->add_option("--duration-ms", st.cfg.network.duration_ms,
                  "simulated time incl. warmup");
  }
  {
    CLI::App* s = make_sub("synth", "synthetic EEG study + manifest");
    SubState& st = subs["synth"];
    s->add_option("--per-group", st.cfg.n_per_group, "subjects per group");
    s->add_option("--coupling", st.cfg.synth.coupling,
                  "shared-source coupling in [0, 1]");
    s->add_option("--samples", st.cfg.synth.n_samples,
                  "samples per recording");
  }
  {
    CLI::App* s = make_sub("features", "per-epoch feature table");
    SubState& st = subs["features"];
    s->add_option("--manifest", st.cfg.manifest, "dataset manifest JSON")
        ->required();
  }
  {
    CLI::App* s = make_sub("plv", "per-subject band connectivity");
    SubState& st = subs["plv"];
    s->add_option("--manifest", st.cfg.manifest, "dataset manifest JSON")
        ->required();
    s->add_option("--bands", st.cfg.bands, "bands to compute")
        ->delimiter(',');
  }
  {
    CLI::App* s = make_sub("nbs", "network-based statistic on one band");
    SubState& st = subs["nbs"];
    s->add_option("--manifest", st.cfg.manifest, "dataset manifest JSON")
        ->required();
    s->add_option("--band", st.cfg.band, "band to test");
    s->add_option("--tail", st.cfg.nbs_tail, "left (HC>AD) or right (AD>HC)");
    s->add_option("--threshold", st.cfg.nbs_t_primary, "primary t threshold");
    s->add_option("--alpha", st.cfg.nbs_alpha, "FWE alpha");
    s->add_option("--perms", st.cfg.nbs_n_perm, "relabelings to draw");
    s->add_flag("--exhaustive", st.cfg.nbs_exhaustive,
                "enumerate every relabeling");
  }
  {
    CLI::App* s = make_sub("classify", "subject-disjoint cross-validation");
    SubState& st = subs["classify"];
    s->add_option("--manifest", st.cfg.manifest,
                  "dataset manifest JSON (omit for bundled synthetic)");
    s->add_option("--classifier", st.cfg.classifier, "snn, ann, or both");
    s->add_option("--folds", st.cfg.cv_folds, "cross-validation folds");
    s->add_option("--attribution", st.cfg.attribution,
                  "none, permutation, or shapley");
  }
  {
    CLI::App* s = make_sub("compare-d", "effect-size comparison table");
    SubState& st = subs["compare-d"];
    s->add_flag("--simulate", st.cfg.simulate,
                "also grow fresh simulated populations");
    s->add_option("--subjects", st.cfg.n_subjects,
                  "population size per group");
  }

  CLI11_PARSE(app, argc, argv);

  for (auto& [name, st] : subs) {
    if (!st.sub->parsed()) continue;
    try {
      const RunConfig cfg = merged_config(st.common, st.sub, st.cfg);
      return dispatch(name, cfg);
    } catch (const eispec::config_error& e) {
      return report_error("config", e);
    } catch (const eispec::data_error& e) {
      return report_error("data", e);
    } catch (const eispec::io_error& e) {
      return report_error("io", e);
    } catch (const eispec::stats_error& e) {
      return report_error("stats", e);
    } catch (const eispec::model_error& e) {
      return report_error("model", e);
    } catch (const eispec::numeric_error& e) {
      return report_error("numeric", e);
    } catch (const eispec::error& e) {
      return report_error("error", e);
    } catch (const std::exception& e) {
      return report_error("internal", e);
    }
  }
  return 0;
}
