#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <map>
#include <string>

#include "eispec/cli.hpp"

using namespace eispec;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("eispec-cli-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string sub(const std::string& name) const {
    return (path / name).string();
  }
};

std::map<std::string, std::string> dir_bytes(const std::string& dir) {
  std::map<std::string, std::string> out;
  for (const auto& ent : fs::directory_iterator(dir))
    if (ent.is_regular_file())
      out[ent.path().filename().string()] =
          read_text_file(ent.path().string());
  return out;
}

// Tiny synthetic study shared by the data-driven command tests.
RunConfig tiny_study_config(const std::string& out_dir, std::uint64_t seed) {
  RunConfig cfg;
  cfg.out_dir = out_dir;
  cfg.seed = seed;
  cfg.n_per_group = 3;
  cfg.synth.n_channels = 6;
  cfg.synth.n_samples = 2000;
  return cfg;
}

int run_binary(const std::string& args) {
  const std::string cmd = std::string(EISPEC_CLI_PATH) + " " + args;
  const int status = std::system(cmd.c_str());
  REQUIRE(status != -1);
  return WIFEXITED(status) ? WEXITSTATUS(status) : -2;
}

}  // namespace

TEST_CASE("run config serializes losslessly and rejects bad trees") {
  RunConfig cfg;
  cfg.seed = 99;
  cfg.model = 1;
  cfg.condition = "MCI";
  cfg.n_runs = 4;
  cfg.band = "alpha";
  cfg.bands = {"theta", "alpha"};
  cfg.network.n_neurons = 123;
  cfg.network.duration_ms = 4321.0;
  cfg.fc.p_inter = 0.07;
  cfg.features.welch_nperseg = 128;
  cfg.nbs_tail = "right";
  cfg.nbs_exhaustive = true;
  cfg.classifier = "ann";
  cfg.snn.hidden1 = 7;
  cfg.ann.lr = 0.005;
  cfg.synth.coupling = 0.25;
  cfg.n_per_group = 2;
  cfg.simulate = true;
  cfg.n_subjects = 8;

  const json j = runconfig_to_json(cfg);
  const RunConfig back = runconfig_from_json(j);
  REQUIRE(runconfig_to_json(back) == j);
  REQUIRE(back.network.n_neurons == 123);
  REQUIRE(back.snn.hidden1 == 7);
  REQUIRE(back.synth.coupling == 0.25);
  REQUIRE(back.nbs_exhaustive);
  REQUIRE(back.simulate);

  SECTION("unknown keys are named in the diagnostic") {
    json bad = j;
    bad["bogus"] = 1;
    REQUIRE_THROWS_WITH(runconfig_from_json(bad),
                        Catch::Matchers::ContainsSubstring("run.bogus"));
    json nested = j;
    nested["classify"]["snn"]["gamma"] = 1;
    REQUIRE_THROWS_WITH(
        runconfig_from_json(nested),
        Catch::Matchers::ContainsSubstring("classify.snn.gamma"));
  }

  SECTION("wrong types are config errors") {
    json bad = j;
    bad["network"]["n_neurons"] = "lots";
    REQUIRE_THROWS_AS(runconfig_from_json(bad), config_error);
  }

  SECTION("enumerations are validated") {
    RunConfig c;
    c.model = 3;
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = RunConfig{};
    c.condition = "XX";
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = RunConfig{};
    c.nbs_tail = "up";
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = RunConfig{};
    c.classifier = "forest";
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = RunConfig{};
    c.cv_folds = 1;
    REQUIRE_THROWS_AS(c.validate(), config_error);
    c = RunConfig{};
    c.bands = {};
    REQUIRE_THROWS_AS(c.validate(), config_error);
  }
}

TEST_CASE("synth command writes a loadable study and replays bit-identically") {
  TempDir tmp;
  const RunConfig cfg = tiny_study_config(tmp.sub("study"), 21);
  run_command("synth", cfg);

  const Manifest m = load_manifest(tmp.sub("study") + "/manifest.json");
  REQUIRE(m.entries.size() == 6);
  const auto recs = load_dataset(m, tmp.sub("study"));
  REQUIRE(recs.size() == 6);
  REQUIRE(recs[0].epochs.size() == 4);  // 2000 samples / 500

  const Provenance p = load_provenance(tmp.sub("study"));
  REQUIRE(p.command == "synth");
  REQUIRE(p.master_seed == 21);

  replay_run(tmp.sub("study"), tmp.sub("study2"));
  REQUIRE(dir_bytes(tmp.sub("study")) == dir_bytes(tmp.sub("study2")));
}

TEST_CASE("sim command emits a relative spectrum and replays bit-identically") {
  TempDir tmp;
  RunConfig cfg;
  cfg.out_dir = tmp.sub("sim");
  cfg.seed = 5;
  cfg.model = 1;
  cfg.condition = "HC";
  cfg.n_runs = 1;
  cfg.network.duration_ms = 5200.0;  // one 4096-sample Welch segment
  run_command("sim", cfg);

  const Spectrum s = read_spectrum_csv(tmp.sub("sim") + "/spectrum.csv");
  REQUIRE(s.normalized);
  double total = 0.0;
  for (double v : s.power) total += v;
  REQUIRE(std::abs(total - 1.0) < 1e-9);
  const json sidecar =
      json::parse(read_text_file(tmp.sub("sim") + "/sim.json"));
  REQUIRE(sidecar.at("model") == 1);
  REQUIRE(sidecar.at("aperiodic").contains("exponent"));

  replay_run(tmp.sub("sim"), tmp.sub("sim2"));
  REQUIRE(dir_bytes(tmp.sub("sim")) == dir_bytes(tmp.sub("sim2")));
}

TEST_CASE("data-driven commands run off one manifest and replay") {
  TempDir tmp;
  run_command("synth", tiny_study_config(tmp.sub("study"), 33));
  const std::string manifest = tmp.sub("study") + "/manifest.json";

  SECTION("features") {
    RunConfig cfg;
    cfg.out_dir = tmp.sub("feat");
    cfg.seed = 1;
    cfg.manifest = manifest;
    run_command("features", cfg);
    const auto rows = read_features_csv(tmp.sub("feat") + "/features.csv");
    REQUIRE(rows.size() == 24);  // 6 subjects x 4 epochs
    const std::vector<std::string> six(standard_channel_labels().begin(),
                                       standard_channel_labels().begin() + 6);
    REQUIRE(rows[0].names == feature_layout_names(six, FeatureConfig{}));
    replay_run(tmp.sub("feat"), tmp.sub("feat2"));
    REQUIRE(dir_bytes(tmp.sub("feat")) == dir_bytes(tmp.sub("feat2")));
  }

  SECTION("plv") {
    RunConfig cfg;
    cfg.out_dir = tmp.sub("plv");
    cfg.seed = 1;
    cfg.manifest = manifest;
    cfg.bands = {"theta", "alpha"};
    run_command("plv", cfg);
    std::vector<std::string> labels;
    const ConnMatrix cm = read_conn_csv(
        tmp.sub("plv") + "/conn_synth-AD-00_alpha.csv", &labels);
    REQUIRE(cm.size() == 6);
    REQUIRE(labels.size() == 6);
    const json index =
        json::parse(read_text_file(tmp.sub("plv") + "/plv.json"));
    REQUIRE(index.size() == 12);  // 6 subjects x 2 bands
    replay_run(tmp.sub("plv"), tmp.sub("plv2"));
    REQUIRE(dir_bytes(tmp.sub("plv")) == dir_bytes(tmp.sub("plv2")));
  }

  SECTION("nbs in exhaustive mode") {
    RunConfig cfg;
    cfg.out_dir = tmp.sub("nbs");
    cfg.seed = 1;
    cfg.manifest = manifest;
    cfg.band = "alpha";
    cfg.nbs_t_primary = 1.5;
    cfg.nbs_exhaustive = true;
    run_command("nbs", cfg);
    const json report =
        json::parse(read_text_file(tmp.sub("nbs") + "/nbs_alpha.json"));
    REQUIRE(report.at("band") == "alpha");
    REQUIRE(report.at("exhaustive") == true);
    REQUIRE(report.at("n_perm") == 20);  // C(6, 3)
    REQUIRE(report.at("n_hc") == 3);
    REQUIRE(report.at("n_ad") == 3);
    REQUIRE(report.contains("components"));
    replay_run(tmp.sub("nbs"), tmp.sub("nbs2"));
    REQUIRE(dir_bytes(tmp.sub("nbs")) == dir_bytes(tmp.sub("nbs2")));
  }

  SECTION("classify on manifest features") {
    RunConfig cfg;
    cfg.out_dir = tmp.sub("cls");
    cfg.seed = 2;
    cfg.manifest = manifest;
    cfg.classifier = "ann";
    cfg.cv_folds = 3;
    cfg.ann.epochs = 10;
    cfg.ann.hidden1 = 8;
    cfg.ann.hidden2 = 4;
    run_command("classify", cfg);
    const json report =
        json::parse(read_text_file(tmp.sub("cls") + "/classify.json"));
    REQUIRE(report.at("source") == "manifest");
    REQUIRE(report.at("ann").at("fold_aucs").size() == 3);
    REQUIRE_FALSE(report.contains("snn"));
    replay_run(tmp.sub("cls"), tmp.sub("cls2"));
    REQUIRE(dir_bytes(tmp.sub("cls")) == dir_bytes(tmp.sub("cls2")));
  }
}

TEST_CASE("classify without a manifest uses the bundled table") {
  TempDir tmp;
  RunConfig cfg;
  cfg.out_dir = tmp.sub("cls");
  cfg.seed = 4;
  cfg.classifier = "ann";
  cfg.cv_folds = 2;
  cfg.feat_subjects_per_group = 5;
  cfg.feat_epochs_per_subject = 4;
  cfg.ann.epochs = 10;
  cfg.ann.hidden1 = 8;
  cfg.ann.hidden2 = 4;
  cfg.attribution = "permutation";
  cfg.attribution_repeats = 1;
  run_command("classify", cfg);

  const json report =
      json::parse(read_text_file(tmp.sub("cls") + "/classify.json"));
  REQUIRE(report.at("source") == "synthetic");
  REQUIRE(report.at("n_rows") == 40);
  const json attr =
      json::parse(read_text_file(tmp.sub("cls") + "/attribution.json"));
  REQUIRE(attr.at("method") == "permutation");
  REQUIRE(attr.at("ranked").size() == report.at("n_features"));

  replay_run(tmp.sub("cls"), tmp.sub("cls2"));
  REQUIRE(dir_bytes(tmp.sub("cls")) == dir_bytes(tmp.sub("cls2")));
}

TEST_CASE("compare-d reproduces the bundled table within rounding") {
  TempDir tmp;
  RunConfig cfg;
  cfg.out_dir = tmp.sub("cmp");
  run_command("compare-d", cfg);

  const auto rows = read_csv(tmp.sub("cmp") + "/effects.csv");
  REQUIRE(rows.size() == 6);  // header + 4 models + EEG reference
  REQUIRE(rows[0][6] == "cohens_d");
  REQUIRE(rows[0][7] == "published_d");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const double recomputed = std::stod(rows[r][6]);
    const double published = std::stod(rows[r][7]);
    REQUIRE(std::abs(recomputed - published) < 0.01);
  }
  replay_run(tmp.sub("cmp"), tmp.sub("cmp2"));
  REQUIRE(dir_bytes(tmp.sub("cmp")) == dir_bytes(tmp.sub("cmp2")));
}

TEST_CASE("command dispatch rejects unknown names and bad inputs") {
  TempDir tmp;
  RunConfig cfg;
  cfg.out_dir = tmp.sub("x");
  REQUIRE_THROWS_AS(run_command("bogus", cfg), config_error);

  RunConfig need_manifest;
  need_manifest.out_dir = tmp.sub("y");
  REQUIRE_THROWS_WITH(run_command("features", need_manifest),
                      Catch::Matchers::ContainsSubstring("--manifest"));

  RunConfig missing;
  missing.out_dir = tmp.sub("z");
  missing.manifest = tmp.sub("nope.json");
  REQUIRE_THROWS_AS(run_command("plv", missing), io_error);
}

TEST_CASE("installed binary honors the exit-status contract") {
  TempDir tmp;
  const int ok = run_binary("synth --out " + tmp.sub("s") +
                            " --per-group 1 --samples 2000 --seed 7 "
                            "> /dev/null 2>&1");
  REQUIRE(ok == 0);
  REQUIRE(fs::exists(tmp.sub("s") + "/provenance.json"));

  const int bad_manifest = run_binary(
      "features --manifest " + tmp.sub("absent.json") + " --out " +
      tmp.sub("f") + " > /dev/null 2> " + tmp.sub("err.txt"));
  REQUIRE(bad_manifest != 0);
  const json err = json::parse(read_text_file(tmp.sub("err.txt")));
  REQUIRE(err.contains("error"));
  REQUIRE(err.contains("message"));

  const int usage = run_binary("definitely-not-a-command > /dev/null 2>&1");
  REQUIRE(usage != 0);
}
