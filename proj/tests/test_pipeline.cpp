#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "posim/binio.hpp"
#include "posim/errors.hpp"
#include "posim/experiment.hpp"
#include "posim/stream_io.hpp"
#include "test_support.hpp"

#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

using namespace posim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

ExperimentConfig tiny_config() {
  ExperimentConfig cfg;
  cfg.seed = 515;
  cfg.names = {"X", "Y"};
  cfg.phoneme_counts = {6, 6};
  cfg.overlaps = {{1.0, 0.5}, {0.5, 1.0}};
  cfg.drift = {0.3, 0.3};
  cfg.feature_dim = 6;
  cfg.biphones_per_language = 20;
  cfg.train_frames = 2500;
  cfg.val_frames = 400;
  cfg.test_frames = 600;
  cfg.am_hidden_dims = {16};
  cfg.am_train.max_epochs = 5;
  cfg.am_train.early_stop_patience = 5;
  cfg.am_train.batch_size = 64;
  cfg.map_train.max_epochs = 5;
  cfg.map_train.early_stop_patience = 5;
  cfg.map_train.batch_size = 64;
  cfg.map_train_frame_cap = 2500;
  cfg.fusion_grid_step = 0.5;
  cfg.probe_top_n = 5;
  cfg.probe_top_k = 3;
  return cfg;
}

void run_all(const ExperimentConfig& cfg, const ArtifactPaths& paths) {
  std::ostringstream sink;
  run_generate(cfg, paths, sink);
  run_train_am(cfg, paths, 2, sink);
  run_train_map(cfg, paths, 2, sink);
  run_analyze(cfg, paths, 2, sink);
  run_fuse(cfg, paths, sink);
  run_report(cfg, paths, sink);
}

std::map<std::string, std::uint64_t> tree_hashes(const fs::path& root) {
  std::map<std::string, std::uint64_t> hashes;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const auto bytes = read_file_bytes(entry.path());
    hashes[fs::relative(entry.path(), root).string()] =
        fnv1a64(std::string_view(bytes.data(), bytes.size()));
  }
  return hashes;
}

std::string first_data_header(const fs::path& csv) {
  std::ifstream in(csv);
  REQUIRE(in.good());
  std::string line;
  while (std::getline(in, line))
    if (!line.empty() && line[0] != '#') return line;
  return "";
}

}  // namespace

TEST_CASE("pipeline end to end on a tiny family") {
  posim::testing::TempDir dir("pipe");
  const ExperimentConfig cfg = tiny_config();
  const ArtifactPaths paths{dir.path / "out"};
  run_all(cfg, paths);

  SUBCASE("artifact counts match the family size") {
    // 2 languages: 2 AMs + pooled, 2 mapping nets, 6 corpora.
    CHECK(fs::exists(paths.am_stem("X").string() + ".pmnn"));
    CHECK(fs::exists(paths.am_stem("Y").string() + ".pmnn"));
    CHECK(fs::exists(paths.am_stem("pooled").string() + ".pmnn"));
    CHECK(fs::exists(paths.map_stem("X", "Y").string() + ".pmnn"));
    CHECK(fs::exists(paths.map_stem("Y", "X").string() + ".pmnn"));
    CHECK_FALSE(fs::exists(paths.map_stem("X", "X").string() + ".pmnn"));
    int corpora = 0;
    for (const auto& e : fs::directory_iterator(paths.family_dir()))
      if (e.path().extension() == ".pmfc") ++corpora;
    CHECK(corpora == 6);
  }

  SUBCASE("similarity matrix diagonal is exactly zero") {
    std::ifstream in(paths.analysis_dir() / "table5_similarity_matrix.json");
    json j;
    in >> j;
    CHECK(j["mean_kl"][0][0].get<double>() == 0.0);
    CHECK(j["mean_kl"][1][1].get<double>() == 0.0);
    CHECK(j["mean_kl"][0][1].get<double>() > 0.0);
  }

  SUBCASE("fusion dominates the pure-target configuration on validation") {
    std::ifstream in(paths.fusion_dir() / "table6_fusion.json");
    json j;
    in >> j;
    for (const auto& row : j["rows"]) {
      CHECK(row["val_fused_error_pct"].get<double>() <=
            row["val_mono_error_pct"].get<double>() + 1e-12);
      double sum = row["w_target"].get<double>();
      for (const auto& w : row["w_sources"]) sum += w.get<double>();
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    }
  }

  SUBCASE("posterior streams round-trip and pair with their corpus") {
    PosteriorStream stream = load_stream(paths.stream("X", "test", "target"));
    CHECK(stream.frame_count() > 0);
    CHECK(stream.label_space == LabelSpace::kTiedClass);
    posim::testing::TempDir copy_dir("pipe_copy");
    save_stream(stream, copy_dir.path / "copy.pmps");
    CHECK(read_file_bytes(copy_dir.path / "copy.pmps") ==
          read_file_bytes(paths.stream("X", "test", "target")));
  }

  SUBCASE("report bundles everything with an index") {
    std::ifstream in(paths.report_dir() / "index.json");
    json index;
    in >> index;
    CHECK(index["config_hash"].get<std::string>() == cfg.hash());
    CHECK(index["files"].size() > 10);
    for (const auto& f : index["files"])
      CHECK(fs::exists(paths.report_dir() / f.get<std::string>()));
  }

  SUBCASE("golden CSV schemas") {
    CHECK(first_data_header(paths.analysis_dir() / "pair_X_from_Y.csv") ==
          "subset,frames,pct_correct_samc,mean_kl,mean_kl_samc,mean_entropy,mean_entropy_samc");
    CHECK(first_data_header(paths.analysis_dir() / "table5_similarity_matrix.csv") ==
          "target,X,Y");
    CHECK(first_data_header(paths.analysis_dir() / "table1_overlap.csv") ==
          "shared_with,X,Y");
    CHECK(first_data_header(paths.analysis_dir() / "baseline.csv") ==
          "language,mono_classes,pooled_classes,mono_val_error_pct,mono_test_error_pct,pooled_test_error_pct");
    CHECK(first_data_header(paths.analysis_dir() / "degradation_X.csv") ==
          "phoneme,frames,mono_error_pct,pooled_error_pct,delta_points,relative_improvement_pct");
    CHECK(first_data_header(paths.fusion_dir() / "trace_X.csv") == "w_target,w_Y,val_error_pct");
    CHECK(first_data_header(paths.fusion_dir() / "table6_fusion.csv") ==
          "language,sources,mono_error_pct,fused_error_pct,relative_improvement_pct,"
          "val_mono_error_pct,val_fused_error_pct,w_target,w_sources");
  }

  SUBCASE("rerunning every stage leaves the tree byte-identical") {
    const auto before = tree_hashes(paths.root);
    run_all(cfg, paths);
    CHECK(tree_hashes(paths.root) == before);
  }

  SUBCASE("a stale artifact from another config is refused") {
    ExperimentConfig other = cfg;
    other.seed = cfg.seed + 1;
    std::ostringstream sink;
    CHECK_THROWS_AS(run_train_am(other, paths, 1, sink), MissingArtifact);
  }

  SUBCASE("corrupted corpus blob is reported") {
    auto blob = paths.corpus("X", "train");
    blob += ".pmfc";
    auto bytes = read_file_bytes(blob);
    bytes[100] ^= 0xff;
    write_file_bytes(blob, bytes);
    std::ostringstream sink;
    CHECK_THROWS_AS(run_train_am(cfg, paths, 1, sink), MissingArtifact);
    // generate repairs it and says so
    std::ostringstream log;
    run_generate(cfg, paths, log);
    CHECK(log.str().find("checksum mismatch, rewrote") != std::string::npos);
    run_train_am(cfg, paths, 1, sink);
  }
}

TEST_CASE("config round-trips through its canonical form") {
  const ExperimentConfig cfg = tiny_config();
  ExperimentConfig parsed = ExperimentConfig::from_text(cfg.canonical_text());
  CHECK(parsed.canonical_text() == cfg.canonical_text());
  CHECK(parsed.hash() == cfg.hash());

  SUBCASE("omitted fields fall back to defaults without changing the hash") {
    ExperimentConfig partial = ExperimentConfig::from_text(R"({"seed": 20260101})");
    CHECK(partial.hash() == ExperimentConfig::standard().hash());
  }

  SUBCASE("bad configs raise ConfigError") {
    CHECK_THROWS_AS(ExperimentConfig::from_text("not json"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_text(R"({"family":{"names":["A"]}})"), ConfigError);
    CHECK_THROWS_AS(ExperimentConfig::from_text(
                        R"({"family":{"names":["A","B"],"phoneme_counts":[5,5],
                            "overlaps":[[1.0,2.0],[2.0,1.0]],"drift":[0,0]}})"),
                    ConfigError);
  }
}

TEST_CASE("shipped config files match the programmatic definitions") {
  const fs::path repo_configs = fs::path(POSIM_SOURCE_DIR) / "configs";
  {
    std::ifstream in(repo_configs / "standard.json");
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == ExperimentConfig::standard().canonical_text());
  }
  {
    std::ifstream in(repo_configs / "smoke.json");
    REQUIRE(in.good());
    std::stringstream buf;
    buf << in.rdbuf();
    CHECK(buf.str() == ExperimentConfig::smoke().canonical_text());
  }
}

TEST_CASE("CLI binary honors the documented exit codes") {
  posim::testing::TempDir dir("cli");
  const fs::path config_path = dir.path / "config.json";
  tiny_config().save(config_path);
  const std::string binary = POSIM_CLI_PATH;
  auto run = [&](const std::string& cmd) {
    const std::string full = binary + " " + cmd + " >/dev/null 2>&1";
    const int status = std::system(full.c_str());
    return WEXITSTATUS(status);
  };

  // 2: config error (missing required flag value counts as parse failure -> CLI11 code)
  const fs::path bad_config = dir.path / "bad.json";
  std::ofstream(bad_config) << "{\"family\": {\"names\": []}}";
  CHECK(run("generate --config " + bad_config.string() + " --out " + (dir.path / "o").string()) == 2);

  // 3: missing artifact (analyze before generate)
  CHECK(run("analyze --config " + config_path.string() + " --out " + (dir.path / "o2").string()) == 3);

  // 0: success
  CHECK(run("generate --config " + config_path.string() + " --out " + (dir.path / "o3").string()) == 0);

  // seed override changes the config hash downstream stages expect
  CHECK(run("train-am --config " + config_path.string() + " --seed 999 --out " +
            (dir.path / "o3").string()) == 3);
}
