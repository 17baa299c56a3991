// Acceptance suite: runs the full pipeline on the frozen synthetic families
// and checks every qualitative claim, printing one PASS/FAIL line per
// criterion. Exit status is the number of failed criteria.

#include "posim/binio.hpp"
#include "posim/corpus_io.hpp"
#include "posim/errors.hpp"
#include "posim/checkpoint.hpp"
#include "posim/experiment.hpp"
#include "posim/fusion.hpp"
#include "posim/mapping.hpp"
#include "posim/net.hpp"
#include "posim/prob.hpp"
#include "posim/rng.hpp"
#include "posim/similarity.hpp"
#include "posim/stream_io.hpp"

#include <json.hpp>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <thread>

using namespace posim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Harness {
  int failures = 0;
  void check(int criterion, const std::string& what, bool ok, const std::string& detail = "") {
    std::printf("[%s] criterion %d: %s%s%s\n", ok ? "PASS" : "FAIL", criterion, what.c_str(),
                detail.empty() ? "" : " -- ", detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
  }
};

int worker_jobs() {
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(std::min(hw, 4u));
}

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingArtifact("acceptance: missing " + path.string());
  json j;
  in >> j;
  return j;
}

void run_pipeline(const ExperimentConfig& cfg, const ArtifactPaths& paths, bool with_fusion) {
  std::ostringstream sink;
  run_generate(cfg, paths, sink);
  run_train_am(cfg, paths, worker_jobs(), sink);
  run_train_map(cfg, paths, worker_jobs(), sink);
  run_analyze(cfg, paths, worker_jobs(), sink);
  if (with_fusion) run_fuse(cfg, paths, sink);
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

Vec random_distribution(Rng& rng, int k) {
  Vec v(k);
  for (int i = 0; i < k; ++i) v[i] = -std::log(rng.uniform01_open_low());
  return v / v.sum();
}

// ---- criterion 1: numerical kernels ----------------------------------------

void criterion_numerics(Harness& h) {
  bool oracle_ok = true;
  oracle_ok &= std::abs(kl_divergence((Vec(2) << 1.0, 0.0).finished(),
                                      (Vec(2) << 0.5, 0.5).finished()) -
                        std::log(2.0)) <= 1e-9;
  const double hand = 0.5 * std::log(0.5 / 0.9) + 0.5 * std::log(0.5 / 0.1);
  oracle_ok &= std::abs(kl_divergence((Vec(2) << 0.5, 0.5).finished(),
                                      (Vec(2) << 0.9, 0.1).finished()) -
                        hand) <= 1e-9;
  oracle_ok &= kl_divergence((Vec(2) << 0.3, 0.7).finished(),
                             (Vec(2) << 0.3, 0.7).finished()) == 0.0;
  oracle_ok &= entropy(Vec::Constant(8, 1.0 / 8.0)) - std::log(8.0) <= 1e-9;
  oracle_ok &= std::abs(entropy((Vec(3) << 0.5, 0.25, 0.25).finished()) -
                        1.5 * std::log(2.0)) <= 1e-9;
  oracle_ok &= entropy((Vec(4) << 0.0, 1.0, 0.0, 0.0).finished()) == 0.0;

  bool bounds_ok = true;
  Rng rng(20260810);
  for (int trial = 0; trial < 10000 && bounds_ok; ++trial) {
    const int k = 2 + static_cast<int>(rng.below(31));
    const Vec p = random_distribution(rng, k);
    const Vec q = random_distribution(rng, k);
    const double d = kl_divergence(p, q);
    const double e = entropy(p);
    bounds_ok &= d >= 0.0 && e >= 0.0 && e <= std::log(static_cast<double>(k)) + 1e-12;
  }
  h.check(1, "kl/entropy hand oracles within 1e-9; bounds on 10000 random pairs",
          oracle_ok && bounds_ok);
}

// ---- criterion 2: gradients -------------------------------------------------

void criterion_gradients(Harness& h) {
  Rng rng(99);
  double worst = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int depth = 1 + static_cast<int>(rng.below(3));
    std::vector<int> dims{2 + static_cast<int>(rng.below(15))};
    for (int l = 1; l < depth; ++l) dims.push_back(2 + static_cast<int>(rng.below(15)));
    dims.push_back(2 + static_cast<int>(rng.below(15)));
    NetworkParams net = init_network(
        dims, rng.below(2) ? Activation::kTanh : Activation::kRelu, rng.next_u64());
    Mat inputs(4, dims.front());
    for (Eigen::Index r = 0; r < 4; ++r)
      for (int c = 0; c < dims.front(); ++c) inputs(r, c) = rng.normal();
    Mat targets(4, dims.back());
    for (Eigen::Index r = 0; r < 4; ++r)
      targets.row(r) = random_distribution(rng, dims.back()).transpose();
    worst = std::max(worst, gradient_check(net, inputs, targets));
  }
  h.check(2, "gradient_check < 1e-4 on 20 random small networks", worst < 1e-4,
          "max deviation " + num(worst));
}

// ---- standard family: criteria 3, 4, 5, 8, 9 -------------------------------

struct StandardRun {
  ExperimentConfig cfg = ExperimentConfig::standard();
  ArtifactPaths paths;
  std::string hash;
};

void criterion_self_similarity(Harness& h, const StandardRun& run) {
  bool diag_ok = true;
  std::string diag_detail;
  for (const auto& name : run.cfg.names) {
    PosteriorStream stream = load_stream(run.paths.stream(name, "test", "target"));
    const double dx = mean_kl(stream.posteriors, stream.posteriors);
    diag_ok &= dx == 0.0;
    diag_detail += name + "=" + num(dx) + " ";
  }

  // Self-trained mapping networks, one per language.
  LoadedFamily family = load_family(run.cfg, run.paths);
  bool self_ok = true;
  std::string self_detail;
  for (std::size_t i = 0; i < family.langs.size(); ++i) {
    AcousticModel am = load_acoustic_model(run.paths, run.cfg.names[i], run.hash);
    FrameCorpus capped;
    {
      const auto& c = family.train[i];
      const std::size_t cap = std::min<std::size_t>(15000, c.frame_count());
      capped.language = c.language;
      capped.features = c.features.topRows(static_cast<Eigen::Index>(cap));
      capped.labels.assign(c.labels.begin(), c.labels.begin() + static_cast<std::ptrdiff_t>(cap));
      for (std::uint32_t u : c.utterance_starts)
        if (u < cap) capped.utterance_starts.push_back(u);
    }
    PosteriorStream train_stream = posteriors(am, capped);
    PosteriorStream val_stream = posteriors(am, family.val[i]);
    PosteriorPairs pairs = build_training_pairs(train_stream, train_stream);
    PosteriorPairs val_pairs = build_training_pairs(val_stream, val_stream);
    MapConfig mc;
    mc.hidden_factor = run.cfg.map_hidden_factor;
    mc.activation = activation_from_string(run.cfg.map_activation);
    mc.train = run.cfg.map_train;
    mc.train.rng_seed = derive_seed(run.cfg.seed, "self-map", i);
    MappingNetwork net = train_mapping(pairs, val_pairs, mc);
    self_ok &= net.final_val_kl < 0.05;
    self_detail += run.cfg.names[i] + "=" + num(net.final_val_kl) + " ";
  }
  h.check(3, "identity-mapping D_X = 0 exactly; self-trained map val KL < 0.05",
          diag_ok && self_ok, diag_detail + "| self KL " + self_detail);
}

void criterion_subset_trend(Harness& h, const StandardRun& run) {
  bool ok = true;
  std::string detail;
  for (const auto& target : run.cfg.names) {
    for (const auto& source : run.cfg.names) {
      if (source == target) continue;
      const json j = read_json(run.paths.analysis_dir() /
                               ("pair_" + target + "_from_" + source + ".json"));
      std::map<std::string, double> kl;
      for (const auto& row : j["rows"])
        if (!row["mean_kl"].is_null()) kl[row["subset"].get<std::string>()] = row["mean_kl"].get<double>();
      const bool pair_ok = kl.count("SS") && kl.count("RU") && kl.count("RSS") &&
                           kl["SS"] < kl["RU"] && kl["SS"] < kl["RSS"];
      if (!pair_ok)
        detail += target + "<-" + source + "(SS=" + num(kl["SS"]) + ",RSS=" + num(kl["RSS"]) +
                  ",RU=" + num(kl["RU"]) + ") ";
      ok &= pair_ok;
    }
  }
  h.check(4, "subset KL trend: mean KL(SS) < KL(RU) and KL(SS) < KL(RSS) for every pair", ok,
          detail.empty() ? "all 6 ordered pairs" : detail);
}

void criterion_samc_conditional(Harness& h, const StandardRun& run) {
  bool ok = true;
  std::string detail;
  for (const auto& target : run.cfg.names) {
    for (const auto& source : run.cfg.names) {
      if (source == target) continue;
      const json j = read_json(run.paths.analysis_dir() /
                               ("pair_" + target + "_from_" + source + ".json"));
      for (const auto& row : j["rows"]) {
        if (row["subset"] != "SS") continue;
        if (row["mean_kl_samc"].is_null() || row["mean_kl"].is_null()) {
          ok = false;
          detail += target + "<-" + source + "(empty) ";
          break;
        }
        const double conditional = row["mean_kl_samc"].get<double>();
        const double unconditional = row["mean_kl"].get<double>();
        if (!(conditional <= unconditional)) {
          ok = false;
          detail += target + "<-" + source + "(" + num(conditional) + ">" + num(unconditional) + ") ";
        }
      }
    }
  }
  h.check(5, "SAMC-conditioned mean KL <= unconditional SS mean KL for every pair", ok,
          detail.empty() ? "all 6 ordered pairs" : detail);
}

void criterion_pooled_degradation(Harness& h, const StandardRun& run, const fs::path& tmp) {
  bool degraded = true;
  std::string detail = "standard: ";
  {
    const json j = read_json(run.paths.analysis_dir() / "baseline.json");
    for (const auto& row : j["rows"]) {
      const double mono = row["mono_test_error_pct"].get<double>();
      const double pooled = row["pooled_test_error_pct"].get<double>();
      degraded &= pooled > mono;
      detail += row["language"].get<std::string>() + "(" + num(mono) + "->" + num(pooled) + ") ";
    }
  }

  // Control: identical languages (overlap 1, drift 0) keep pooled within 2
  // points of monolingual.
  ExperimentConfig control = ExperimentConfig::standard();
  control.seed = 4242;
  control.names = {"P", "Q"};
  control.phoneme_counts = {30, 30};
  control.overlaps = {{1.0, 1.0}, {1.0, 1.0}};
  control.drift = {0.0, 0.0};
  control.train_frames = 20000;
  control.val_frames = 1500;
  control.test_frames = 3000;
  control.map_train_frame_cap = 1;  // mapping nets unused here
  control.map_train.max_epochs = 1;
  ArtifactPaths control_paths{tmp / "control"};
  {
    std::ostringstream sink;
    run_generate(control, control_paths, sink);
    run_train_am(control, control_paths, worker_jobs(), sink);
  }
  LoadedFamily fam = load_family(control, control_paths);
  AcousticModel pooled_model = load_acoustic_model(control_paths, "pooled", control.hash());
  PooledInventory inv = make_pooled_inventory(fam.langs);
  bool control_ok = true;
  detail += "| control: ";
  for (std::size_t t = 0; t < fam.langs.size(); ++t) {
    AcousticModel mono_model = load_acoustic_model(control_paths, control.names[t], control.hash());
    const auto translation = inv.translation_for(fam.langs[t]);
    const double mono =
        frame_error(posteriors(mono_model, fam.test[t]), mono_model.tying).lenient_error;
    const double pooled =
        frame_error(posteriors(pooled_model, fam.test[t]), pooled_model.tying, &translation)
            .lenient_error;
    control_ok &= std::abs(pooled - mono) * 100.0 <= 2.0;
    detail += control.names[t] + "(" + num(mono * 100) + " vs " + num(pooled * 100) + ") ";
  }
  h.check(8, "pooled degrades every language at drift 0.5; clone control stays within 2 points",
          degraded && control_ok, detail);
}

void criterion_fusion(Harness& h, const StandardRun& run) {
  const json j = read_json(run.paths.fusion_dir() / "table6_fusion.json");
  bool dominance = true;
  int improved = 0;
  // Reference relative gains reported for qualitative comparison only.
  const std::map<std::string, double> reference = {{"en", 0.94}, {"de", 4.26}, {"nl", 7.91}};
  std::string detail;
  for (const auto& row : j["rows"]) {
    dominance &= row["val_fused_error_pct"].get<double>() <=
                 row["val_mono_error_pct"].get<double>() + 1e-12;
    const double mono = row["mono_error_pct"].get<double>();
    const double fused = row["fused_error_pct"].get<double>();
    if (fused < mono) ++improved;
    detail += row["language"].get<std::string>() + "(mono " + num(mono) + "%, fused " +
              num(fused) + "%, rel " +
              (row["relative_improvement_pct"].is_null()
                   ? "n/a"
                   : num(row["relative_improvement_pct"].get<double>())) +
              "%) ";
  }
  detail += "| reference rel gains:";
  for (const auto& [lang, gain] : reference) detail += " " + lang + "=" + num(gain) + "%";
  h.check(9, "fusion: val dominance by construction; fused < mono on test for >= 2 of 3",
          dominance && improved >= 2, detail);
}

// ---- crafted family: criteria 6, 7 ------------------------------------------

void criteria_decoupling(Harness& h, const fs::path& tmp) {
  // Pair (A,B): high overlap, large drift. Pair (A,C): low overlap, small
  // drift. Closeness must follow drift, not overlap.
  ExperimentConfig cfg = ExperimentConfig::standard();
  cfg.seed = 31337;
  cfg.names = {"A", "B", "C"};
  cfg.overlaps = {{1.0, 0.85, 0.60}, {0.85, 1.0, 0.60}, {0.60, 0.60, 1.0}};
  cfg.drift = {0.0, 1.0, 0.1};
  cfg.train_frames = 30000;
  cfg.val_frames = 1500;
  cfg.test_frames = 3000;
  cfg.map_train_frame_cap = 20000;
  ArtifactPaths paths{tmp / "crafted"};
  run_pipeline(cfg, paths, false);

  const json ab = read_json(paths.analysis_dir() / "pair_A_from_B.json");
  const json ac = read_json(paths.analysis_dir() / "pair_A_from_C.json");
  const double dx_ab = ab["overall_mean_kl"].get<double>();
  const double dx_ac = ac["overall_mean_kl"].get<double>();

  const json overlap = read_json(paths.analysis_dir() / "table1_overlap.json");
  const double share_ab = overlap["shares_pct"][0][1].get<double>();
  const double share_ac = overlap["shares_pct"][0][2].get<double>();

  h.check(6,
          "overlap/closeness decoupling: D_X(A<-C) < D_X(A<-B) despite overlap(A,B) > overlap(A,C)",
          dx_ac < dx_ab && share_ab > share_ac,
          "D_X(A<-B)=" + num(dx_ab) + " D_X(A<-C)=" + num(dx_ac) + " shares " + num(share_ab) +
              "% vs " + num(share_ac) + "%");

  const double probe_b = ab["mean_probe_entropy_low_n"].get<double>();
  const double probe_c = ac["mean_probe_entropy_low_n"].get<double>();
  const int n_b = ab["probe_n"].get<int>();
  const int n_c = ac["probe_n"].get<int>();
  h.check(7, "entropy probing: mean low-n probe entropy of N_{C->A} < N_{B->A} (n = 100)",
          probe_c < probe_b && n_b == 100 && n_c == 100,
          "B->A " + num(probe_b) + " vs C->A " + num(probe_c) + " (n=" + std::to_string(n_b) + ")");
}

// ---- criterion 10: determinism and formats ----------------------------------

void criterion_determinism(Harness& h, const fs::path& tmp) {
  ExperimentConfig cfg = ExperimentConfig::smoke();
  cfg.train_frames = 2500;
  cfg.val_frames = 500;
  cfg.test_frames = 600;
  cfg.am_train.max_epochs = 4;
  cfg.map_train.max_epochs = 4;
  cfg.map_train_frame_cap = 2500;
  cfg.probe_top_n = 5;

  ArtifactPaths a{tmp / "det_a"}, b{tmp / "det_b"};
  std::ostringstream sink;
  run_pipeline(cfg, a, true);
  run_report(cfg, a, sink);
  run_pipeline(cfg, b, true);
  run_report(cfg, b, sink);
  const bool identical = tree_hashes(a.root) == tree_hashes(b.root);

  // Round-trips of the three binary formats are bit-exact.
  bool formats_ok = true;
  {
    NetworkParams net = init_network({7, 9, 5}, Activation::kTanh, 123);
    save_checkpoint(net, tmp / "fmt_net", CheckpointMeta{123, {}});
    NetworkParams loaded = load_checkpoint(tmp / "fmt_net");
    formats_ok &= checkpoint_fingerprint(loaded) == checkpoint_fingerprint(net);

    FrameCorpus corpus = load_corpus(a.corpus(cfg.names[0], "train"));
    save_corpus(corpus, tmp / "fmt_corpus");
    formats_ok &= read_file_bytes(tmp / "fmt_corpus.pmfc") ==
                  read_file_bytes(fs::path(a.corpus(cfg.names[0], "train").string() + ".pmfc"));

    PosteriorStream stream = load_stream(a.stream(cfg.names[0], "test", "target"));
    save_stream(stream, tmp / "fmt_stream.pmps");
    formats_ok &= read_file_bytes(tmp / "fmt_stream.pmps") ==
                  read_file_bytes(a.stream(cfg.names[0], "test", "target"));
  }

  // Golden CSV schemas.
  auto header_of = [](const fs::path& path) {
    std::ifstream in(path);
    std::string line;
    while (std::getline(in, line))
      if (!line.empty() && line[0] != '#') return line;
    return std::string();
  };
  const bool schema_ok =
      header_of(a.analysis_dir() / ("pair_" + cfg.names[0] + "_from_" + cfg.names[1] + ".csv")) ==
          "subset,frames,pct_correct_samc,mean_kl,mean_kl_samc,mean_entropy,mean_entropy_samc" &&
      header_of(a.analysis_dir() / "baseline.csv") ==
          "language,mono_classes,pooled_classes,mono_val_error_pct,mono_test_error_pct,pooled_test_error_pct" &&
      header_of(a.fusion_dir() / "table6_fusion.csv") ==
          "language,sources,mono_error_pct,fused_error_pct,relative_improvement_pct,"
          "val_mono_error_pct,val_fused_error_pct,w_target,w_sources";

  h.check(10, "pipeline rerun bitwise identical; PMNN/PMFC/PMPS round-trip; CSV schemas stable",
          identical && formats_ok && schema_ok,
          std::string(identical ? "trees identical" : "TREES DIFFER") + ", formats " +
              (formats_ok ? "exact" : "BROKEN") + ", schemas " + (schema_ok ? "stable" : "CHANGED"));
}

}  // namespace

int main(int argc, char** argv) {
  const auto t0 = std::chrono::steady_clock::now();
  fs::path tmp = fs::temp_directory_path() / "posim_acceptance";
  if (argc > 1) tmp = argv[1];
  fs::remove_all(tmp);
  fs::create_directories(tmp);

  Harness h;
  try {
    criterion_numerics(h);
    criterion_gradients(h);

    StandardRun run{ExperimentConfig::standard(), ArtifactPaths{tmp / "standard"}, ""};
    run.hash = run.cfg.hash();
    std::cout << "running standard family pipeline (config " << run.hash << ") ..." << std::endl;
    run_pipeline(run.cfg, run.paths, true);

    criterion_self_similarity(h, run);
    criterion_subset_trend(h, run);
    criterion_samc_conditional(h, run);
    criteria_decoupling(h, tmp);
    criterion_pooled_degradation(h, run, tmp);
    criterion_fusion(h, run);
    criterion_determinism(h, tmp);
  } catch (const std::exception& e) {
    std::cout << "[FAIL] acceptance aborted: " << e.what() << "\n";
    ++h.failures;
  }

  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("%d/10 criteria passed in %.1fs\n", 10 - h.failures, elapsed);
  fs::remove_all(tmp);
  return h.failures;
}
