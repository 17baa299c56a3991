#include "posim/errors.hpp"
#include "posim/experiment.hpp"

#include <CLI11.hpp>

#include <iostream>
#include <optional>
#include <string>

namespace {

// Exit codes: 0 ok, 2 config error, 3 missing artifact, 4 numerical failure.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitMissing = 3;
constexpr int kExitNumerical = 4;

struct CommonArgs {
  std::string config_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed_override;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  cmd->add_option("--out", args.out_dir, "Artifact directory");
  cmd->add_option("--seed", args.seed_override, "Override the config seed");
  cmd->add_option("--jobs", args.jobs, "Worker threads for per-language/per-pair work")
      ->check(CLI::PositiveNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual posterior similarity pipeline"};
  app.require_subcommand(1);

  CommonArgs args;
  const char* stages[] = {"generate", "train-am", "train-map", "analyze", "fuse", "report"};
  const char* descriptions[] = {
      "Generate language specs and split corpora",
      "Train per-language and pooled acoustic models",
      "Train one mapping network per ordered language pair",
      "Emit similarity/overlap/probe/degradation tables and posterior streams",
      "Grid-search fusion weights on validation and evaluate on test",
      "Bundle analysis and fusion tables into one indexed directory"};
  for (std::size_t i = 0; i < 6; ++i) add_common(app.add_subcommand(stages[i], descriptions[i]), args);

  CLI11_PARSE(app, argc, argv);

  try {
    posim::ExperimentConfig cfg = posim::ExperimentConfig::load(args.config_path);
    if (args.seed_override) {
      cfg.seed = *args.seed_override;
      cfg.validate();
    }
    posim::ArtifactPaths paths{args.out_dir};

    const std::string stage = app.get_subcommands().front()->get_name();
    if (stage == "generate")
      posim::run_generate(cfg, paths, std::cout);
    else if (stage == "train-am")
      posim::run_train_am(cfg, paths, args.jobs, std::cout);
    else if (stage == "train-map")
      posim::run_train_map(cfg, paths, args.jobs, std::cout);
    else if (stage == "analyze")
      posim::run_analyze(cfg, paths, args.jobs, std::cout);
    else if (stage == "fuse")
      posim::run_fuse(cfg, paths, std::cout);
    else if (stage == "report")
      posim::run_report(cfg, paths, std::cout);
    return kExitOk;
  } catch (const posim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const posim::MissingArtifact& e) {
    std::cerr << "missing artifact: " << e.what() << "\n";
    return kExitMissing;
  } catch (const posim::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
