#include "posim/acoustic.hpp"
#include "posim/fusion.hpp"
#include "posim/net.hpp"
#include "posim/prob.hpp"
#include "posim/rng.hpp"
#include "posim/synthlang.hpp"

#include <benchmark/benchmark.h>

using namespace posim;

namespace {

Vec random_distribution(Rng& rng, int k) {
  Vec v(k);
  for (int i = 0; i < k; ++i) v[i] = -std::log(rng.uniform01_open_low());
  return v / v.sum();
}

LanguageSpec bench_language(int biphones, int dim) {
  FamilyConfig cfg;
  cfg.phoneme_counts = {20};
  cfg.overlap = Mat::Constant(1, 1, 1.0);
  cfg.drift = {0.0};
  cfg.feature_dim = dim;
  cfg.biphones_per_language = biphones;
  cfg.seed = 7;
  return make_language_family(cfg)[0];
}

void BM_KlDivergence(benchmark::State& state) {
  Rng rng(1);
  const int k = static_cast<int>(state.range(0));
  const Vec p = random_distribution(rng, k);
  const Vec q = random_distribution(rng, k);
  for (auto _ : state) benchmark::DoNotOptimize(kl_divergence(p, q));
}
BENCHMARK(BM_KlDivergence)->Arg(32)->Arg(180)->Arg(512);

void BM_ForwardBatch(benchmark::State& state) {
  const int batch = static_cast<int>(state.range(0));
  NetworkParams net = init_network({24, 128, 180}, Activation::kTanh, 3);
  Rng rng(2);
  Mat inputs(batch, 24);
  for (int r = 0; r < batch; ++r)
    for (int c = 0; c < 24; ++c) inputs(r, c) = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(forward_batch(net, inputs));
  state.SetItemsProcessed(state.iterations() * batch);
}
BENCHMARK(BM_ForwardBatch)->Arg(64)->Arg(256)->Arg(1024);

void BM_TrainEpoch(benchmark::State& state) {
  LanguageSpec lang = bench_language(60, 24);
  FrameCorpus corpus = sample_corpus(lang, 8000, 11);
  TiedStateInventory tying = tie_states(corpus, lang, 40, 50);
  Mat targets = Mat::Zero(static_cast<Eigen::Index>(corpus.frame_count()), tying.class_count());
  for (std::size_t t = 0; t < corpus.frame_count(); ++t)
    targets(static_cast<Eigen::Index>(t), *tying.class_of(static_cast<int>(corpus.labels[t]))) = 1.0;
  TrainConfig cfg;
  cfg.learning_rate = 0.2;
  cfg.batch_size = 256;
  cfg.max_epochs = 1;
  cfg.early_stop_patience = 1;
  for (auto _ : state) {
    NetworkParams net = init_network({24, 128, tying.class_count()}, Activation::kTanh, 5);
    benchmark::DoNotOptimize(train(net, corpus.features, targets, corpus.features, targets, cfg));
  }
  state.SetItemsProcessed(state.iterations() * corpus.frame_count());
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond);

void BM_TieStates(benchmark::State& state) {
  const int biphones = static_cast<int>(state.range(0));
  LanguageSpec lang = bench_language(biphones, 24);
  FrameCorpus corpus = sample_corpus(lang, 20000, 13);
  for (auto _ : state)
    benchmark::DoNotOptimize(tie_states(corpus, lang, std::max(1, biphones * 6 / 10), 50));
}
BENCHMARK(BM_TieStates)->Arg(100)->Arg(300)->Unit(benchmark::kMillisecond);

void BM_FuseStream(benchmark::State& state) {
  Rng rng(4);
  const int frames = 4000, classes = 180;
  PosteriorStream target, s1, s2;
  auto fill = [&](PosteriorStream& s) {
    s.posteriors.resize(frames, classes);
    for (int t = 0; t < frames; ++t)
      s.posteriors.row(t) = random_distribution(rng, classes).transpose();
    s.labels.assign(frames, 0);
    s.corpus_fingerprint = 99;
  };
  fill(target);
  fill(s1);
  fill(s2);
  FusionConfig cfg{0.6, {0.2, 0.2}};
  std::vector<const PosteriorStream*> mapped{&s1, &s2};
  for (auto _ : state) benchmark::DoNotOptimize(fuse_stream(target, mapped, cfg));
  state.SetItemsProcessed(state.iterations() * frames);
}
BENCHMARK(BM_FuseStream)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
