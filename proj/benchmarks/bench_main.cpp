#include <benchmark/benchmark.h>

#include "iur/encoder.hpp"
#include "iur/heads.hpp"
#include "iur/metrics.hpp"
#include "iur/objective.hpp"
#include "iur/rewriter.hpp"
#include "iur/supervision.hpp"
#include "iur/trainer.hpp"

namespace {

using namespace iur;

struct BenchState {
  std::vector<corpus::Dialogue> data;
  Model model;
  corpus::EncodedExample example;

  BenchState()
      : data(corpus::make_synthetic_corpus(1234, 64)),
        model(Model::create(config::RunConfig{}, corpus::Vocab::build(data))),
        example(corpus::encode_example(data[0], model.vocab)) {}
};

BenchState& state() {
  static BenchState s;
  return s;
}

void BM_EncoderForward(benchmark::State& st) {
  auto& s = state();
  for (auto _ : st) benchmark::DoNotOptimize(encoder::encode(s.model, s.example).hidden->value[0]);
}
BENCHMARK(BM_EncoderForward);

void BM_EditGridForward(benchmark::State& st) {
  auto& s = state();
  const auto enc = encoder::encode(s.model, s.example);
  for (auto _ : st) {
    const auto grid = heads::edit_grid(s.model, enc.hidden, s.example);
    benchmark::DoNotOptimize(grid.probs->value[0]);
  }
}
BENCHMARK(BM_EditGridForward);

void BM_FullRewrite(benchmark::State& st) {
  auto& s = state();
  for (auto _ : st) {
    const auto out = rewriter::rewrite(s.model, s.model.cfg, s.data[0]);
    benchmark::DoNotOptimize(out.tokens.size());
  }
}
BENCHMARK(BM_FullRewrite);

void BM_TrainStep(benchmark::State& st) {
  auto& s = state();
  auto prepared = objective::prepare_corpus(
      std::vector<corpus::Dialogue>(s.data.begin(), s.data.begin() + 16), s.model.vocab);
  std::vector<const objective::PreparedExample*> batch;
  for (const auto& p : prepared) batch.push_back(&p);
  for (auto _ : st) {
    s.model.params.zero_grads();
    nn::Graph graph;
    nn::GraphScope scope(graph);
    auto result = objective::batch_losses(s.model, batch, true);
    graph.backward(result.final_loss);
    benchmark::DoNotOptimize(result.numbers.final_loss);
  }
}
BENCHMARK(BM_TrainStep);

void BM_GoldGridAlignment(benchmark::State& st) {
  auto& s = state();
  std::size_t i = 0;
  for (auto _ : st) {
    const auto [grid, status] = supervision::build_gold_edit_grid(s.data[i % s.data.size()]);
    benchmark::DoNotOptimize(status);
    ++i;
  }
}
BENCHMARK(BM_GoldGridAlignment);

void BM_CorpusBleu(benchmark::State& st) {
  auto& s = state();
  std::vector<corpus::TokenList> preds, refs;
  for (const auto& d : s.data) {
    preds.push_back(d.incomplete.tokens);
    refs.push_back(d.rewrite->tokens);
  }
  for (auto _ : st)
    benchmark::DoNotOptimize(metrics::corpus_bleu(preds, refs, 2, true));
}
BENCHMARK(BM_CorpusBleu);

}  // namespace

BENCHMARK_MAIN();
