#include <benchmark/benchmark.h>

#include <random>

#include "docent/metrics.hpp"
#include "docent/stub_gateway.hpp"

using namespace docent;

namespace {

std::string sentence(std::size_t words, std::uint64_t seed) {
    static const char* vocab[] = {"the",   "dome",    "limestone", "quarries", "rafts", "coast",
                                  "was",   "carried", "single",    "block",    "of",    "a"};
    std::mt19937_64 rng(seed);
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        if (i) s += ' ';
        s += vocab[rng() % 12];
    }
    return s;
}

void BM_Meteor(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto hyp = sentence(n, 1);
    const auto ref = sentence(n, 2);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::meteor(hyp, ref));
}
BENCHMARK(BM_Meteor)->Arg(20)->Arg(80)->Arg(300)->Unit(benchmark::kMicrosecond);

void BM_SemanticF1(benchmark::State& state) {
    StubGateway stub{StubGateway::Options{256, 7}};
    const ModelRef embedder{"stub://embed", "stub-embed", ModelKind::embedding};
    const auto hyp = sentence(60, 3);
    const auto ref = sentence(60, 4);
    for (auto _ : state) benchmark::DoNotOptimize(metrics::semantic_f1(hyp, ref, stub, embedder));
}
BENCHMARK(BM_SemanticF1)->Unit(benchmark::kMicrosecond);

}  // namespace
