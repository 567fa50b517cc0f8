#include <benchmark/benchmark.h>

#include <random>

#include "docent/corpus.hpp"

using namespace docent;

namespace {

std::string prose(std::size_t words, std::uint64_t seed) {
    static const char* vocab[] = {"the", "dome", "limestone", "quarry", "raft", "coast", "chamber", "king"};
    std::mt19937_64 rng(seed);
    std::string s;
    for (std::size_t i = 0; i < words; ++i) {
        s += vocab[rng() % 8];
        s += (i % 17 == 16) ? ". " : (i % 211 == 210) ? "\n\n" : " ";
    }
    return s;
}

void BM_SplitRecursive(benchmark::State& state) {
    const auto text = prose(static_cast<std::size_t>(state.range(0)), 3);
    const SplitOptions opts{1000, 200, {"\n\n", "\n", ". ", " ", ""}};
    for (auto _ : state) benchmark::DoNotOptimize(split_recursive(text, opts));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_SplitRecursive)->Arg(2'000)->Arg(50'000)->Unit(benchmark::kMillisecond);

void BM_CleanText(benchmark::State& state) {
    const auto text = prose(50'000, 4);
    for (auto _ : state) benchmark::DoNotOptimize(clean_text(text));
    state.SetBytesProcessed(state.iterations() * static_cast<int64_t>(text.size()));
}
BENCHMARK(BM_CleanText)->Unit(benchmark::kMillisecond);

}  // namespace
