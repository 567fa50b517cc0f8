#include <benchmark/benchmark.h>

#include <random>

#include "docent/vector_index.hpp"

using namespace docent;

namespace {

std::vector<float> random_unit(std::mt19937_64& rng, std::size_t dim) {
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(dim);
    for (auto& x : v) x = g(rng);
    return normalized(std::span<const double>(v));
}

VectorIndex make_index(std::size_t n, std::size_t dim, std::mt19937_64& rng) {
    std::vector<EmbeddingRecord> recs;
    recs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        EmbeddingRecord r;
        r.chunk_id = "c" + std::to_string(i);
        r.vector = random_unit(rng, dim);
        r.payload.doc_id = "d" + std::to_string(i / 20);
        r.payload.metadata = {"A", "T", "t", RelevanceClass::main};
        recs.push_back(std::move(r));
    }
    VectorIndex index;
    index.upsert(recs);
    return index;
}

void BM_Search(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const std::size_t dim = 1024;
    const auto index = make_index(n, dim, rng);
    const auto query = random_unit(rng, dim);
    for (auto _ : state) benchmark::DoNotOptimize(index.search(query, 4));
    state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}
BENCHMARK(BM_Search)->Arg(1'000)->Arg(10'000)->Unit(benchmark::kMicrosecond);

void BM_Upsert(benchmark::State& state) {
    std::mt19937_64 rng(2);
    for (auto _ : state) benchmark::DoNotOptimize(make_index(1000, 256, rng).size());
}
BENCHMARK(BM_Upsert)->Unit(benchmark::kMillisecond);

}  // namespace
