#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "docent/model_gateway.hpp"

namespace docent::metrics {

/// Word alignment between hypothesis and reference; -1 marks an unmatched word.
struct Alignment {
    std::vector<int> hyp_to_ref;
    std::size_t matches = 0;
    std::size_t chunks = 0;
};

struct MeteorScore {
    std::size_t hyp_len = 0;
    std::size_t ref_len = 0;
    std::size_t matches = 0;
    std::size_t chunks = 0;
    double precision = 0.0;
    double recall = 0.0;
    double f_mean = 0.0;
    double penalty = 0.0;
    double score = 0.0;
};

/// Lowercased word tokens as used by METEOR.
std::vector<std::string> meteor_tokens(std::string_view text);

/// Exact stage, then Porter-stem stage over the words left unmatched. Each
/// stage maximizes matches and, among maximal alignments, minimizes chunks
/// of the combined alignment. The minimization is exhaustive within a search
/// budget and falls back to greedy longest-run tiling beyond it.
Alignment align(std::span<const std::string> hyp, std::span<const std::string> ref);

/// Number of chunks of an alignment: maximal runs adjacent in both sequences.
std::size_t count_chunks(std::span<const int> hyp_to_ref);

MeteorScore meteor_details(std::string_view hypothesis, std::string_view reference);

/// F_mean = 10PR / (R + 9P); penalty = 0.5 (chunks / m)^3; 0 when m = 0.
double meteor(std::string_view hypothesis, std::string_view reference);

struct PrfScore {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

/// Greedy (non-exclusive) max-cosine matching of token vectors, unweighted,
/// no baseline rescaling. Vectors need not be normalized; zero vectors match
/// nothing. Results are clamped to [0, 1].
PrfScore greedy_match_f1(std::span<const Embedding> hyp_vectors, std::span<const Embedding> ref_vectors);

/// Token vectors come from the gateway's per-token embeddings.
PrfScore semantic_f1(std::string_view hypothesis, std::string_view reference, ModelGateway& gateway,
                     const ModelRef& embedder);

}  // namespace docent::metrics
