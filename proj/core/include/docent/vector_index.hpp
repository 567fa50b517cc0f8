#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "docent/corpus.hpp"

namespace docent {

inline constexpr double kUnitNormTolerance = 1e-6;

/// Payload stored next to each vector. Carries enough of the chunk to render
/// context and to rebuild the source document without the original files.
struct ChunkPayload {
    std::string doc_id;
    std::size_t chunk_index = 0;
    CharSpan span;
    std::string text;
    DocumentMetadata metadata;

    bool operator==(const ChunkPayload&) const = default;
};

nlohmann::json to_json(const ChunkPayload& p);
ChunkPayload payload_from_json(const nlohmann::json& j);

struct EmbeddingRecord {
    std::string chunk_id;
    std::vector<float> vector;
    ChunkPayload payload;
};

/// Returns `v / ||v||`. Throws IndexError for empty, zero or non-finite input.
std::vector<float> normalized(std::span<const double> v);
std::vector<float> normalized(std::span<const float> v);

/// Builds a record from a chunk and its raw (unnormalized) embedding.
EmbeddingRecord make_record(const Chunk& chunk, std::span<const double> embedding);

struct RetrievalHit {
    std::string chunk_id;
    ChunkPayload payload;
    double base_score = 0.0;
    double adjusted_score = 0.0;
    std::size_t rank = 0;  // 1-based
};

nlohmann::json to_json(const RetrievalHit& h);

/// Storage seam so an external vector database could stand in for the
/// in-process index.
class VectorStore {
public:
    virtual ~VectorStore() = default;

    virtual std::size_t upsert(std::span<const EmbeddingRecord> records) = 0;
    virtual std::vector<RetrievalHit> search(std::span<const float> query, std::size_t k) const = 0;
    virtual std::size_t size() const = 0;
    virtual std::size_t dimension() const = 0;
};

/// Exact flat cosine index. Records keep their insertion slot, which is the
/// tie-breaker for equal scores. Not internally synchronized: callers that
/// share an instance across threads guard it with a reader-writer lock.
class VectorIndex final : public VectorStore {
public:
    static constexpr std::uint32_t kFormatVersion = 1;

    VectorIndex() = default;

    /// Inserts records, replacing any existing record with the same chunk id.
    /// Validation covers the whole batch before anything is written.
    std::size_t upsert(std::span<const EmbeddingRecord> records) override;

    /// Top-k by dot product, descending, ties by insertion order. k is
    /// clamped to the index size; an empty index yields no hits.
    std::vector<RetrievalHit> search(std::span<const float> query, std::size_t k) const override;

    std::size_t size() const override { return records_.size(); }
    std::size_t dimension() const override { return dim_; }
    bool empty() const { return records_.empty(); }

    const std::vector<EmbeddingRecord>& records() const { return records_; }

    /// Rewrites the relevance class of every record of a document in place.
    /// Returns the number of records touched.
    std::size_t relabel_document(const std::string& doc_id, RelevanceClass relevance);

    std::size_t erase_document(const std::string& doc_id);
    void clear();

    /// Binary layout (little-endian):
    ///   "DOCENTIX" | u32 version | u32 dim | u64 count
    ///   count * dim f32 vectors
    ///   count * (u32 byte length, UTF-8 JSON {chunk_id, payload})
    void save(const std::filesystem::path& path) const;
    static VectorIndex load(const std::filesystem::path& path);

private:
    void rebuild_slots();

    std::size_t dim_ = 0;
    std::vector<EmbeddingRecord> records_;
    std::unordered_map<std::string, std::size_t> slot_by_id_;
};

/// Rebuilds the source documents from the chunk payloads, ordered by doc id.
std::vector<SourceDocument> documents_from_index(const VectorIndex& index);

}  // namespace docent
