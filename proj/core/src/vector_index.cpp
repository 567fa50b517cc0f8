#include "docent/vector_index.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "docent/error.hpp"

namespace docent {

namespace {

constexpr char kMagic[8] = {'D', 'O', 'C', 'E', 'N', 'T', 'I', 'X'};

double dot(std::span<const float> a, std::span<const float> b) {
    double acc = 0.0;
    for (size_t i = 0; i < a.size(); ++i) acc += static_cast<double>(a[i]) * static_cast<double>(b[i]);
    return acc;
}

template <typename T>
std::vector<float> normalize_impl(std::span<const T> v) {
    if (v.empty()) throw IndexError("cannot normalize an empty vector");
    double sq = 0.0;
    for (T x : v) {
        if (!std::isfinite(static_cast<double>(x))) throw IndexError("vector has a non-finite component");
        sq += static_cast<double>(x) * static_cast<double>(x);
    }
    const double norm = std::sqrt(sq);
    if (norm == 0.0 || !std::isfinite(norm)) throw IndexError("zero vector cannot be unit-normalized");
    std::vector<float> out(v.size());
    for (size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(static_cast<double>(v[i]) / norm);
    return out;
}

void check_vector(std::span<const float> v, size_t dim, const std::string& what) {
    if (v.size() != dim) {
        throw IndexError(what + ": dimension mismatch (expected " + std::to_string(dim) + ", got " +
                         std::to_string(v.size()) + ")");
    }
    double sq = 0.0;
    for (float x : v) {
        if (!std::isfinite(x)) throw IndexError(what + ": non-finite component");
        sq += static_cast<double>(x) * static_cast<double>(x);
    }
    if (sq == 0.0) throw IndexError(what + ": zero vector cannot be unit-normalized");
    if (std::abs(std::sqrt(sq) - 1.0) > kUnitNormTolerance) throw IndexError(what + ": vector is not unit-normalized");
}

template <typename T>
void write_le(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

class Reader {
public:
    explicit Reader(std::string data) : data_(std::move(data)) {}

    template <typename T>
    T read_le(const char* what) {
        need(sizeof(T), what);
        unsigned char bytes[sizeof(T)];
        std::memcpy(bytes, data_.data() + pos_, sizeof(T));
        if constexpr (std::endian::native == std::endian::big) std::reverse(std::begin(bytes), std::end(bytes));
        pos_ += sizeof(T);
        T value;
        std::memcpy(&value, bytes, sizeof(T));
        return value;
    }

    std::string_view read_bytes(size_t n, const char* what) {
        need(n, what);
        std::string_view out(data_.data() + pos_, n);
        pos_ += n;
        return out;
    }

    size_t remaining() const { return data_.size() - pos_; }

private:
    void need(size_t n, const char* what) const {
        if (data_.size() - pos_ < n) throw CorruptIndexError(std::string("index file truncated while reading ") + what);
    }

    std::string data_;
    size_t pos_ = 0;
};

}  // namespace

nlohmann::json to_json(const ChunkPayload& p) {
    return nlohmann::json{{"doc_id", p.doc_id},
                          {"chunk_index", p.chunk_index},
                          {"char_span", {p.span.start, p.span.end}},
                          {"text", p.text},
                          {"metadata", to_json(p.metadata)}};
}

ChunkPayload payload_from_json(const nlohmann::json& j) {
    ChunkPayload p;
    p.doc_id = j.at("doc_id").get<std::string>();
    p.chunk_index = j.at("chunk_index").get<std::size_t>();
    const auto& span = j.at("char_span");
    p.span = {span.at(0).get<std::size_t>(), span.at(1).get<std::size_t>()};
    p.text = j.at("text").get<std::string>();
    p.metadata = parse_metadata(j.at("metadata")).first;
    return p;
}

nlohmann::json to_json(const RetrievalHit& h) {
    return nlohmann::json{{"rank", h.rank},
                          {"chunk_id", h.chunk_id},
                          {"doc_id", h.payload.doc_id},
                          {"chunk_index", h.payload.chunk_index},
                          {"char_span", {h.payload.span.start, h.payload.span.end}},
                          {"base_score", h.base_score},
                          {"adjusted_score", h.adjusted_score},
                          {"relevance", std::string(to_string(h.payload.metadata.relevance))},
                          {"metadata", to_json(h.payload.metadata)},
                          {"text", h.payload.text}};
}

std::vector<float> normalized(std::span<const double> v) { return normalize_impl(v); }
std::vector<float> normalized(std::span<const float> v) { return normalize_impl(v); }

EmbeddingRecord make_record(const Chunk& chunk, std::span<const double> embedding) {
    EmbeddingRecord r;
    r.chunk_id = chunk.chunk_id;
    r.vector = normalized(embedding);
    r.payload = ChunkPayload{chunk.doc_id, chunk.index, chunk.span, chunk.text, chunk.metadata};
    return r;
}

std::size_t VectorIndex::upsert(std::span<const EmbeddingRecord> records) {
    if (records.empty()) return 0;
    const size_t dim = dim_ != 0 ? dim_ : records.front().vector.size();
    if (dim == 0) throw IndexError("record '" + records.front().chunk_id + "': empty vector");
    for (const auto& r : records) {
        if (r.chunk_id.empty()) throw IndexError("record with empty chunk_id");
        check_vector(r.vector, dim, "record '" + r.chunk_id + "'");
    }
    dim_ = dim;
    for (const auto& r : records) {
        auto it = slot_by_id_.find(r.chunk_id);
        if (it != slot_by_id_.end()) {
            records_[it->second] = r;
        } else {
            slot_by_id_.emplace(r.chunk_id, records_.size());
            records_.push_back(r);
        }
    }
    return records.size();
}

std::vector<RetrievalHit> VectorIndex::search(std::span<const float> query, std::size_t k) const {
    if (k == 0) throw IndexError("k must be at least 1");
    if (records_.empty()) return {};
    check_vector(query, dim_, "query");

    std::vector<double> scores(records_.size());
    for (size_t i = 0; i < records_.size(); ++i) scores[i] = dot(query, records_[i].vector);

    std::vector<size_t> order(records_.size());
    std::iota(order.begin(), order.end(), size_t{0});
    const size_t take = std::min(k, records_.size());
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(take), order.end(),
                      [&](size_t a, size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });

    std::vector<RetrievalHit> hits;
    hits.reserve(take);
    for (size_t i = 0; i < take; ++i) {
        const auto& rec = records_[order[i]];
        RetrievalHit h;
        h.chunk_id = rec.chunk_id;
        h.payload = rec.payload;
        h.base_score = scores[order[i]];
        h.adjusted_score = h.base_score;
        h.rank = i + 1;
        hits.push_back(std::move(h));
    }
    return hits;
}

std::size_t VectorIndex::relabel_document(const std::string& doc_id, RelevanceClass relevance) {
    size_t n = 0;
    for (auto& r : records_) {
        if (r.payload.doc_id == doc_id) {
            r.payload.metadata.relevance = relevance;
            ++n;
        }
    }
    return n;
}

std::size_t VectorIndex::erase_document(const std::string& doc_id) {
    const auto before = records_.size();
    std::erase_if(records_, [&](const EmbeddingRecord& r) { return r.payload.doc_id == doc_id; });
    const size_t removed = before - records_.size();
    if (removed > 0) rebuild_slots();
    if (records_.empty()) dim_ = 0;
    return removed;
}

void VectorIndex::clear() {
    records_.clear();
    slot_by_id_.clear();
    dim_ = 0;
}

void VectorIndex::rebuild_slots() {
    slot_by_id_.clear();
    for (size_t i = 0; i < records_.size(); ++i) slot_by_id_.emplace(records_[i].chunk_id, i);
}

void VectorIndex::save(const std::filesystem::path& path) const {
    std::ostringstream out(std::ios::binary);
    out.write(kMagic, sizeof(kMagic));
    write_le<std::uint32_t>(out, kFormatVersion);
    write_le<std::uint32_t>(out, static_cast<std::uint32_t>(dim_));
    write_le<std::uint64_t>(out, records_.size());
    for (const auto& r : records_) {
        for (float x : r.vector) write_le<float>(out, x);
    }
    for (const auto& r : records_) {
        const std::string json = nlohmann::json{{"chunk_id", r.chunk_id}, {"payload", to_json(r.payload)}}.dump();
        write_le<std::uint32_t>(out, static_cast<std::uint32_t>(json.size()));
        out.write(json.data(), static_cast<std::streamsize>(json.size()));
    }

    // Write to a sibling file first so a crash never leaves a half-written index.
    const auto tmp = std::filesystem::path(path.string() + ".tmp");
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw IndexError("cannot write index file " + tmp.string());
        const std::string bytes = out.str();
        f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!f) throw IndexError("failed writing index file " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
}

VectorIndex VectorIndex::load(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw IndexError("cannot open index file " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    std::string data = ss.str();

    VectorIndex index;
    if (data.empty()) return index;

    Reader in(std::move(data));
    const auto magic = in.read_bytes(sizeof(kMagic), "magic");
    if (std::memcmp(magic.data(), kMagic, sizeof(kMagic)) != 0) throw CorruptIndexError("not a docent index file");
    const auto version = in.read_le<std::uint32_t>("version");
    if (version != kFormatVersion) {
        throw CorruptIndexError("unsupported index format version " + std::to_string(version) + " (expected " +
                                std::to_string(kFormatVersion) + ")");
    }
    const auto dim = in.read_le<std::uint32_t>("dimension");
    const auto count = in.read_le<std::uint64_t>("record count");
    if (count > 0 && dim == 0) throw CorruptIndexError("records present but dimension is zero");
    if (count > 0 && in.remaining() / sizeof(float) / dim < count) {
        throw CorruptIndexError("index file truncated while reading vectors");
    }

    std::vector<EmbeddingRecord> records(count);
    for (auto& r : records) {
        r.vector.resize(dim);
        for (auto& x : r.vector) x = in.read_le<float>("vectors");
    }
    for (auto& r : records) {
        const auto len = in.read_le<std::uint32_t>("payload length");
        const auto bytes = in.read_bytes(len, "payload");
        try {
            const auto j = nlohmann::json::parse(bytes);
            r.chunk_id = j.at("chunk_id").get<std::string>();
            r.payload = payload_from_json(j.at("payload"));
        } catch (const nlohmann::json::exception& e) {
            throw CorruptIndexError(std::string("corrupt payload block: ") + e.what());
        } catch (const IngestError& e) {
            throw CorruptIndexError(std::string("corrupt payload metadata: ") + e.what());
        }
    }
    if (in.remaining() != 0) throw CorruptIndexError("trailing bytes after payload block");

    try {
        index.upsert(records);
    } catch (const IndexError& e) {
        throw CorruptIndexError(std::string("invalid record in index file: ") + e.what());
    }
    if (index.size() != count) throw CorruptIndexError("duplicate chunk ids in index file");
    return index;
}

std::vector<SourceDocument> documents_from_index(const VectorIndex& index) {
    std::map<std::string, std::vector<TextChunk>> pieces;
    std::map<std::string, DocumentMetadata> metadata;
    for (const auto& r : index.records()) {
        pieces[r.payload.doc_id].push_back({r.payload.chunk_index, r.payload.span, r.payload.text});
        metadata[r.payload.doc_id] = r.payload.metadata;
    }
    std::vector<SourceDocument> docs;
    for (auto& [doc_id, chunks] : pieces) {
        std::sort(chunks.begin(), chunks.end(), [](const auto& a, const auto& b) { return a.index < b.index; });
        docs.push_back({doc_id, reconstruct_text(chunks), metadata[doc_id]});
    }
    return docs;
}

}  // namespace docent
