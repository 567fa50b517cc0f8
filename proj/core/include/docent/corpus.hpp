#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

namespace docent {

/// Curator judgement of how central a source is to the described object.
enum class RelevanceClass { main, relevant, adjacent };

inline constexpr RelevanceClass kAllRelevanceClasses[] = {
    RelevanceClass::main, RelevanceClass::relevant, RelevanceClass::adjacent};

/// Case-insensitive parse; std::nullopt for anything outside the three classes.
std::optional<RelevanceClass> parse_relevance(std::string_view s);
std::string_view to_string(RelevanceClass r);

struct DocumentMetadata {
    std::string author;
    std::string title;
    std::string publication_type;
    RelevanceClass relevance = RelevanceClass::main;

    bool operator==(const DocumentMetadata&) const = default;
};

/// Parses a metadata sidecar object. Errors name the offending field.
/// The optional "doc_id" key is returned separately.
std::pair<DocumentMetadata, std::optional<std::string>> parse_metadata(const nlohmann::json& j);
nlohmann::json to_json(const DocumentMetadata& m);

/// Half-open range of character (code point) offsets.
struct CharSpan {
    std::size_t start = 0;
    std::size_t end = 0;

    std::size_t size() const { return end - start; }
    bool operator==(const CharSpan&) const = default;
};

struct SourceDocument {
    std::string doc_id;
    std::string text;
    DocumentMetadata metadata;
};

/// One window produced by the splitter, before it is attached to a document.
struct TextChunk {
    std::size_t index = 0;
    CharSpan span;
    std::string text;
};

struct Chunk {
    std::string chunk_id;
    std::string doc_id;
    std::size_t index = 0;
    std::string text;
    CharSpan span;
    DocumentMetadata metadata;
};

struct SplitOptions {
    std::size_t chunk_size = 1000;
    std::size_t chunk_overlap = 200;
    std::vector<std::string> separators = {"\n\n", "\n", ". ", " ", ""};
};

/// Normalizes line endings, blanks whitespace-only lines, collapses 3+
/// newlines into 2 and trims the document.
std::string clean_text(std::string_view raw);

/// Recursive character splitter. Lengths and spans count code points.
/// Separators stay attached to the fragment they end, so spans tile the text
/// and consecutive chunks overlap by at most `chunk_overlap` characters.
/// Throws ConfigError for an invalid size/overlap/separator setup and
/// IngestError for malformed UTF-8.
std::vector<TextChunk> split_recursive(std::string_view text, const SplitOptions& opts);

/// Inverse of split_recursive: drops each chunk's overlap with its predecessor.
std::string reconstruct_text(const std::vector<TextChunk>& chunks);

std::string make_chunk_id(std::string_view doc_id, std::size_t index);

/// Splits an already cleaned document into chunks carrying its metadata.
std::vector<Chunk> chunk_document(const SourceDocument& doc, const SplitOptions& opts);

/// Cleans `raw_text`, splits it and stamps every chunk with the metadata.
std::pair<SourceDocument, std::vector<Chunk>> make_document(std::string doc_id, std::string_view raw_text,
                                                            const DocumentMetadata& metadata,
                                                            const SplitOptions& opts);

/// Reads a UTF-8 plaintext file and splits it. `doc_id` defaults to the file stem.
std::pair<SourceDocument, std::vector<Chunk>> ingest_document(const std::filesystem::path& path,
                                                              const DocumentMetadata& sidecar,
                                                              const SplitOptions& opts,
                                                              std::optional<std::string> doc_id = std::nullopt);

struct IngestedDocument {
    SourceDocument document;
    std::vector<Chunk> chunks;
};

/// Loads `<name>.txt` + `<name>.meta.json` pairs from a directory, sorted by
/// file name. Duplicate doc ids and missing sidecars are errors.
std::vector<IngestedDocument> load_corpus(const std::filesystem::path& dir, const SplitOptions& opts);

}  // namespace docent
