#include "docent/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "docent/error.hpp"
#include "docent/text.hpp"

namespace docent {

namespace fs = std::filesystem;

std::optional<RelevanceClass> parse_relevance(std::string_view s) {
    const std::string lower = text::to_lower_ascii(s);
    if (lower == "main") return RelevanceClass::main;
    if (lower == "relevant") return RelevanceClass::relevant;
    if (lower == "adjacent") return RelevanceClass::adjacent;
    return std::nullopt;
}

std::string_view to_string(RelevanceClass r) {
    switch (r) {
        case RelevanceClass::main: return "main";
        case RelevanceClass::relevant: return "relevant";
        case RelevanceClass::adjacent: return "adjacent";
    }
    return "main";
}

namespace {

std::string required_string(const nlohmann::json& j, const char* field, bool allow_empty) {
    if (!j.contains(field)) throw IngestError(std::string("metadata field '") + field + "' is missing");
    const auto& v = j.at(field);
    if (!v.is_string()) throw IngestError(std::string("metadata field '") + field + "' must be a string");
    auto s = v.get<std::string>();
    if (!allow_empty && text::trim(s).empty()) {
        throw IngestError(std::string("metadata field '") + field + "' must be non-empty");
    }
    return s;
}

}  // namespace

std::pair<DocumentMetadata, std::optional<std::string>> parse_metadata(const nlohmann::json& j) {
    if (!j.is_object()) throw IngestError("metadata must be a JSON object");
    DocumentMetadata m;
    m.author = required_string(j, "author", false);
    m.title = required_string(j, "title", false);
    m.publication_type = required_string(j, "publication_type", true);
    const auto rel = required_string(j, "relevance", false);
    const auto parsed = parse_relevance(rel);
    if (!parsed) {
        throw IngestError("metadata field 'relevance' has invalid value '" + rel +
                          "' (allowed: main, relevant, adjacent)");
    }
    m.relevance = *parsed;

    std::optional<std::string> doc_id;
    if (j.contains("doc_id") && !j.at("doc_id").is_null()) {
        doc_id = required_string(j, "doc_id", false);
    }
    return {std::move(m), std::move(doc_id)};
}

nlohmann::json to_json(const DocumentMetadata& m) {
    return nlohmann::json{{"author", m.author},
                          {"title", m.title},
                          {"publication_type", m.publication_type},
                          {"relevance", std::string(to_string(m.relevance))}};
}

std::string clean_text(std::string_view raw) {
    std::string normalized;
    normalized.reserve(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            normalized.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            normalized.push_back(raw[i]);
        }
    }

    // Blank out whitespace-only lines, then collapse newline runs.
    std::string out;
    out.reserve(normalized.size());
    size_t newline_run = 0;
    size_t line_start = 0;
    while (line_start <= normalized.size()) {
        size_t line_end = normalized.find('\n', line_start);
        const bool last = line_end == std::string::npos;
        if (last) line_end = normalized.size();
        std::string_view line(normalized.data() + line_start, line_end - line_start);
        if (!text::trim(line).empty()) {
            out.append(line);
            newline_run = 0;
        }
        if (last) break;
        if (newline_run < 2) out.push_back('\n');
        ++newline_run;
        line_start = line_end + 1;
    }
    return std::string(text::trim(out));
}

namespace {

using Span = CharSpan;

// Splits [span) at every occurrence of `sep`, keeping the separator on the
// fragment it terminates so that the fragments tile the span.
std::vector<Span> split_keep(const std::u32string& text, Span span, const std::u32string& sep) {
    std::vector<Span> parts;
    size_t start = span.start;
    size_t pos = span.start;
    while (pos < span.end) {
        const size_t hit = text.find(sep, pos);
        if (hit == std::u32string::npos || hit + sep.size() > span.end) break;
        const size_t cut = hit + sep.size();
        parts.push_back({start, cut});
        start = cut;
        pos = cut;
    }
    if (start < span.end) parts.push_back({start, span.end});
    return parts;
}

void split_into_atoms(const std::u32string& text, Span span, size_t level, const std::vector<std::u32string>& seps,
                      size_t chunk_size, std::vector<Span>& atoms) {
    if (span.size() <= chunk_size) {
        atoms.push_back(span);
        return;
    }
    const auto& sep = seps[level];
    if (sep.empty()) {
        for (size_t i = span.start; i < span.end; ++i) atoms.push_back({i, i + 1});
        return;
    }
    const auto parts = split_keep(text, span, sep);
    if (parts.size() == 1) {
        split_into_atoms(text, span, level + 1, seps, chunk_size, atoms);
        return;
    }
    for (const auto& part : parts) {
        if (part.size() <= chunk_size) {
            atoms.push_back(part);
        } else {
            split_into_atoms(text, part, level + 1, seps, chunk_size, atoms);
        }
    }
}

void validate(const SplitOptions& opts) {
    if (opts.chunk_size == 0) throw ConfigError("chunk_size must be positive");
    if (opts.chunk_overlap >= opts.chunk_size) {
        throw ConfigError("chunk_overlap (" + std::to_string(opts.chunk_overlap) + ") must be smaller than chunk_size (" +
                          std::to_string(opts.chunk_size) + ")");
    }
    if (opts.separators.empty() || !opts.separators.back().empty()) {
        throw ConfigError("separators must end with the empty string");
    }
}

}  // namespace

std::vector<TextChunk> split_recursive(std::string_view text_bytes, const SplitOptions& opts) {
    validate(opts);
    const std::u32string text = text::decode_utf8(text_bytes);
    if (text.empty()) return {};

    std::vector<std::u32string> seps;
    seps.reserve(opts.separators.size());
    for (const auto& s : opts.separators) seps.push_back(text::decode_utf8(s));

    std::vector<Span> atoms;
    split_into_atoms(text, {0, text.size()}, 0, seps, opts.chunk_size, atoms);

    // Greedy merge: each window takes as many whole atoms as fit, the next
    // window restarts at the longest atom suffix that fits the overlap budget
    // and still leaves room for the next atom.
    std::vector<TextChunk> chunks;
    size_t first = 0;
    while (first < atoms.size()) {
        size_t last = first;
        const size_t start = atoms[first].start;
        while (last + 1 < atoms.size() && atoms[last + 1].end - start <= opts.chunk_size) ++last;
        const size_t end = atoms[last].end;

        TextChunk chunk;
        chunk.index = chunks.size();
        chunk.span = {start, end};
        chunk.text = text::encode_utf8(std::u32string_view(text).substr(start, end - start));
        chunks.push_back(std::move(chunk));

        if (last + 1 == atoms.size()) break;
        const size_t next_len = atoms[last + 1].size();
        size_t next_first = last + 1;
        while (next_first > first + 1) {
            const size_t carried = end - atoms[next_first - 1].start;
            if (carried > opts.chunk_overlap || carried + next_len > opts.chunk_size) break;
            --next_first;
        }
        first = next_first;
    }
    return chunks;
}

std::string reconstruct_text(const std::vector<TextChunk>& chunks) {
    std::u32string out;
    size_t covered = 0;
    for (const auto& c : chunks) {
        const std::u32string piece = text::decode_utf8(c.text);
        const size_t skip = c.span.start < covered ? covered - c.span.start : 0;
        if (skip < piece.size()) out.append(piece, skip, std::u32string::npos);
        covered = std::max(covered, c.span.end);
    }
    return text::encode_utf8(out);
}

std::string make_chunk_id(std::string_view doc_id, std::size_t index) {
    return std::string(doc_id) + "#" + std::to_string(index);
}

std::vector<Chunk> chunk_document(const SourceDocument& doc, const SplitOptions& opts) {
    std::vector<Chunk> chunks;
    for (auto& piece : split_recursive(doc.text, opts)) {
        Chunk c;
        c.chunk_id = make_chunk_id(doc.doc_id, piece.index);
        c.doc_id = doc.doc_id;
        c.index = piece.index;
        c.text = std::move(piece.text);
        c.span = piece.span;
        c.metadata = doc.metadata;
        chunks.push_back(std::move(c));
    }
    return chunks;
}

std::pair<SourceDocument, std::vector<Chunk>> make_document(std::string doc_id, std::string_view raw_text,
                                                            const DocumentMetadata& metadata,
                                                            const SplitOptions& opts) {
    if (text::trim(doc_id).empty()) throw IngestError("doc_id must be non-empty");
    if (text::trim(metadata.author).empty()) throw IngestError("metadata field 'author' must be non-empty");
    if (text::trim(metadata.title).empty()) throw IngestError("metadata field 'title' must be non-empty");
    if (!text::is_valid_utf8(raw_text)) throw IngestError("document '" + doc_id + "' is not valid UTF-8");

    SourceDocument doc{std::move(doc_id), clean_text(raw_text), metadata};
    if (doc.text.empty()) throw IngestError("document '" + doc.doc_id + "' is empty after cleaning");

    auto chunks = chunk_document(doc, opts);
    return {std::move(doc), std::move(chunks)};
}

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestError("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) throw IngestError("cannot read " + path.string());
    return ss.str();
}

}  // namespace

std::pair<SourceDocument, std::vector<Chunk>> ingest_document(const fs::path& path, const DocumentMetadata& sidecar,
                                                              const SplitOptions& opts,
                                                              std::optional<std::string> doc_id) {
    const std::string raw = read_file(path);
    return make_document(doc_id ? *doc_id : path.stem().string(), raw, sidecar, opts);
}

std::vector<IngestedDocument> load_corpus(const fs::path& dir, const SplitOptions& opts) {
    if (!fs::is_directory(dir)) throw IngestError("corpus directory not found: " + dir.string());

    std::vector<fs::path> texts;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".txt") texts.push_back(entry.path());
    }
    std::sort(texts.begin(), texts.end());

    std::vector<IngestedDocument> docs;
    std::set<std::string> seen;
    for (const auto& txt : texts) {
        fs::path meta = txt;
        meta.replace_extension(".meta.json");
        if (!fs::exists(meta)) throw IngestError("missing metadata sidecar for " + txt.filename().string());

        nlohmann::json j;
        try {
            j = nlohmann::json::parse(read_file(meta));
        } catch (const nlohmann::json::parse_error& e) {
            throw IngestError(meta.filename().string() + ": " + e.what());
        }
        std::pair<DocumentMetadata, std::optional<std::string>> parsed;
        try {
            parsed = parse_metadata(j);
        } catch (const IngestError& e) {
            throw IngestError(meta.filename().string() + ": " + e.what());
        }
        auto [doc, chunks] = ingest_document(txt, parsed.first, opts, parsed.second);
        if (!seen.insert(doc.doc_id).second) throw IngestError("duplicate doc_id '" + doc.doc_id + "'");
        docs.push_back({std::move(doc), std::move(chunks)});
    }
    return docs;
}

}  // namespace docent
