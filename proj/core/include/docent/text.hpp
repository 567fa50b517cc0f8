#pragma once

#include <string>
#include <string_view>
#include <vector>

// Small text helpers shared by the corpus, gateway and metric code.
namespace docent::text {

/// Decodes UTF-8 into code points. Throws docent::IngestError on malformed input.
std::u32string decode_utf8(std::string_view bytes);

std::string encode_utf8(std::u32string_view code_points);

bool is_valid_utf8(std::string_view bytes);

std::string_view trim(std::string_view s);

/// ASCII lowercase; bytes outside ASCII are kept as-is.
std::string to_lower_ascii(std::string_view s);

/// Splits on ASCII whitespace and ASCII punctuation; separators are dropped.
/// Bytes >= 0x80 are treated as word characters, so UTF-8 words stay whole.
std::vector<std::string> tokenize_words(std::string_view s);

}  // namespace docent::text
