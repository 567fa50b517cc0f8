#pragma once

#include <string>
#include <string_view>

namespace docent {

/// The original Porter (1980) suffix-stripping stemmer. Expects a lowercase
/// word; words of one or two letters and words containing anything other than
/// ASCII letters are returned unchanged.
std::string porter_stem(std::string_view word);

}  // namespace docent
