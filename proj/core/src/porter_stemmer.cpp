#include "docent/porter_stemmer.hpp"

#include <array>
#include <utility>

namespace docent {

namespace {

class Stemmer {
public:
    explicit Stemmer(std::string_view w) : b_(w) {}

    std::string run() {
        if (b_.size() <= 2) return b_;
        step1a();
        step1b();
        step1c();
        step2();
        step3();
        step4();
        step5();
        return b_;
    }

private:
    bool is_consonant(size_t i) const {
        switch (b_[i]) {
            case 'a': case 'e': case 'i': case 'o': case 'u': return false;
            case 'y': return i == 0 || !is_consonant(i - 1);
            default: return true;
        }
    }

    // m() of the first `len` letters: the number of VC sequences.
    int measure(size_t len) const {
        int m = 0;
        size_t i = 0;
        while (i < len && is_consonant(i)) ++i;
        while (i < len) {
            while (i < len && !is_consonant(i)) ++i;
            if (i >= len) break;
            while (i < len && is_consonant(i)) ++i;
            ++m;
        }
        return m;
    }

    bool has_vowel(size_t len) const {
        for (size_t i = 0; i < len; ++i) {
            if (!is_consonant(i)) return true;
        }
        return false;
    }

    bool double_consonant(size_t len) const {
        return len >= 2 && b_[len - 1] == b_[len - 2] && is_consonant(len - 1);
    }

    // *o: stem ends consonant-vowel-consonant, final consonant not w, x or y.
    bool cvc(size_t len) const {
        if (len < 3) return false;
        if (!is_consonant(len - 1) || is_consonant(len - 2) || !is_consonant(len - 3)) return false;
        const char c = b_[len - 1];
        return c != 'w' && c != 'x' && c != 'y';
    }

    bool ends_with(std::string_view s) const {
        return b_.size() >= s.size() && std::string_view(b_).substr(b_.size() - s.size()) == s;
    }

    size_t stem_len(std::string_view suffix) const { return b_.size() - suffix.size(); }

    void replace_suffix(std::string_view suffix, std::string_view with) {
        b_.resize(b_.size() - suffix.size());
        b_.append(with);
    }

    using Rule = std::pair<std::string_view, std::string_view>;

    // Finds the longest matching suffix; applies it if the stem measure
    // exceeds `min_measure`. Returns whether any suffix matched.
    template <size_t N>
    bool apply_longest(const std::array<Rule, N>& rules, int min_measure) {
        const Rule* best = nullptr;
        for (const auto& r : rules) {
            if (ends_with(r.first) && (!best || r.first.size() > best->first.size())) best = &r;
        }
        if (!best) return false;
        if (measure(stem_len(best->first)) > min_measure) replace_suffix(best->first, best->second);
        return true;
    }

    void step1a() {
        if (ends_with("sses")) {
            replace_suffix("sses", "ss");
        } else if (ends_with("ies")) {
            replace_suffix("ies", "i");
        } else if (ends_with("ss")) {
            // unchanged
        } else if (ends_with("s")) {
            replace_suffix("s", "");
        }
    }

    void step1b() {
        bool trimmed = false;
        if (ends_with("eed")) {
            if (measure(stem_len("eed")) > 0) replace_suffix("eed", "ee");
        } else if (ends_with("ed") && has_vowel(stem_len("ed"))) {
            replace_suffix("ed", "");
            trimmed = true;
        } else if (ends_with("ing") && has_vowel(stem_len("ing"))) {
            replace_suffix("ing", "");
            trimmed = true;
        }
        if (!trimmed) return;

        if (ends_with("at")) {
            replace_suffix("at", "ate");
        } else if (ends_with("bl")) {
            replace_suffix("bl", "ble");
        } else if (ends_with("iz")) {
            replace_suffix("iz", "ize");
        } else if (double_consonant(b_.size())) {
            const char c = b_.back();
            if (c != 'l' && c != 's' && c != 'z') b_.pop_back();
        } else if (measure(b_.size()) == 1 && cvc(b_.size())) {
            b_.push_back('e');
        }
    }

    void step1c() {
        if (ends_with("y") && has_vowel(stem_len("y"))) b_.back() = 'i';
    }

    void step2() {
        static constexpr std::array<Rule, 20> rules = {{
            {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},   {"izer", "ize"},
            {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},   {"eli", "e"},       {"ousli", "ous"},
            {"ization", "ize"}, {"ation", "ate"},   {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"},
            {"fulness", "ful"}, {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
        }};
        apply_longest(rules, 0);
    }

    void step3() {
        static constexpr std::array<Rule, 7> rules = {{
            {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"}, {"ical", "ic"}, {"ful", ""}, {"ness", ""},
        }};
        apply_longest(rules, 0);
    }

    void step4() {
        static constexpr std::array<std::string_view, 19> suffixes = {
            "al",  "ance", "ence", "er", "ic",  "able", "ible", "ant", "ement", "ment",
            "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
        std::string_view best;
        for (auto s : suffixes) {
            if (ends_with(s) && s.size() > best.size()) best = s;
        }
        if (best.empty()) return;
        const size_t stem = stem_len(best);
        if (measure(stem) <= 1) return;
        if (best == "ion" && !(stem > 0 && (b_[stem - 1] == 's' || b_[stem - 1] == 't'))) return;
        b_.resize(stem);
    }

    void step5() {
        if (ends_with("e")) {
            const size_t stem = stem_len("e");
            const int m = measure(stem);
            if (m > 1 || (m == 1 && !cvc(stem))) b_.pop_back();
        }
        if (ends_with("l") && double_consonant(b_.size()) && measure(b_.size()) > 1) b_.pop_back();
    }

    std::string b_;
};

}  // namespace

std::string porter_stem(std::string_view word) {
    for (char c : word) {
        if (c < 'a' || c > 'z') return std::string(word);
    }
    return Stemmer(word).run();
}

}  // namespace docent
