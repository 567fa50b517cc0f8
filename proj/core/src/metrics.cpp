#include "docent/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "docent/porter_stemmer.hpp"
#include "docent/text.hpp"

namespace docent::metrics {

std::vector<std::string> meteor_tokens(std::string_view text) {
    return text::tokenize_words(text::to_lower_ascii(text));
}

std::size_t count_chunks(std::span<const int> hyp_to_ref) {
    std::size_t matches = 0;
    std::size_t links = 0;
    for (size_t h = 0; h < hyp_to_ref.size(); ++h) {
        if (hyp_to_ref[h] < 0) continue;
        ++matches;
        if (h > 0 && hyp_to_ref[h - 1] >= 0 && hyp_to_ref[h] == hyp_to_ref[h - 1] + 1) ++links;
    }
    return matches - links;
}

namespace {

constexpr std::size_t kSearchBudget = 200'000;

// One alignment stage. Words with class -1 are unavailable (already aligned
// by an earlier stage or never matchable). `align` holds earlier-stage
// matches and receives this stage's matches.
class StageSolver {
public:
    StageSolver(std::vector<int> hyp_class, std::vector<int> ref_class, std::vector<int>& align)
        : hyp_class_(std::move(hyp_class)), ref_class_(std::move(ref_class)), align_(align) {}

    void solve() {
        for (size_t h = 0; h < hyp_class_.size(); ++h) {
            if (hyp_class_[h] >= 0) order_.push_back(h);
        }
        if (order_.empty()) return;

        std::map<int, int> hyp_count, ref_count;
        for (size_t h : order_) ++hyp_count[hyp_class_[h]];
        for (int c : ref_class_) {
            if (c >= 0) ++ref_count[c];
        }
        for (const auto& [c, n] : hyp_count) {
            const int need = std::min(n, ref_count[c]);
            if (need > 0) need_[c] = need;
        }
        if (need_.empty()) return;

        greedy_tiling();
        best_links_ = total_links(best_);
        exhaustive();
        align_ = best_;
    }

private:
    static std::size_t total_links(const std::vector<int>& a) {
        std::size_t links = 0;
        for (size_t h = 1; h < a.size(); ++h) {
            if (a[h] >= 0 && a[h - 1] >= 0 && a[h] == a[h - 1] + 1) ++links;
        }
        return links;
    }

    bool usable(size_t h, size_t r, const std::vector<bool>& used_h, const std::vector<bool>& used_r) const {
        return hyp_class_[h] >= 0 && !used_h[h] && !used_r[r] && hyp_class_[h] == ref_class_[r];
    }

    // Repeatedly aligns the longest run of matchable words, earliest first.
    void greedy_tiling() {
        best_ = align_;
        const size_t nh = hyp_class_.size();
        const size_t nr = ref_class_.size();
        std::vector<bool> used_h(nh, false), used_r(nr, false);
        for (;;) {
            size_t best_len = 0, best_h = 0, best_r = 0;
            std::vector<size_t> prev(nr + 1, 0), cur(nr + 1, 0);
            // run[h][r] = length of the matchable run ending at (h, r)
            for (size_t h = 0; h < nh; ++h) {
                for (size_t r = 0; r < nr; ++r) {
                    cur[r + 1] = usable(h, r, used_h, used_r) ? prev[r] + 1 : 0;
                    const size_t len = cur[r + 1];
                    if (len == 0) continue;
                    const size_t start_h = h + 1 - len;
                    const size_t start_r = r + 1 - len;
                    if (len > best_len || (len == best_len && (start_h < best_h || (start_h == best_h && start_r < best_r)))) {
                        best_len = len;
                        best_h = start_h;
                        best_r = start_r;
                    }
                }
                std::swap(prev, cur);
            }
            if (best_len == 0) break;
            for (size_t i = 0; i < best_len; ++i) {
                used_h[best_h + i] = true;
                used_r[best_r + i] = true;
                best_[best_h + i] = static_cast<int>(best_r + i);
            }
        }
    }

    void exhaustive() {
        // pairs_from_[i]: adjacency pairs decided at or after order_[i]
        const size_t n = order_.size();
        std::vector<bool> available(hyp_class_.size(), false);
        for (size_t h : order_) available[h] = true;
        std::vector<size_t> decided_at(n, 0);
        for (size_t i = 0; i < n; ++i) {
            const size_t h = order_[i];
            if (h > 0) ++decided_at[i];  // pair (h-1, h) is settled once h is
            if (h + 1 < hyp_class_.size() && !available[h + 1]) ++decided_at[i];
        }
        pairs_from_.assign(n + 1, 0);
        for (size_t i = n; i-- > 0;) pairs_from_[i] = pairs_from_[i + 1] + decided_at[i];

        remaining_.clear();
        for (size_t h : order_) ++remaining_[hyp_class_[h]];
        used_r_.assign(ref_class_.size(), false);
        current_ = align_;
        nodes_ = 0;
        dfs(0, total_links(align_));
    }

    void dfs(size_t i, std::size_t links) {
        if (++nodes_ > kSearchBudget) return;
        if (links + pairs_from_[i] <= best_links_) return;
        if (i == order_.size()) {
            best_links_ = links;
            best_ = current_;
            return;
        }
        const size_t h = order_[i];
        const int c = hyp_class_[h];
        auto need_it = need_.find(c);
        const int need = need_it == need_.end() ? 0 : need_it->second;
        const int done = matched_[c];
        --remaining_[c];

        auto gain_for = [&](int r) {
            std::size_t g = 0;
            if (h > 0 && current_[h - 1] >= 0 && current_[h - 1] + 1 == r) ++g;
            if (h + 1 < current_.size() && hyp_class_[h + 1] < 0 && current_[h + 1] >= 0 && current_[h + 1] == r + 1) ++g;
            return g;
        };
        auto try_ref = [&](size_t r) {
            used_r_[r] = true;
            current_[h] = static_cast<int>(r);
            ++matched_[c];
            dfs(i + 1, links + gain_for(static_cast<int>(r)));
            --matched_[c];
            current_[h] = -1;
            used_r_[r] = false;
        };

        if (done < need) {
            // try the continuation of the previous word's run first
            int preferred = -1;
            if (h > 0 && current_[h - 1] >= 0) {
                const int r = current_[h - 1] + 1;
                if (r < static_cast<int>(ref_class_.size()) && ref_class_[r] == c && !used_r_[r]) {
                    preferred = r;
                    try_ref(static_cast<size_t>(r));
                }
            }
            for (size_t r = 0; r < ref_class_.size(); ++r) {
                if (static_cast<int>(r) == preferred || used_r_[r] || ref_class_[r] != c) continue;
                try_ref(r);
            }
        }
        if (remaining_[c] >= need - done) dfs(i + 1, links);
        ++remaining_[c];
    }

    std::vector<int> hyp_class_;
    std::vector<int> ref_class_;
    std::vector<int>& align_;

    std::vector<size_t> order_;
    std::map<int, int> need_;
    std::map<int, int> matched_;
    std::map<int, int> remaining_;
    std::vector<size_t> pairs_from_;
    std::vector<bool> used_r_;
    std::vector<int> current_;
    std::vector<int> best_;
    std::size_t best_links_ = 0;
    std::size_t nodes_ = 0;
};

// Assigns dense class ids to keys of words still unaligned.
template <typename KeyFn>
void run_stage(std::span<const std::string> hyp, std::span<const std::string> ref, std::vector<int>& align,
               KeyFn key) {
    std::vector<bool> ref_used(ref.size(), false);
    for (int r : align) {
        if (r >= 0) ref_used[static_cast<size_t>(r)] = true;
    }
    std::map<std::string, int> ids;
    auto id_of = [&](const std::string& k) {
        auto [it, _] = ids.emplace(k, static_cast<int>(ids.size()));
        return it->second;
    };
    std::vector<int> hyp_class(hyp.size(), -1), ref_class(ref.size(), -1);
    for (size_t r = 0; r < ref.size(); ++r) {
        if (!ref_used[r]) ref_class[r] = id_of(key(ref[r]));
    }
    for (size_t h = 0; h < hyp.size(); ++h) {
        if (align[h] >= 0) continue;
        auto it = ids.find(key(hyp[h]));
        if (it != ids.end()) hyp_class[h] = it->second;
    }
    StageSolver(std::move(hyp_class), std::move(ref_class), align).solve();
}

}  // namespace

Alignment align(std::span<const std::string> hyp, std::span<const std::string> ref) {
    Alignment a;
    a.hyp_to_ref.assign(hyp.size(), -1);
    if (hyp.empty() || ref.empty()) return a;

    run_stage(hyp, ref, a.hyp_to_ref, [](const std::string& w) { return w; });
    run_stage(hyp, ref, a.hyp_to_ref, [](const std::string& w) { return porter_stem(w); });

    a.matches = static_cast<std::size_t>(std::count_if(a.hyp_to_ref.begin(), a.hyp_to_ref.end(), [](int r) { return r >= 0; }));
    a.chunks = count_chunks(a.hyp_to_ref);
    return a;
}

MeteorScore meteor_details(std::string_view hypothesis, std::string_view reference) {
    const auto hyp = meteor_tokens(hypothesis);
    const auto ref = meteor_tokens(reference);
    MeteorScore s;
    s.hyp_len = hyp.size();
    s.ref_len = ref.size();
    if (hyp.empty() || ref.empty()) return s;

    const auto a = align(hyp, ref);
    s.matches = a.matches;
    s.chunks = a.chunks;
    if (s.matches == 0) return s;

    const double m = static_cast<double>(s.matches);
    s.precision = m / static_cast<double>(s.hyp_len);
    s.recall = m / static_cast<double>(s.ref_len);
    s.f_mean = 10.0 * s.precision * s.recall / (s.recall + 9.0 * s.precision);
    const double frag = static_cast<double>(s.chunks) / m;
    s.penalty = 0.5 * frag * frag * frag;
    s.score = s.f_mean * (1.0 - s.penalty);
    return s;
}

double meteor(std::string_view hypothesis, std::string_view reference) {
    return meteor_details(hypothesis, reference).score;
}

namespace {

std::vector<Embedding> unit_or_zero(std::span<const Embedding> vs) {
    std::vector<Embedding> out;
    out.reserve(vs.size());
    for (const auto& v : vs) {
        double sq = 0.0;
        for (double x : v) sq += x * x;
        const double norm = std::sqrt(sq);
        Embedding u(v.size(), 0.0);
        if (norm > 0 && std::isfinite(norm)) {
            for (size_t i = 0; i < v.size(); ++i) u[i] = v[i] / norm;
        }
        out.push_back(std::move(u));
    }
    return out;
}

double mean_best_cosine(const std::vector<Embedding>& from, const std::vector<Embedding>& to) {
    if (from.empty() || to.empty()) return 0.0;
    double total = 0.0;
    for (const auto& a : from) {
        double best = -1.0;
        for (const auto& b : to) {
            double d = 0.0;
            const size_t n = std::min(a.size(), b.size());
            for (size_t i = 0; i < n; ++i) d += a[i] * b[i];
            best = std::max(best, d);
        }
        total += best;
    }
    return total / static_cast<double>(from.size());
}

}  // namespace

PrfScore greedy_match_f1(std::span<const Embedding> hyp_vectors, std::span<const Embedding> ref_vectors) {
    const auto hyp = unit_or_zero(hyp_vectors);
    const auto ref = unit_or_zero(ref_vectors);
    PrfScore s;
    s.precision = std::clamp(mean_best_cosine(hyp, ref), 0.0, 1.0);
    s.recall = std::clamp(mean_best_cosine(ref, hyp), 0.0, 1.0);
    const double sum = s.precision + s.recall;
    s.f1 = sum > 0 ? std::clamp(2.0 * s.precision * s.recall / sum, 0.0, 1.0) : 0.0;
    return s;
}

PrfScore semantic_f1(std::string_view hypothesis, std::string_view reference, ModelGateway& gateway,
                     const ModelRef& embedder) {
    const auto hyp = gateway.embed_tokens(embedder, hypothesis);
    const auto ref = gateway.embed_tokens(embedder, reference);
    std::vector<Embedding> hv, rv;
    hv.reserve(hyp.size());
    rv.reserve(ref.size());
    for (const auto& t : hyp) hv.push_back(t.vector);
    for (const auto& t : ref) rv.push_back(t.vector);
    return greedy_match_f1(hv, rv);
}

}  // namespace docent::metrics
