#pragma once
// Scoring for edited models: exact match, locality drawdown, neighbourhood
// KL divergence and the combined SURE score.

#include <cctype>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "factcache/error.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/text.hpp"

namespace factcache {

using Distribution = std::map<std::string, double>;

// Lowercase, drop ASCII punctuation, collapse whitespace, then drop one
// leading article.
inline std::string normalize_answer(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool pending_space = false;
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if (u < 0x80 && std::isspace(u)) {
            pending_space = !out.empty();
            continue;
        }
        if (u < 0x80 && std::ispunct(u)) continue;
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(text::ascii_lower(c));
    }
    for (std::string_view article : {"the ", "an ", "a "}) {
        if (out.compare(0, article.size(), article) == 0) {
            out.erase(0, article.size());
            break;
        }
    }
    return out;
}

struct Prediction {
    std::string text;
    std::string gold;
    // CHOICE items also accept the bare letter of the correct option.
    std::optional<char> gold_letter;
};

inline bool exact_match(const Prediction& p) {
    if (p.gold_letter) {
        const auto t = text::trim(p.text);
        const char letter = static_cast<char>(std::toupper(static_cast<unsigned char>(*p.gold_letter)));
        if (!t.empty() && std::toupper(static_cast<unsigned char>(t[0])) == letter) {
            if (t.size() == 1) return true;
            if (t.size() == 2 && (t[1] == '.' || t[1] == ')' || t[1] == ':')) return true;
            if (t[1] == ':' && normalize_answer(t.substr(2)) == normalize_answer(p.gold)) return true;
        }
    }
    return normalize_answer(p.text) == normalize_answer(p.gold);
}

// Percentage of predictions matching their gold answer.
inline double em_score(const std::vector<Prediction>& predictions) {
    if (predictions.empty()) throw Error(ErrorCode::EmptySet, "EM over an empty prediction set");
    std::size_t hits = 0;
    for (const auto& p : predictions) hits += exact_match(p) ? 1 : 0;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(predictions.size());
}

inline double em_score(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::vector<Prediction> preds;
    preds.reserve(pairs.size());
    for (const auto& [text, gold] : pairs) preds.push_back({text, gold, std::nullopt});
    return em_score(preds);
}

inline double drawdown(double base_locality_em, double edited_locality_em) {
    return std::max(0.0, base_locality_em - edited_locality_em);
}

inline constexpr double kNklSmoothing = 1e-9;
inline constexpr double kNklReportScale = 1e4;

// KL(p || q) with q smoothed by kNklSmoothing and renormalised.
inline double kl_divergence(const Distribution& p, const Distribution& q) {
    if (p.size() != q.size()) throw Error(ErrorCode::SupportMismatch, "distributions have different supports");
    double q_total = 0.0;
    for (auto pi = p.begin(), qi = q.begin(); pi != p.end(); ++pi, ++qi) {
        if (pi->first != qi->first) {
            throw Error(ErrorCode::SupportMismatch, "support differs at \"" + pi->first + "\"");
        }
        q_total += qi->second + kNklSmoothing;
    }
    double kl = 0.0;
    for (auto pi = p.begin(), qi = q.begin(); pi != p.end(); ++pi, ++qi) {
        if (pi->second <= 0.0) continue;
        const double q_smoothed = (qi->second + kNklSmoothing) / q_total;
        kl += pi->second * std::log(pi->second / q_smoothed);
    }
    return std::max(0.0, kl);
}

// Mean KL(base || edited) over paired distributions.
inline double nkl(const std::vector<Distribution>& base, const std::vector<Distribution>& edited) {
    if (base.size() != edited.size()) throw Error(ErrorCode::SupportMismatch, "unpaired distribution lists");
    if (base.empty()) throw Error(ErrorCode::EmptySet, "NKL over an empty set");
    double total = 0.0;
    for (std::size_t i = 0; i < base.size(); ++i) total += kl_divergence(base[i], edited[i]);
    return total / static_cast<double>(base.size());
}

// Returns nullopt (UNAVAILABLE) when any answer lacks a distribution, as
// with completion APIs that expose text only.
inline std::optional<double> nkl(const std::vector<std::optional<Distribution>>& base,
                                 const std::vector<std::optional<Distribution>>& edited) {
    std::vector<Distribution> b;
    std::vector<Distribution> e;
    for (const auto& d : base) {
        if (!d) return std::nullopt;
        b.push_back(*d);
    }
    for (const auto& d : edited) {
        if (!d) return std::nullopt;
        e.push_back(*d);
    }
    return nkl(b, e);
}

// Extends both distributions to the union of their supports with zero mass.
inline std::pair<Distribution, Distribution> align_supports(Distribution p, Distribution q) {
    for (const auto& [k, v] : p) q.emplace(k, 0.0);
    for (const auto& [k, v] : q) p.emplace(k, 0.0);
    return {std::move(p), std::move(q)};
}

struct SureParams {
    double a = 1.0;
    double b = 1.0;
    double alpha = 1.0;
    double beta = 1.0;

    void validate() const {
        if (!std::isfinite(a) || !std::isfinite(b) || !std::isfinite(alpha) || !std::isfinite(beta) || a < 0 ||
            b < 0 || alpha <= 0 || beta <= 0) {
            throw Error(ErrorCode::InvalidArgument, "SURE needs a, b >= 0 and alpha, beta > 0, all finite");
        }
    }
};

inline double sure(double em, double dd, const SureParams& params = {}) {
    if (em < 0 || dd < 0) throw Error(ErrorCode::InvalidArgument, "SURE inputs must be non-negative");
    params.validate();
    return params.a * std::pow(em, params.alpha) - params.b * std::pow(dd, params.beta);
}

}  // namespace factcache
