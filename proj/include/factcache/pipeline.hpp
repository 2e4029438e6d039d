#pragma once
// The edited model: extract entities from the input, read their facts
// through the tiered store, rank them against the query, and answer from a
// prompt carrying the best ones. Multi-hop questions are answered either
// hop by hop or as a dialogue.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "factcache/dataset.hpp"
#include "factcache/error.hpp"
#include "factcache/fact_cache.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/model_client.hpp"
#include "factcache/prompts.hpp"
#include "factcache/text.hpp"

namespace factcache {

// ---- entity extraction ------------------------------------------------------

enum class ExtractorKind { AliasDictionary, ModelPrompted };

inline std::optional<ExtractorKind> parse_extractor_kind(std::string_view s) {
    if (s == "alias_dictionary") return ExtractorKind::AliasDictionary;
    if (s == "model_prompted") return ExtractorKind::ModelPrompted;
    return std::nullopt;
}

struct EntityMention {
    std::string entity;
    std::size_t begin = 0;
    std::size_t length = 0;
};

// Case-insensitive surface-form dictionary. Lookups try every word-boundary
// start position against each distinct alias length, so cost depends on the
// input length and the number of distinct lengths, not the dictionary size.
class AliasIndex {
public:
    void add(std::string_view alias, std::string_view entity_id) {
        const auto key = text::to_lower(text::trim(alias));
        if (key.empty() || entity_id.empty()) return;
        std::unique_lock lock(mutex_);
        // The first registration of a surface form wins.
        if (aliases_.emplace(key, std::string(entity_id)).second) lengths_.insert(key.size());
    }

    void add_entity(const EntityRef& e) {
        add(e.label, e.id);
        add(e.id, e.id);
        for (const auto& a : e.aliases) add(a, e.id);
    }

    // Subject labels and entity-valued object labels of every triple.
    void add_triples(const TripleSet& triples) {
        for (const auto& t : triples) add_triple(t);
    }
    void add_triple(const FactTriple& t) {
        add(t.subject_text(), t.subject);
        if (!t.object_is_literal) add(t.object_text(), t.object);
    }

    std::optional<std::string> lookup(std::string_view surface) const {
        std::shared_lock lock(mutex_);
        auto it = aliases_.find(text::to_lower(text::trim(surface)));
        if (it == aliases_.end()) return std::nullopt;
        return it->second;
    }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return aliases_.size();
    }

    // Every alias occurrence at word boundaries, longest first then leftmost.
    std::vector<EntityMention> all_matches(std::string_view input) const {
        const std::string lowered = text::to_lower(input);
        std::vector<EntityMention> found;
        std::shared_lock lock(mutex_);
        for (std::size_t begin = 0; begin < lowered.size(); ++begin) {
            if (!text::starts_with_word_boundary(lowered, begin) || lowered[begin] == ' ') continue;
            for (auto len : lengths_) {
                if (begin + len > lowered.size()) break;
                if (!text::ends_with_word_boundary(lowered, begin + len)) continue;
                auto it = aliases_.find(lowered.substr(begin, len));
                if (it != aliases_.end()) found.push_back({it->second, begin, len});
            }
        }
        std::sort(found.begin(), found.end(), [](const EntityMention& a, const EntityMention& b) {
            return a.length != b.length ? a.length > b.length : a.begin < b.begin;
        });
        return found;
    }

    std::optional<EntityMention> longest_match(std::string_view input) const {
        auto all = all_matches(input);
        if (all.empty()) return std::nullopt;
        return all.front();
    }

    // Greedy non-overlapping selection in longest-then-leftmost order.
    std::vector<EntityMention> disjoint_matches(std::string_view input) const {
        std::vector<EntityMention> chosen;
        for (const auto& m : all_matches(input)) {
            const bool overlaps = std::any_of(chosen.begin(), chosen.end(), [&](const EntityMention& c) {
                return m.begin < c.begin + c.length && c.begin < m.begin + m.length;
            });
            if (!overlaps) chosen.push_back(m);
        }
        return chosen;
    }

private:
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, std::string> aliases_;
    std::set<std::size_t> lengths_;
};

// Resolves a surface string returned by the model: exact alias first, then
// the longest alias inside it.
inline std::optional<std::string> resolve_surface(const AliasIndex& index, std::string_view surface) {
    if (auto exact = index.lookup(surface)) return exact;
    if (auto m = index.longest_match(surface)) return m->entity;
    return std::nullopt;
}

// Single primary entity. Throws NOT_FOUND when nothing resolves.
inline std::string extract_entity(std::string_view input, ExtractorKind kind, const AliasIndex& index,
                                  ModelClient* model = nullptr) {
    if (text::trim(input).empty()) throw Error(ErrorCode::InvalidArgument, "extraction input is empty");
    if (kind == ExtractorKind::AliasDictionary) {
        if (auto m = index.longest_match(input)) return m->entity;
        throw Error(ErrorCode::NotFound, "no known entity in: " + std::string(input));
    }
    if (!model) throw Error(ErrorCode::InvalidArgument, "prompted extraction needs a model");
    const std::string surface = model->complete(extraction_prompt(input));
    if (auto id = resolve_surface(index, surface)) return *id;
    throw Error(ErrorCode::NotFound, "model output \"" + surface + "\" names no known entity");
}

// ---- ranking ----------------------------------------------------------------

class Scorer {
public:
    virtual ~Scorer() = default;
    // Similarity in [0, 1] between the query and a triple's serialized text.
    virtual double score(std::string_view query, const FactTriple& triple) const = 0;
};

// Cosine over lowercase token-count vectors.
class LexicalScorer final : public Scorer {
public:
    double score(std::string_view query, const FactTriple& triple) const override {
        return cosine(counts(query), counts(triple.serialize()));
    }

    static std::map<std::string, double> counts(std::string_view s) {
        std::map<std::string, double> v;
        for (auto& tok : text::tokenize(s)) v[std::move(tok)] += 1.0;
        return v;
    }

    static double cosine(const std::map<std::string, double>& a, const std::map<std::string, double>& b) {
        double dot = 0, na = 0, nb = 0;
        for (const auto& [k, x] : a) {
            na += x * x;
            if (auto it = b.find(k); it != b.end()) dot += x * it->second;
        }
        for (const auto& [k, y] : b) nb += y * y;
        if (na == 0 || nb == 0) return 0.0;
        return dot / std::sqrt(na * nb);
    }
};

// Cosine over vectors from an external embedding provider, clamped at 0.
class EmbeddingScorer final : public Scorer {
public:
    using Provider = std::function<std::vector<double>(std::string_view)>;
    explicit EmbeddingScorer(Provider provider) : provider_(std::move(provider)) {
        if (!provider_) throw Error(ErrorCode::InvalidArgument, "embedding scorer needs a provider");
    }

    double score(std::string_view query, const FactTriple& triple) const override {
        const auto a = provider_(query);
        const auto b = provider_(triple.serialize());
        if (a.size() != b.size()) throw Error(ErrorCode::InvalidArgument, "embedding dimensions differ");
        double dot = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na == 0 || nb == 0) return 0.0;
        return std::clamp(dot / std::sqrt(na * nb), 0.0, 1.0);
    }

private:
    Provider provider_;
};

struct ScoredTriple {
    FactTriple triple;
    double score = 0.0;
};

struct RankedEvidence {
    std::vector<ScoredTriple> triples;
    std::size_t k = 1;

    std::vector<FactTriple> selected() const {
        std::vector<FactTriple> out;
        for (const auto& s : triples) out.push_back(s.triple);
        return out;
    }
};

inline RankedEvidence rank_triples(std::string_view query, const TripleSet& candidates, std::size_t k,
                                   const Scorer& scorer) {
    if (k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    RankedEvidence out;
    out.k = k;
    for (const auto& t : candidates) out.triples.push_back({t, scorer.score(query, t)});
    // Candidates arrive in key order, so a stable sort keeps ties lexicographic.
    std::stable_sort(out.triples.begin(), out.triples.end(),
                     [](const ScoredTriple& a, const ScoredTriple& b) { return a.score > b.score; });
    if (out.triples.size() > k) out.triples.resize(k);
    return out;
}

// ---- pipeline ---------------------------------------------------------------

struct PipelineOptions {
    std::size_t k = 1;
    ExtractorKind extractor = ExtractorKind::AliasDictionary;
};

struct StageLatencies {
    std::chrono::nanoseconds extract{0};
    std::chrono::nanoseconds retrieve{0};
    std::chrono::nanoseconds rank{0};
    std::chrono::nanoseconds prompt{0};
    std::chrono::nanoseconds generate{0};

    std::chrono::nanoseconds total() const { return extract + retrieve + rank + prompt + generate; }
};

struct AnswerTrace {
    std::vector<std::string> entities;
    std::size_t cache_hits = 0;
    std::size_t cache_misses = 0;
    TripleSet retrieved;
    RankedEvidence evidence;
    AssembledPrompt prompt;
    ModelAnswer answer;
    StageLatencies latency;
};

enum class MultiHopMode { Decompose, Dialogue };

inline std::string_view to_string(MultiHopMode m) { return m == MultiHopMode::Decompose ? "decompose" : "dialogue"; }

inline EditRequest edit_from_triple(const FactTriple& t) {
    EditRequest e;
    e.subject = t.subject;
    e.relation = t.relation;
    e.new_object = t.object;
    e.object_is_literal = t.object_is_literal;
    e.subject_label = t.subject_label;
    e.relation_label = t.relation_label;
    e.object_label = t.object_label;
    e.source = t.source;
    return e;
}

class Pipeline {
public:
    Pipeline(TieredFactStore& store, std::shared_ptr<AliasIndex> aliases, PipelineOptions options = {},
             std::shared_ptr<const Scorer> scorer = std::make_shared<LexicalScorer>())
        : store_(store), aliases_(std::move(aliases)), options_(options), scorer_(std::move(scorer)) {
        if (!aliases_) throw Error(ErrorCode::InvalidArgument, "pipeline needs an alias index");
        if (options_.k < 1) throw Error(ErrorCode::InvalidArgument, "k must be >= 1");
    }

    TieredFactStore& store() { return store_; }
    AliasIndex& aliases() { return *aliases_; }
    const AliasIndex& aliases() const { return *aliases_; }

    // Writes the triple through apply_update and makes its names findable.
    UpdateResult apply_edit(const FactTriple& t) {
        aliases_->add_triple(t);
        return store_.apply_update(edit_from_triple(t));
    }
    const PipelineOptions& options() const { return options_; }

    // Entities named in the input; every disjoint alias match for the
    // dictionary extractor, the model's single pick for the prompted one.
    std::vector<std::string> extract(std::string_view input, ModelClient& model) const {
        std::vector<std::string> out;
        if (options_.extractor == ExtractorKind::AliasDictionary) {
            for (const auto& m : aliases_->disjoint_matches(input)) {
                if (std::find(out.begin(), out.end(), m.entity) == out.end()) out.push_back(m.entity);
            }
            return out;
        }
        try {
            out.push_back(extract_entity(input, ExtractorKind::ModelPrompted, *aliases_, &model));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::NotFound) throw;
        }
        return out;
    }

    // With use_evidence = false the model answers unaided, which is how base
    // (unedited) behaviour is measured.
    AnswerTrace answer_traced(std::string_view query, TaskKind task, ModelClient& model, bool use_evidence = true) {
        using Clock = std::chrono::steady_clock;
        AnswerTrace trace;
        if (use_evidence) {
            auto t0 = Clock::now();
            trace.entities = extract(query, model);
            auto t1 = Clock::now();
            for (const auto& e : trace.entities) {
                auto r = store_.retrieve_traced(e);
                (r.hit ? trace.cache_hits : trace.cache_misses) += 1;
                trace.retrieved.merge(r.triples);
            }
            auto t2 = Clock::now();
            trace.evidence = rank_triples(query, trace.retrieved, options_.k, *scorer_);
            auto t3 = Clock::now();
            trace.latency.extract = t1 - t0;
            trace.latency.retrieve = t2 - t1;
            trace.latency.rank = t3 - t2;
        } else {
            trace.evidence.k = options_.k;
        }
        auto t3 = Clock::now();
        trace.prompt = assemble_prompt(task, trace.evidence.selected(), query);
        auto t4 = Clock::now();
        trace.answer = model.generate(trace.prompt);
        auto t5 = Clock::now();
        trace.latency.prompt = t4 - t3;
        trace.latency.generate = t5 - t4;
        return trace;
    }

    ModelAnswer answer(std::string_view query, TaskKind task, ModelClient& model, bool use_evidence = true) {
        return answer_traced(query, task, model, use_evidence).answer;
    }

    // Chain answering. A hop is applicable only through a retrieved triple
    // carrying that hop's relation; otherwise HopFailed(hop) is thrown.
    ModelAnswer answer_multihop(const MultiHopItem& item, MultiHopMode mode, ModelClient& model) {
        if (item.hops() < 2 || item.hops() > 5) throw Error(ErrorCode::InvalidArgument, "chain length must be 2..5");
        return mode == MultiHopMode::Decompose ? decompose(item, model) : dialogue(item, model);
    }

private:
    ModelAnswer decompose(const MultiHopItem& item, ModelClient& model) {
        std::string entity;
        FactTriple last;
        for (std::size_t i = 0; i < item.hops(); ++i) {
            const std::string& sub_question = item.hop_queries[i];
            if (i == 0) {
                const auto found = extract(sub_question, model);
                if (found.empty()) throw HopFailed(1);
                entity = found.front();
            }
            auto applicable = applicable_triples(store_.retrieve(entity), item.chain[i].relation);
            if (applicable.empty()) throw HopFailed(i + 1);
            last = rank_triples(sub_question, applicable, 1, *scorer_).triples.front().triple;
            if (i + 1 < item.hops() && last.object_is_literal) throw HopFailed(i + 2);
            entity = last.object;
        }
        return model.generate(assemble_prompt(TaskKind::MultiHopQA, {last}, item.multihop_question()));
    }

    ModelAnswer dialogue(const MultiHopItem& item, ModelClient& model) {
        ModelAnswer previous;
        for (std::size_t i = 0; i < item.dialogue_turns.size(); ++i) {
            const std::string turn = item.dialogue_turns[i].resolve(previous.text);
            auto trace = answer_traced(turn, TaskKind::Dialogue, model);
            const bool applicable = std::any_of(trace.evidence.triples.begin(), trace.evidence.triples.end(),
                                                [&](const ScoredTriple& s) { return s.triple.relation == item.chain[i].relation; });
            if (!applicable) throw HopFailed(i + 1);
            previous = std::move(trace.answer);
        }
        return previous;
    }

    static TripleSet applicable_triples(const TripleSet& retrieved, const std::string& relation) {
        TripleSet out;
        for (const auto& t : retrieved) {
            if (t.relation == relation) out.insert(t);
        }
        return out;
    }

    TieredFactStore& store_;
    std::shared_ptr<AliasIndex> aliases_;
    PipelineOptions options_;
    std::shared_ptr<const Scorer> scorer_;
};

}  // namespace factcache
