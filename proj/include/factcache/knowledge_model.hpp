#pragma once
// Fact triples, triple sets, and the scope algebra over them: the one-hop
// join, hop frontiers, the extended scope EX, and in/extended/outside
// classification of a probe against an edit.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "factcache/error.hpp"
#include "factcache/text.hpp"

namespace factcache {

enum class TaskKind { QA, Completion, Cloze, Choice, FactCheck, Locality, MultiHopQA, Dialogue };

inline constexpr TaskKind kAllTaskKinds[] = {TaskKind::QA,        TaskKind::Completion,
                                             TaskKind::Cloze,     TaskKind::Choice,
                                             TaskKind::FactCheck, TaskKind::Locality,
                                             TaskKind::MultiHopQA, TaskKind::Dialogue};

inline std::string_view to_string(TaskKind kind) {
    switch (kind) {
        case TaskKind::QA: return "qa";
        case TaskKind::Completion: return "completion";
        case TaskKind::Cloze: return "cloze";
        case TaskKind::Choice: return "choice";
        case TaskKind::FactCheck: return "fact_check";
        case TaskKind::Locality: return "locality";
        case TaskKind::MultiHopQA: return "multi_hop_qa";
        case TaskKind::Dialogue: return "dialogue";
    }
    return "?";
}

inline std::optional<TaskKind> parse_task_kind(std::string_view name) {
    const auto lower = text::to_lower(name);
    for (TaskKind k : kAllTaskKinds) {
        if (lower == to_string(k)) return k;
    }
    if (lower == "fill") return TaskKind::Cloze;
    if (lower == "choose") return TaskKind::Choice;
    if (lower == "fc") return TaskKind::FactCheck;
    if (lower == "local") return TaskKind::Locality;
    return std::nullopt;
}

enum class Source { Wikidata, DBpedia, Manual, Synthetic };

inline std::string_view to_string(Source s) {
    switch (s) {
        case Source::Wikidata: return "WIKIDATA";
        case Source::DBpedia: return "DBPEDIA";
        case Source::Manual: return "MANUAL";
        case Source::Synthetic: return "SYNTHETIC";
    }
    return "?";
}

inline Source parse_source(std::string_view name) {
    const auto lower = text::to_lower(name);
    if (lower == "wikidata") return Source::Wikidata;
    if (lower == "dbpedia") return Source::DBpedia;
    if (lower == "manual") return Source::Manual;
    if (lower == "synthetic") return Source::Synthetic;
    throw Error(ErrorCode::ParseError, "unknown triple source: " + std::string(name));
}

struct EntityRef {
    std::string id;
    std::string label;
    std::set<std::string> aliases;

    void validate() const {
        if (id.empty()) throw Error(ErrorCode::InvalidArgument, "entity id is empty");
        if (label.empty()) throw Error(ErrorCode::InvalidArgument, "entity label is empty: " + id);
        if (aliases.count(std::string{})) {
            throw Error(ErrorCode::InvalidArgument, "entity alias set contains the empty string: " + id);
        }
    }
};

struct RelationRef {
    std::string id;
    std::string label;
    std::string description;
    // Each template holds exactly one "{}".
    std::map<TaskKind, std::vector<std::string>> task_templates;

    void validate() const {
        if (id.empty()) throw Error(ErrorCode::InvalidArgument, "relation id is empty");
        if (label.empty()) throw Error(ErrorCode::InvalidArgument, "relation label is empty: " + id);
        auto qa = task_templates.find(TaskKind::QA);
        if (qa == task_templates.end() || qa->second.empty()) {
            throw Error(ErrorCode::InvalidArgument, "relation has no QA template: " + id);
        }
        for (const auto& [kind, templates] : task_templates) {
            for (const auto& t : templates) {
                if (text::count_occurrences(t, "{}") != 1) {
                    throw Error(ErrorCode::BadTemplate, "template needs exactly one {}: " + t);
                }
            }
        }
    }
};

struct TripleKey {
    std::string subject;
    std::string relation;
    std::string object;

    auto operator<=>(const TripleKey&) const = default;
    bool operator==(const TripleKey&) const = default;
};

struct FactTriple {
    std::string subject;
    std::string relation;
    std::string object;  // entity id, or the literal value when object_is_literal
    bool object_is_literal = false;

    // Display labels; an empty label falls back to the id.
    std::string subject_label;
    std::string relation_label;
    std::string object_label;

    Source source = Source::Synthetic;
    Timestamp fetched_at{};
    std::uint64_t version = 1;

    TripleKey key() const { return {subject, relation, object}; }

    const std::string& subject_text() const { return subject_label.empty() ? subject : subject_label; }
    const std::string& relation_text() const { return relation_label.empty() ? relation : relation_label; }
    const std::string& object_text() const { return object_label.empty() ? object : object_label; }

    // "(s, r, o)" with display labels, the evidence line format.
    std::string serialize() const {
        return "(" + subject_text() + ", " + relation_text() + ", " + object_text() + ")";
    }

    void validate() const {
        if (subject.empty()) throw Error(ErrorCode::InvalidArgument, "triple subject is empty");
        if (relation.empty()) throw Error(ErrorCode::InvalidArgument, "triple relation is empty");
        if (version < 1) throw Error(ErrorCode::InvalidArgument, "triple version must be >= 1");
    }

    // Set membership ignores provenance and labels.
    friend bool operator==(const FactTriple& a, const FactTriple& b) { return a.key() == b.key(); }
};

// Convenience for tests and synthetic data: ids double as labels.
inline FactTriple make_triple(std::string s, std::string r, std::string o,
                              Source source = Source::Synthetic) {
    FactTriple t;
    t.subject = std::move(s);
    t.relation = std::move(r);
    t.object = std::move(o);
    t.source = source;
    return t;
}

// Set of triples keyed by (subject, relation, object). Ordering by key makes
// the per-subject index a contiguous range, so it cannot drift from the set.
class TripleSet {
public:
    using Map = std::map<TripleKey, FactTriple>;

    class const_iterator {
    public:
        using iterator_category = std::bidirectional_iterator_tag;
        using value_type = FactTriple;
        using difference_type = std::ptrdiff_t;
        using pointer = const FactTriple*;
        using reference = const FactTriple&;

        const_iterator() = default;
        explicit const_iterator(Map::const_iterator it) : it_(it) {}
        reference operator*() const { return it_->second; }
        pointer operator->() const { return &it_->second; }
        const_iterator& operator++() { ++it_; return *this; }
        const_iterator operator++(int) { auto c = *this; ++it_; return c; }
        const_iterator& operator--() { --it_; return *this; }
        bool operator==(const const_iterator& o) const { return it_ == o.it_; }

    private:
        Map::const_iterator it_;
    };

    TripleSet() = default;
    TripleSet(std::initializer_list<FactTriple> triples) {
        for (const auto& t : triples) insert(t);
    }

    // Returns false (and keeps the existing element) when s/r/o is already present.
    bool insert(FactTriple t) {
        auto key = t.key();
        return triples_.emplace(std::move(key), std::move(t)).second;
    }
    bool erase(const TripleKey& key) { return triples_.erase(key) > 0; }
    bool contains(const TripleKey& key) const { return triples_.count(key) > 0; }
    bool contains(const FactTriple& t) const { return contains(t.key()); }
    const FactTriple* find(const TripleKey& key) const {
        auto it = triples_.find(key);
        return it == triples_.end() ? nullptr : &it->second;
    }

    std::size_t size() const { return triples_.size(); }
    bool empty() const { return triples_.empty(); }
    const_iterator begin() const { return const_iterator(triples_.begin()); }
    const_iterator end() const { return const_iterator(triples_.end()); }

    std::vector<const FactTriple*> by_subject(std::string_view subject) const {
        std::vector<const FactTriple*> out;
        for (auto it = triples_.lower_bound(TripleKey{std::string(subject), {}, {}});
             it != triples_.end() && it->first.subject == subject; ++it) {
            out.push_back(&it->second);
        }
        return out;
    }

    void merge(const TripleSet& other) {
        for (const auto& t : other) insert(t);
    }

    bool is_subset_of(const TripleSet& other) const {
        for (const auto& [k, _] : triples_) {
            if (!other.contains(k)) return false;
        }
        return true;
    }

    std::vector<TripleKey> keys() const {
        std::vector<TripleKey> out;
        out.reserve(triples_.size());
        for (const auto& [k, _] : triples_) out.push_back(k);
        return out;
    }

    friend bool operator==(const TripleSet& a, const TripleSet& b) {
        if (a.size() != b.size()) return false;
        auto ia = a.triples_.begin();
        for (auto ib = b.triples_.begin(); ib != b.triples_.end(); ++ia, ++ib) {
            if (ia->first != ib->first) return false;
        }
        return true;
    }

private:
    Map triples_;
};

enum class ScopeClass { InScope, Extended, Outside };

inline std::string_view to_string(ScopeClass c) {
    switch (c) {
        case ScopeClass::InScope: return "IN_SCOPE";
        case ScopeClass::Extended: return "EXTENDED";
        case ScopeClass::Outside: return "OUTSIDE";
    }
    return "?";
}

// Maps entities, relations, queries and answers to equivalence classes.
// Identity on ids by default; entity labels/aliases resolve answers; query
// strings resolve to (subject, relation) only when registered.
class EquivalenceOracle {
public:
    void add_entity(const EntityRef& entity) {
        entity.validate();
        answers_.emplace(text::to_lower(entity.label), entity.id);
        for (const auto& alias : entity.aliases) answers_.emplace(text::to_lower(alias), entity.id);
    }

    void add_answer(std::string_view answer, std::string_view entity_id) {
        answers_.insert_or_assign(text::to_lower(answer), std::string(entity_id));
    }

    void add_query(std::string_view query, std::string_view subject_id, std::string_view relation_id) {
        queries_.insert_or_assign(std::string(query),
                                  std::pair{std::string(subject_id), std::string(relation_id)});
    }

    void declare_equivalent_entities(std::string_view a, std::string_view b) {
        unite(entity_parent_, std::string(a), std::string(b));
    }
    void declare_equivalent_relations(std::string_view a, std::string_view b) {
        unite(relation_parent_, std::string(a), std::string(b));
    }

    std::string entity_class(std::string_view id) const { return root(entity_parent_, std::string(id)); }
    std::string relation_class(std::string_view id) const {
        return root(relation_parent_, std::string(id));
    }

    std::optional<std::pair<std::string, std::string>> resolve_query(std::string_view query) const {
        auto it = queries_.find(std::string(text::trim(query)));
        if (it == queries_.end()) return std::nullopt;
        return it->second;
    }

    std::optional<std::string> resolve_answer(std::string_view answer) const {
        auto it = answers_.find(text::to_lower(text::trim(answer)));
        if (it == answers_.end()) return std::nullopt;
        return it->second;
    }

    bool equivalent(const FactTriple& a, const FactTriple& b) const {
        return entity_class(a.subject) == entity_class(b.subject) &&
               relation_class(a.relation) == relation_class(b.relation) &&
               object_class(a) == object_class(b);
    }

    std::string object_class(const FactTriple& t) const {
        return t.object_is_literal ? "literal:" + t.object : entity_class(t.object);
    }

private:
    using Parents = std::map<std::string, std::string>;

    static std::string root(const Parents& parents, std::string id) {
        for (auto it = parents.find(id); it != parents.end() && it->second != id; it = parents.find(id)) {
            id = it->second;
        }
        return id;
    }

    // The lexicographically smallest id represents its class, so class ids
    // do not depend on declaration order.
    static void unite(Parents& parents, std::string a, std::string b) {
        auto ra = root(parents, std::move(a));
        auto rb = root(parents, std::move(b));
        if (ra == rb) return;
        if (rb < ra) std::swap(ra, rb);
        parents[rb] = ra;
        parents.emplace(ra, ra);
    }

    std::unordered_map<std::string, std::string> answers_;
    std::unordered_map<std::string, std::pair<std::string, std::string>> queries_;
    Parents entity_parent_;
    Parents relation_parent_;
};

// One-hop frontier of `a` through `b`: triples of b whose subject is an
// entity object of some triple in a. Literal objects have no outgoing edges.
inline TripleSet join(const TripleSet& a, const TripleSet& b) {
    TripleSet out;
    std::set<std::string> objects;
    for (const auto& t : a) {
        if (!t.object_is_literal) objects.insert(t.object);
    }
    for (const auto& object : objects) {
        for (const FactTriple* t : b.by_subject(object)) out.insert(*t);
    }
    return out;
}

// Hop-0 set: the seed plus every graph triple equivalent to it.
inline TripleSet equivalents(const FactTriple& tr, const TripleSet& graph, const EquivalenceOracle& oracle) {
    TripleSet out;
    out.insert(tr);
    for (const auto& t : graph) {
        if (oracle.equivalent(t, tr)) out.insert(t);
    }
    return out;
}

inline TripleSet frontier(const FactTriple& tr, const TripleSet& graph, std::size_t hops,
                          const EquivalenceOracle& oracle) {
    TripleSet current = equivalents(tr, graph, oracle);
    for (std::size_t i = 0; i < hops && !current.empty(); ++i) current = join(current, graph);
    return current;
}

// Union of frontiers 0..max_hops. Stops early once a frontier repeats, since
// every later frontier then repeats too (this is what bounds cyclic graphs).
inline TripleSet compute_ex(const FactTriple& tr, const TripleSet& graph, std::size_t max_hops,
                            const EquivalenceOracle& oracle) {
    if (max_hops < 1) throw Error(ErrorCode::InvalidArgument, "max_hops must be >= 1");
    TripleSet current = equivalents(tr, graph, oracle);
    TripleSet result = current;
    std::vector<TripleSet> seen{current};
    for (std::size_t i = 1; i <= max_hops; ++i) {
        current = join(current, graph);
        if (current.empty()) break;
        bool repeated = false;
        for (const auto& s : seen) {
            if (s == current) { repeated = true; break; }
        }
        if (repeated) break;
        result.merge(current);
        seen.push_back(current);
    }
    return result;
}

inline ScopeClass classify_scope(const FactTriple& edit, std::string_view probe_query,
                                 std::string_view probe_answer, const TripleSet& graph,
                                 const EquivalenceOracle& oracle, std::size_t max_hops) {
    const auto sr = oracle.resolve_query(probe_query);
    if (!sr) throw Error(ErrorCode::UnresolvableProbe, "query not mapped: " + std::string(probe_query));
    const auto object = oracle.resolve_answer(probe_answer);
    if (!object) throw Error(ErrorCode::UnresolvableProbe, "answer not mapped: " + std::string(probe_answer));

    FactTriple probe = make_triple(sr->first, sr->second, *object);
    if (oracle.equivalent(probe, edit)) return ScopeClass::InScope;
    for (const auto& t : compute_ex(edit, graph, max_hops, oracle)) {
        if (oracle.equivalent(probe, t)) return ScopeClass::Extended;
    }
    return ScopeClass::Outside;
}

}  // namespace factcache
