#pragma once
// Benchmark items in the FAME JSON Lines layout: construction from triples
// and relation templates, multi-hop chains with dialogue turns, and
// validated loading/emission.

#include <algorithm>
#include <fstream>
#include <functional>
#include <tuple>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/text.hpp"

namespace factcache {

inline constexpr std::string_view kPlaceholder = "{}";
inline constexpr std::string_view kFactCheckPreamble = "Determine whether the proposition is true.\nProposition:";

inline std::string fill_template(std::string_view tmpl, std::string_view subject_label) {
    const auto n = text::count_occurrences(tmpl, kPlaceholder);
    if (n != 1) {
        throw Error(ErrorCode::BadTemplate,
                    "expected exactly one {} but found " + std::to_string(n) + " in: " + std::string(tmpl));
    }
    return text::replace_at(tmpl, tmpl.find(kPlaceholder), kPlaceholder.size(), subject_label);
}

// ---- relation templates -----------------------------------------------------
// Template files are JSON arrays of
// {"id", "label", "description", "templates": {"qa": [...], "completion": [...],
//  "cloze": [...], "choice": [...], "fact_check": [...], "multi_hop_qa": [...]}}.
// "choice" holds the question stem, "fact_check" the proposition prefix the
// object is appended to, "multi_hop_qa" a noun phrase ("the spouse of {}")
// used when nesting this relation inside a multi-hop question.

inline RelationRef relation_from_json(const nlohmann::json& j) {
    RelationRef r;
    r.id = j.at("id").get<std::string>();
    r.label = j.at("label").get<std::string>();
    r.description = j.value("description", "");
    for (const auto& [name, list] : j.at("templates").items()) {
        const auto kind = parse_task_kind(name);
        if (!kind) throw Error(ErrorCode::SchemaViolation, "unknown task kind in templates: " + name);
        r.task_templates[*kind] = list.get<std::vector<std::string>>();
    }
    r.validate();
    return r;
}

inline std::map<std::string, RelationRef> load_relation_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open template file: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded() || !doc.is_array()) throw Error(ErrorCode::ParseError, path + ": expected a JSON array");
    std::map<std::string, RelationRef> out;
    for (const auto& j : doc) {
        auto r = relation_from_json(j);
        out.emplace(r.id, std::move(r));
    }
    return out;
}

// ---- single-hop items -------------------------------------------------------

inline constexpr TaskKind kSingleHopTasks[] = {TaskKind::QA, TaskKind::Completion, TaskKind::Cloze,
                                               TaskKind::Choice, TaskKind::FactCheck};

struct BenchmarkItem {
    FactTriple triple;
    std::map<TaskKind, std::string> queries;
    std::string gold;
    std::vector<std::string> choice_options;  // options A, B, C in order
    bool fc_proposition_truth = true;
    std::string locality_subject;
    std::string locality_object;
    std::string locality_query;

    std::string gold_for(TaskKind task) const {
        switch (task) {
            case TaskKind::FactCheck: return fc_proposition_truth ? "True" : "False";
            case TaskKind::Locality: return locality_object;
            default: return gold;
        }
    }

    std::string query_for(TaskKind task) const {
        if (task == TaskKind::Locality) return locality_query;
        auto it = queries.find(task);
        if (it == queries.end()) throw Error(ErrorCode::UnknownTask, "item has no query for " + std::string(to_string(task)));
        return it->second;
    }

    // Letter of the correct CHOICE option, if options are present.
    std::optional<char> choice_letter() const {
        for (std::size_t i = 0; i < choice_options.size(); ++i) {
            if (choice_options[i] == gold) return static_cast<char>('A' + i);
        }
        return std::nullopt;
    }

    void validate() const {
        triple.validate();
        if (gold != triple.object_text()) {
            throw Error(ErrorCode::SchemaViolation, "gold must equal the object label: " + gold);
        }
        if (!choice_options.empty()) {
            const auto n = std::count(choice_options.begin(), choice_options.end(), gold);
            if (n != 1) throw Error(ErrorCode::SchemaViolation, "choice options must contain the gold exactly once");
        }
        if (!locality_subject.empty() && locality_subject == triple.subject_text()) {
            throw Error(ErrorCode::SchemaViolation, "locality subject must differ from the edited subject");
        }
    }

    friend bool operator==(const BenchmarkItem& a, const BenchmarkItem& b) {
        auto ids = [](const FactTriple& t) {
            return std::tuple(t.key(), t.object_is_literal, t.subject_text(), t.relation_text(), t.object_text());
        };
        return ids(a.triple) == ids(b.triple) && a.queries == b.queries && a.gold == b.gold &&
               a.choice_options == b.choice_options && a.fc_proposition_truth == b.fc_proposition_truth &&
               a.locality_subject == b.locality_subject && a.locality_object == b.locality_object &&
               a.locality_query == b.locality_query;
    }
};

struct BuildOptions {
    // Forces the gold CHOICE slot (0 = A); seeded when empty.
    std::optional<std::size_t> gold_position;
    // Forces the FACT_CHECK proposition truth; seeded coin when empty.
    std::optional<bool> fact_check_truth;
};

namespace detail {

inline const std::string& pick_template(const RelationRef& relation, TaskKind kind, std::mt19937_64& rng) {
    auto it = relation.task_templates.find(kind);
    if (it == relation.task_templates.end() || it->second.empty()) {
        throw Error(ErrorCode::BadTemplate,
                    "relation " + relation.id + " has no " + std::string(to_string(kind)) + " template");
    }
    return it->second[uniform_index(rng, it->second.size())];
}

inline std::string choice_query(std::string_view stem, const std::vector<std::string>& options) {
    std::string q(stem);
    q += "\n";
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (i) q += " ";
        q += static_cast<char>('A' + i);
        q += ":";
        q += options[i];
    }
    return q;
}

// Splits "stem\nA:x B:y C:z" into its three options.
inline std::vector<std::string> parse_choice_options(std::string_view query) {
    const auto nl = query.rfind('\n');
    if (nl == std::string_view::npos) throw Error(ErrorCode::SchemaViolation, "choose_query has no option line");
    std::string_view line = query.substr(nl + 1);
    if (line.substr(0, 2) != "A:") throw Error(ErrorCode::SchemaViolation, "choose_query options must start with A:");
    const auto b = line.find(" B:", 2);
    const auto c = b == std::string_view::npos ? b : line.find(" C:", b + 3);
    if (c == std::string_view::npos) throw Error(ErrorCode::SchemaViolation, "choose_query needs options A, B and C");
    return {std::string(line.substr(2, b - 2)), std::string(line.substr(b + 3, c - b - 3)),
            std::string(line.substr(c + 3))};
}

}  // namespace detail

inline BenchmarkItem build_item(const FactTriple& triple, const RelationRef& relation,
                                const std::pair<std::string, std::string>& distractors, const FactTriple& locality,
                                std::mt19937_64& rng, const BuildOptions& options = {}) {
    const std::string& gold = triple.object_text();
    for (const auto& d : {distractors.first, distractors.second}) {
        // The fact-check reader recovers truth from the proposition's ending,
        // so a distractor ending in " <gold>" is as ambiguous as the gold itself.
        const bool ends_with_gold = d.size() > gold.size() && d.compare(d.size() - gold.size(), gold.size(), gold) == 0 &&
                                    d[d.size() - gold.size() - 1] == ' ';
        if (d == gold || ends_with_gold || d.empty()) {
            throw Error(ErrorCode::DistractorCollision, "distractor collides with gold: " + d);
        }
    }
    if (distractors.first == distractors.second) {
        throw Error(ErrorCode::DistractorCollision, "distractors must differ: " + distractors.first);
    }
    if (locality.relation != triple.relation || locality.subject == triple.subject) {
        throw Error(ErrorCode::InvalidArgument, "locality probe must share the relation but not the subject");
    }

    const std::string& subject = triple.subject_text();
    BenchmarkItem item;
    item.triple = triple;
    item.gold = gold;

    const auto& qa = detail::pick_template(relation, TaskKind::QA, rng);
    item.queries[TaskKind::QA] = fill_template(qa, subject);
    item.queries[TaskKind::Completion] = fill_template(detail::pick_template(relation, TaskKind::Completion, rng), subject);
    item.queries[TaskKind::Cloze] = fill_template(detail::pick_template(relation, TaskKind::Cloze, rng), subject);

    const auto& stem = detail::pick_template(relation, TaskKind::Choice, rng);
    const std::size_t gold_slot = options.gold_position.value_or(uniform_index(rng, 3));
    if (gold_slot > 2) throw Error(ErrorCode::InvalidArgument, "gold position must be 0..2");
    std::vector<std::string> rest{distractors.first, distractors.second};
    item.choice_options = rest;
    item.choice_options.insert(item.choice_options.begin() + static_cast<std::ptrdiff_t>(gold_slot), gold);
    item.queries[TaskKind::Choice] = detail::choice_query(fill_template(stem, subject), item.choice_options);

    const auto& proposition = detail::pick_template(relation, TaskKind::FactCheck, rng);
    item.fc_proposition_truth = options.fact_check_truth.value_or(uniform_index(rng, 2) == 0);
    const std::string shown = item.fc_proposition_truth ? gold : rest[uniform_index(rng, 2)];
    item.queries[TaskKind::FactCheck] =
        std::string(kFactCheckPreamble) + fill_template(proposition, subject) + " " + shown + ".";

    item.locality_subject = locality.subject_text();
    item.locality_object = locality.object_text();
    item.locality_query = fill_template(qa, item.locality_subject);
    item.validate();
    return item;
}

// ---- multi-hop items --------------------------------------------------------

enum class EntityKind { NonPerson, Person, MalePerson, FemalePerson };

inline std::string_view possessive_pronoun(EntityKind k) {
    switch (k) {
        case EntityKind::MalePerson: return "his";
        case EntityKind::FemalePerson: return "her";
        case EntityKind::Person: return "their";
        case EntityKind::NonPerson: return "its";
    }
    return "its";
}

inline std::string_view object_pronoun(EntityKind k) {
    switch (k) {
        case EntityKind::MalePerson: return "him";
        case EntityKind::FemalePerson: return "her";
        case EntityKind::Person: return "them";
        case EntityKind::NonPerson: return "it";
    }
    return "it";
}

inline std::optional<EntityKind> parse_entity_kind(std::string_view s) {
    if (s == "non_person") return EntityKind::NonPerson;
    if (s == "person") return EntityKind::Person;
    if (s == "male") return EntityKind::MalePerson;
    if (s == "female") return EntityKind::FemalePerson;
    return std::nullopt;
}

inline std::string_view to_string(EntityKind k) {
    switch (k) {
        case EntityKind::NonPerson: return "non_person";
        case EntityKind::Person: return "person";
        case EntityKind::MalePerson: return "male";
        case EntityKind::FemalePerson: return "female";
    }
    return "non_person";
}

struct DialogueTurn {
    std::string text;
    std::string pronoun;      // empty for the first turn
    bool possessive = false;  // pronoun stands for "<previous answer>'s"
    std::size_t pronoun_pos = std::string::npos;

    // The turn with the pronoun resolved to the previous answer.
    std::string resolve(std::string_view previous_answer) const {
        if (pronoun.empty() || pronoun_pos == std::string::npos) return text;
        const std::string replacement =
            possessive ? std::string(previous_answer) + "'s" : std::string(previous_answer);
        return text::replace_at(text, pronoun_pos, pronoun.size(), replacement);
    }
};

struct MultiHopItem {
    std::vector<FactTriple> chain;
    std::vector<std::string> hop_queries;
    std::string multihop_query;  // template; "{}" stands for the first subject
    std::vector<DialogueTurn> dialogue_turns;
    std::string final_gold;
    std::vector<EntityKind> intermediate_kinds;  // one per o_1..o_{n-1}

    std::size_t hops() const { return chain.size(); }
    std::string multihop_question() const { return fill_template(multihop_query, chain.front().subject_text()); }

    void validate() const {
        if (chain.size() < 2 || chain.size() > 5) {
            throw Error(ErrorCode::SchemaViolation, "multi-hop chain length must be 2..5");
        }
        for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
            if (chain[i].object_is_literal || chain[i].object != chain[i + 1].subject) {
                throw Error(ErrorCode::BrokenChain, "hop " + std::to_string(i + 1) + " object is not hop " +
                                                        std::to_string(i + 2) + " subject");
            }
        }
        if (hop_queries.size() != chain.size()) throw Error(ErrorCode::SchemaViolation, "one QA query per hop required");
        if (final_gold != chain.back().object_text()) {
            throw Error(ErrorCode::SchemaViolation, "final gold must equal the last object");
        }
        if (text::count_occurrences(multihop_query, kPlaceholder) != 1) {
            throw Error(ErrorCode::SchemaViolation, "MultihopQA_query must contain exactly one {}");
        }
    }

    friend bool operator==(const MultiHopItem& a, const MultiHopItem& b) {
        if (a.chain.size() != b.chain.size()) return false;
        for (std::size_t i = 0; i < a.chain.size(); ++i) {
            const auto& x = a.chain[i];
            const auto& y = b.chain[i];
            if (x.key() != y.key() || x.subject_text() != y.subject_text() || x.relation_text() != y.relation_text() ||
                x.object_text() != y.object_text()) {
                return false;
            }
        }
        auto turns = [](const MultiHopItem& m) {
            std::vector<std::tuple<std::string, std::string, bool>> out;
            for (const auto& t : m.dialogue_turns) out.emplace_back(t.text, t.pronoun, t.possessive);
            return out;
        };
        return a.hop_queries == b.hop_queries && a.multihop_query == b.multihop_query && turns(a) == turns(b) &&
               a.final_gold == b.final_gold && a.intermediate_kinds == b.intermediate_kinds;
    }
};

// Turn 1 is the first hop query; later turns replace the previous hop's
// object label with a pronoun ("Biden's spouse" -> "his spouse").
inline std::vector<DialogueTurn> derive_dialogue(const std::vector<FactTriple>& chain,
                                                 const std::vector<std::string>& hop_queries,
                                                 const std::vector<EntityKind>& kinds) {
    std::vector<DialogueTurn> turns;
    for (std::size_t i = 0; i < hop_queries.size(); ++i) {
        DialogueTurn turn{hop_queries[i], {}, false, std::string::npos};
        if (i > 0) {
            const std::string& label = chain[i - 1].object_text();
            const EntityKind kind = i - 1 < kinds.size() ? kinds[i - 1] : EntityKind::NonPerson;
            const auto pos = text::find_whole_word(turn.text, label);
            if (pos != std::string::npos) {
                const bool possessive = turn.text.compare(pos + label.size(), 2, "'s") == 0;
                turn.possessive = possessive;
                turn.pronoun = std::string(possessive ? possessive_pronoun(kind) : object_pronoun(kind));
                turn.pronoun_pos = pos;
                turn.text = text::replace_at(turn.text, pos, label.size() + (possessive ? 2 : 0), turn.pronoun);
            }
        }
        turns.push_back(std::move(turn));
    }
    return turns;
}

// Personhood from relation typing: subjects of person-only relations and
// objects of relations whose values are people. Gender is never inferred,
// so people get "their"/"them".
inline std::map<std::string, EntityKind> infer_entity_kinds(const std::vector<FactTriple>& triples) {
    static const std::set<std::string> person_subject{"P19", "P22", "P25", "P26", "P40"};
    static const std::set<std::string> person_object{"P6", "P22", "P25", "P26", "P40", "P112"};
    std::map<std::string, EntityKind> kinds;
    for (const auto& t : triples) {
        if (person_subject.count(t.relation)) kinds[t.subject] = EntityKind::Person;
        if (!t.object_is_literal && person_object.count(t.relation)) kinds[t.object] = EntityKind::Person;
    }
    return kinds;
}

inline std::vector<EntityKind> chain_kinds(const std::vector<FactTriple>& chain,
                                           const std::map<std::string, EntityKind>& kinds) {
    std::vector<EntityKind> out;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        auto it = kinds.find(chain[i].object);
        out.push_back(it == kinds.end() ? EntityKind::NonPerson : it->second);
    }
    return out;
}

inline MultiHopItem build_multihop(const std::vector<FactTriple>& chain,
                                   const std::map<std::string, RelationRef>& relations,
                                   std::vector<EntityKind> intermediate_kinds = {}) {
    if (chain.size() < 2 || chain.size() > 5) throw Error(ErrorCode::InvalidArgument, "chain length must be 2..5");
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        if (chain[i].object_is_literal || chain[i].object != chain[i + 1].subject) {
            throw Error(ErrorCode::BrokenChain,
                        "object of hop " + std::to_string(i + 1) + " is not the subject of hop " + std::to_string(i + 2));
        }
    }
    auto relation_for = [&](const FactTriple& t) -> const RelationRef& {
        auto it = relations.find(t.relation);
        if (it == relations.end()) throw Error(ErrorCode::BadTemplate, "no templates for relation " + t.relation);
        return it->second;
    };

    MultiHopItem item;
    item.chain = chain;
    intermediate_kinds.resize(chain.size() - 1, EntityKind::NonPerson);
    item.intermediate_kinds = std::move(intermediate_kinds);

    std::string nested(kPlaceholder);
    for (std::size_t i = 0; i < chain.size(); ++i) {
        const RelationRef& rel = relation_for(chain[i]);
        const std::string& qa = rel.task_templates.at(TaskKind::QA).front();
        item.hop_queries.push_back(fill_template(qa, chain[i].subject_text()));
        if (i + 1 < chain.size()) {
            auto np = rel.task_templates.find(TaskKind::MultiHopQA);
            const std::string phrase = np != rel.task_templates.end() && !np->second.empty()
                                           ? np->second.front()
                                           : "the " + rel.label + " of {}";
            nested = fill_template(phrase, nested);
        } else {
            item.multihop_query = fill_template(qa, nested);
        }
    }
    item.final_gold = chain.back().object_text();
    item.dialogue_turns = derive_dialogue(item.chain, item.hop_queries, item.intermediate_kinds);
    item.validate();
    return item;
}

// ---- JSON Lines emission and loading ---------------------------------------

inline nlohmann::ordered_json to_json(const BenchmarkItem& item) {
    nlohmann::ordered_json j;
    const auto& t = item.triple;
    j["subject_label"] = t.subject_text();
    j["relation_label"] = t.relation_text();
    j["object_label"] = t.object_text();
    j["localitysubjectLabel"] = item.locality_subject;
    j["localityobjectLabel"] = item.locality_object;
    j["qa_query"] = item.query_for(TaskKind::QA);
    j["fill_query"] = item.query_for(TaskKind::Cloze);
    j["completion_query"] = item.query_for(TaskKind::Completion);
    j["choose_query"] = item.query_for(TaskKind::Choice);
    j["FC_query"] = item.query_for(TaskKind::FactCheck);
    j["locality_query"] = item.locality_query;
    // Ids are only written when they differ from the labels.
    if (t.subject != t.subject_text()) j["subject_id"] = t.subject;
    if (t.relation != t.relation_text()) j["relation_id"] = t.relation;
    if (t.object_is_literal) {
        j["object_id"] = nullptr;
    } else if (t.object != t.object_text()) {
        j["object_id"] = t.object;
    }
    return j;
}

inline nlohmann::ordered_json to_json(const MultiHopItem& item) {
    nlohmann::ordered_json j;
    const auto n = item.chain.size();
    j["s1_label"] = item.chain.front().subject_text();
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = std::to_string(i + 1);
        j["relation_label_" + k] = item.chain[i].relation_text();
        j["o" + k + "_label"] = item.chain[i].object_text();
    }
    for (std::size_t i = 0; i < n; ++i) j["qa_query_" + std::to_string(i + 1)] = item.hop_queries[i];
    j["MultihopQA_query"] = item.multihop_query;
    if (item.chain.front().subject != item.chain.front().subject_text()) j["s1_id"] = item.chain.front().subject;
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = std::to_string(i + 1);
        const auto& t = item.chain[i];
        if (t.relation != t.relation_text()) j["relation_id_" + k] = t.relation;
        if (t.object != t.object_text()) j["o" + k + "_id"] = t.object;
        if (i < item.intermediate_kinds.size() && item.intermediate_kinds[i] != EntityKind::NonPerson) {
            j["o" + k + "_type"] = std::string(to_string(item.intermediate_kinds[i]));
        }
    }
    return j;
}

using AnyItem = std::variant<BenchmarkItem, MultiHopItem>;

inline std::string emit_line(const AnyItem& item) {
    return std::visit([](const auto& it) { return to_json(it).dump(); }, item);
}

namespace detail {

inline std::string required_string(const nlohmann::json& j, const std::string& key) {
    auto it = j.find(key);
    if (it == j.end()) throw Error(ErrorCode::SchemaViolation, "missing field \"" + key + "\"");
    if (!it->is_string()) throw Error(ErrorCode::SchemaViolation, "field \"" + key + "\" must be a string");
    return it->get<std::string>();
}

inline std::string optional_id(const nlohmann::json& j, const std::string& key, const std::string& fallback) {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return fallback;
    if (!it->is_string()) throw Error(ErrorCode::SchemaViolation, "field \"" + key + "\" must be a string");
    return it->get<std::string>();
}

}  // namespace detail

inline BenchmarkItem benchmark_item_from_json(const nlohmann::json& j) {
    using detail::required_string;
    BenchmarkItem item;
    auto& t = item.triple;
    t.subject_label = required_string(j, "subject_label");
    t.relation_label = required_string(j, "relation_label");
    t.object_label = required_string(j, "object_label");
    t.subject = detail::optional_id(j, "subject_id", t.subject_label);
    t.relation = detail::optional_id(j, "relation_id", t.relation_label);
    t.object_is_literal = j.contains("object_id") && j["object_id"].is_null();
    t.object = detail::optional_id(j, "object_id", t.object_label);
    item.gold = t.object_label;
    item.locality_subject = required_string(j, "localitysubjectLabel");
    item.locality_object = required_string(j, "localityobjectLabel");
    item.queries[TaskKind::QA] = required_string(j, "qa_query");
    item.queries[TaskKind::Cloze] = required_string(j, "fill_query");
    item.queries[TaskKind::Completion] = required_string(j, "completion_query");
    item.queries[TaskKind::Choice] = required_string(j, "choose_query");
    item.queries[TaskKind::FactCheck] = required_string(j, "FC_query");
    item.locality_query = required_string(j, "locality_query");
    item.choice_options = detail::parse_choice_options(item.queries[TaskKind::Choice]);
    const std::string& fc = item.queries[TaskKind::FactCheck];
    const std::string true_suffix = " " + item.gold + ".";
    item.fc_proposition_truth =
        fc.size() >= true_suffix.size() && fc.compare(fc.size() - true_suffix.size(), true_suffix.size(), true_suffix) == 0;
    item.validate();
    return item;
}

inline MultiHopItem multihop_item_from_json(const nlohmann::json& j) {
    using detail::required_string;
    std::size_t n = 0;
    while (j.contains("relation_label_" + std::to_string(n + 1))) ++n;
    if (n < 2 || n > 5) throw Error(ErrorCode::SchemaViolation, "multi-hop record needs 2..5 relation_label_i fields");

    MultiHopItem item;
    std::string subject_label = required_string(j, "s1_label");
    std::string subject = detail::optional_id(j, "s1_id", subject_label);
    for (std::size_t i = 0; i < n; ++i) {
        const auto k = std::to_string(i + 1);
        FactTriple t;
        t.subject = subject;
        t.subject_label = subject_label;
        t.relation_label = required_string(j, "relation_label_" + k);
        t.relation = detail::optional_id(j, "relation_id_" + k, t.relation_label);
        t.object_label = required_string(j, "o" + k + "_label");
        t.object = detail::optional_id(j, "o" + k + "_id", t.object_label);
        subject = t.object;
        subject_label = t.object_label;
        item.chain.push_back(std::move(t));
        item.hop_queries.push_back(required_string(j, "qa_query_" + k));
        if (i + 1 < n) {
            auto kind = EntityKind::NonPerson;
            if (auto it = j.find("o" + k + "_type"); it != j.end()) {
                auto parsed = it->is_string() ? parse_entity_kind(it->get<std::string>()) : std::nullopt;
                if (!parsed) throw Error(ErrorCode::SchemaViolation, "bad o" + k + "_type");
                kind = *parsed;
            }
            item.intermediate_kinds.push_back(kind);
        }
    }
    item.multihop_query = required_string(j, "MultihopQA_query");
    item.final_gold = item.chain.back().object_text();
    item.dialogue_turns = derive_dialogue(item.chain, item.hop_queries, item.intermediate_kinds);
    item.validate();
    return item;
}

struct LoadIssue {
    std::size_t line;
    ErrorCode code;
    std::string message;
};

struct LoadResult {
    std::vector<BenchmarkItem> single_hop;
    std::vector<MultiHopItem> multi_hop;
    std::vector<LoadIssue> issues;

    std::size_t size() const { return single_hop.size() + multi_hop.size(); }
};

// Strict mode throws on the first bad record; lenient mode skips it and
// records the line in `issues`.
inline LoadResult parse_benchmark(std::istream& in, bool strict, const std::string& name = "<benchmark>") {
    LoadResult result;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        try {
            nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
            if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::ParseError, "not a JSON object");
            if (j.contains("s1_label")) {
                result.multi_hop.push_back(multihop_item_from_json(j));
            } else {
                result.single_hop.push_back(benchmark_item_from_json(j));
            }
        } catch (const Error& e) {
            const auto code = e.code() == ErrorCode::ParseError ? ErrorCode::ParseError : ErrorCode::SchemaViolation;
            if (strict) throw Error(code, name + ":" + std::to_string(line_no) + ": " + e.what());
            result.issues.push_back({line_no, code, e.what()});
        }
    }
    return result;
}

inline LoadResult load_benchmark(const std::string& path, bool strict = true) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open benchmark file: " + path);
    return parse_benchmark(in, strict, path);
}

inline void write_benchmark(std::ostream& out, const std::vector<BenchmarkItem>& single,
                            const std::vector<MultiHopItem>& multi = {}) {
    for (const auto& item : single) out << to_json(item).dump() << '\n';
    for (const auto& item : multi) out << to_json(item).dump() << '\n';
}

// ---- dataset generation -----------------------------------------------------

// One item per triple whose relation has templates and at least two other
// distinct objects and one other subject under the same relation.
inline std::vector<BenchmarkItem> build_dataset(const std::vector<FactTriple>& triples,
                                                const std::map<std::string, RelationRef>& relations,
                                                std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::map<std::string, std::vector<const FactTriple*>> by_relation;
    for (const auto& t : triples) {
        if (relations.count(t.relation)) by_relation[t.relation].push_back(&t);
    }
    std::vector<BenchmarkItem> out;
    for (const auto& t : triples) {
        auto rel = relations.find(t.relation);
        if (rel == relations.end()) continue;
        const auto& peers = by_relation[t.relation];
        std::vector<std::string> objects;
        std::vector<const FactTriple*> localities;
        std::set<std::string> seen{t.object_text()};
        for (const FactTriple* p : peers) {
            const auto& o = p->object_text();
            const bool suffix = o.size() > t.object_text().size() &&
                                o.compare(o.size() - t.object_text().size(), t.object_text().size(), t.object_text()) == 0;
            if (!suffix && seen.insert(o).second) objects.push_back(o);
            if (p->subject != t.subject && p->subject_text() != t.subject_text()) localities.push_back(p);
        }
        if (objects.size() < 2 || localities.empty()) continue;
        const auto i = uniform_index(rng, objects.size());
        auto j = uniform_index(rng, objects.size() - 1);
        if (j >= i) ++j;
        const FactTriple& loc = *localities[uniform_index(rng, localities.size())];
        out.push_back(build_item(t, rel->second, {objects[i], objects[j]}, loc, rng));
    }
    return out;
}

// Chains of exactly `hops` triples following object -> subject links, in
// deterministic order, at most `limit` of them.
inline std::vector<std::vector<FactTriple>> find_chains(const std::vector<FactTriple>& triples, std::size_t hops,
                                                        std::size_t limit) {
    TripleSet graph;
    for (const auto& t : triples) graph.insert(t);
    std::vector<std::vector<FactTriple>> out;
    std::vector<FactTriple> path;
    std::function<void(const FactTriple&)> extend = [&](const FactTriple& t) {
        if (out.size() >= limit) return;
        path.push_back(t);
        if (path.size() == hops) {
            out.push_back(path);
        } else if (!t.object_is_literal) {
            for (const FactTriple* next : graph.by_subject(t.object)) {
                const bool revisits = std::any_of(path.begin(), path.end(),
                                                  [&](const FactTriple& p) { return p.subject == next->subject; });
                if (!revisits) extend(*next);
            }
        }
        path.pop_back();
    };
    for (const auto& t : graph) extend(t);
    return out;
}

}  // namespace factcache
