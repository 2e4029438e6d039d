#pragma once
// Curated relation templates and seeded synthetic benchmarks for the
// scenario drivers and tests.

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "factcache/dataset.hpp"
#include "factcache/knowledge_model.hpp"

namespace factcache {

namespace detail {

inline RelationRef make_relation(std::string id, std::string label, std::string description, std::string qa,
                                 std::string completion, std::string cloze, std::string choice,
                                 std::string fact_check, std::string noun_phrase) {
    RelationRef r;
    r.id = std::move(id);
    r.label = std::move(label);
    r.description = std::move(description);
    r.task_templates[TaskKind::QA] = {std::move(qa)};
    r.task_templates[TaskKind::Completion] = {std::move(completion)};
    r.task_templates[TaskKind::Cloze] = {std::move(cloze)};
    r.task_templates[TaskKind::Choice] = {std::move(choice)};
    r.task_templates[TaskKind::FactCheck] = {std::move(fact_check)};
    r.task_templates[TaskKind::MultiHopQA] = {std::move(noun_phrase)};
    r.validate();
    return r;
}

}  // namespace detail

// Desk-scale template set, keyed by Wikidata property id.
inline const std::map<std::string, RelationRef>& builtin_relations() {
    static const std::map<std::string, RelationRef> relations = [] {
        using detail::make_relation;
        std::vector<RelationRef> list = {
            make_relation("P6", "head of government", "head of the executive power of this town, city, country or region",
                          "Who is the current head of government for {}?", "The head of government for {} is",
                          "() is the head of government in {}.", "Who holds the position of head of government in {}?",
                          "The head of government for {} is", "the head of government of {}"),
            make_relation("P26", "spouse", "the subject has the object as their spouse", "Who is {}'s spouse?",
                          "The spouse of {} is", "() is the spouse of {}.", "Who is married to {} as spouse?",
                          "The spouse of {} is", "the spouse of {}"),
            make_relation("P36", "capital", "seat of government of a country, province or state",
                          "What is the capital of {}?", "The capital of {} is", "() is the capital of {}.",
                          "Which city is the capital of {}?", "The capital of {} is", "the capital of {}"),
            make_relation("P17", "country", "sovereign state that this item is in", "Which country is {} in?",
                          "The country of {} is", "() is the country of {}.", "In which country is {}?",
                          "The country of {} is", "the country of {}"),
            make_relation("P38", "currency", "currency used by the item", "What is the currency of {}?",
                          "The currency of {} is", "() is the currency of {}.", "Which currency is used in {}?",
                          "The currency of {} is", "the currency of {}"),
            make_relation("P131", "located in the administrative territorial entity",
                          "the item is located on the territory of the following administrative entity",
                          "In which administrative territorial entity is {} located?",
                          "The administrative territorial entity {} is located in is",
                          "{} is located in the administrative territorial entity ().",
                          "Which administrative territorial entity is {} located in?",
                          "The administrative territorial entity {} is located in is",
                          "the administrative territorial entity {} is located in"),
            make_relation("P1830", "owner of", "entities owned by the subject", "What entities is {} the owner of?",
                          "{} is the owner of", "{} is the owner of ().", "Which entity is {} the owner of?",
                          "{} is the owner of", "the entities {} owns"),
            make_relation("P19", "place of birth", "most specific known birth location of a person",
                          "What is the place of birth of {}?", "The place of birth of {} is",
                          "() is the place of birth of {}.", "Where was the place of birth of {}?",
                          "The place of birth of {} is", "the place of birth of {}"),
            make_relation("P22", "father", "male parent of the subject", "Who is the father of {}?",
                          "The father of {} is", "() is the father of {}.", "Who is {}'s father?",
                          "The father of {} is", "the father of {}"),
            make_relation("P25", "mother", "female parent of the subject", "Who is the mother of {}?",
                          "The mother of {} is", "() is the mother of {}.", "Who is {}'s mother?",
                          "The mother of {} is", "the mother of {}"),
            make_relation("P40", "child", "subject has object as child", "Who is the child of {}?",
                          "The child of {} is", "() is the child of {}.", "Who is {}'s child?",
                          "The child of {} is", "the child of {}"),
            make_relation("P159", "headquarters location", "city where an organization's headquarters is",
                          "Where is the headquarters location of {}?", "The headquarters location of {} is",
                          "() is the headquarters location of {}.", "Which city is the headquarters location of {}?",
                          "The headquarters location of {} is", "the headquarters location of {}"),
            make_relation("P112", "founded by", "founder or co-founder of this organization",
                          "Who was {} founded by?", "{} was founded by", "{} was founded by ().",
                          "Who founded {}, as in founded by?", "{} was founded by", "the founder of {}"),
        };
        std::map<std::string, RelationRef> out;
        for (auto& r : list) out.emplace(r.id, std::move(r));
        return out;
    }();
    return relations;
}

inline nlohmann::ordered_json to_json(const RelationRef& r) {
    nlohmann::ordered_json j;
    j["id"] = r.id;
    j["label"] = r.label;
    j["description"] = r.description;
    nlohmann::ordered_json templates = nlohmann::ordered_json::object();
    for (const auto& [kind, list] : r.task_templates) templates[std::string(to_string(kind))] = list;
    j["templates"] = templates;
    return j;
}

inline FactTriple labelled_triple(std::string subject, std::string subject_label, const RelationRef& relation,
                                  std::string object, std::string object_label) {
    FactTriple t;
    t.subject = std::move(subject);
    t.subject_label = std::move(subject_label);
    t.relation = relation.id;
    t.relation_label = relation.label;
    t.object = std::move(object);
    t.object_label = std::move(object_label);
    t.source = Source::Synthetic;
    return t;
}

struct SyntheticSuite {
    std::vector<BenchmarkItem> items;
    // Prior answers of the unedited model: locality queries map to their
    // true objects, a few edited queries to stale objects.
    std::map<std::string, std::string> prior;
};

// `n` single-hop items over synthetic entities. Locality probes use their
// own subjects ("Locale i") that no edit touches.
inline SyntheticSuite synthetic_suite(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& rels = builtin_relations();
    std::vector<const RelationRef*> relations;
    for (const auto& [id, r] : rels) relations.push_back(&r);

    SyntheticSuite suite;
    for (std::size_t i = 0; i < n; ++i) {
        const RelationRef& rel = *relations[i % relations.size()];
        const auto num = std::to_string(i);
        FactTriple fact = labelled_triple("E" + num, "Entity " + num, rel, "V" + num, "Value " + num);
        FactTriple locality = labelled_triple("L" + num, "Locale " + num, rel, "W" + num, "Landmark " + num);
        const std::string d1 = "Value " + std::to_string(n + 2 * i);
        const std::string d2 = "Value " + std::to_string(n + 2 * i + 1);
        BenchmarkItem item = build_item(fact, rel, {d1, d2}, locality, rng);
        suite.prior[item.locality_query] = item.locality_object;
        if (i % 4 == 0) suite.prior[item.query_for(TaskKind::QA)] = "Stale " + num;
        suite.items.push_back(std::move(item));
    }
    return suite;
}

// `per_length` chains for each length in 2..5 over distinct synthetic nodes.
inline std::vector<MultiHopItem> synthetic_chains(std::size_t per_length, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    const auto& rels = builtin_relations();
    std::vector<const RelationRef*> relations;
    for (const auto& [id, r] : rels) relations.push_back(&r);

    std::vector<MultiHopItem> out;
    for (std::size_t len = 2; len <= 5; ++len) {
        for (std::size_t c = 0; c < per_length; ++c) {
            std::vector<FactTriple> chain;
            const std::string prefix = "C" + std::to_string(len) + "x" + std::to_string(c) + "n";
            const std::string label = "Node " + std::to_string(len) + " " + std::to_string(c) + " Stop ";
            for (std::size_t h = 0; h < len; ++h) {
                const RelationRef& rel = *relations[uniform_index(rng, relations.size())];
                chain.push_back(labelled_triple(prefix + std::to_string(h), label + std::to_string(h), rel,
                                                prefix + std::to_string(h + 1), label + std::to_string(h + 1)));
            }
            out.push_back(build_multihop(chain, rels));
        }
    }
    return out;
}

}  // namespace factcache
