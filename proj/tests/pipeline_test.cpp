#include <gtest/gtest.h>

#include <cmath>
#include <thread>

#include "factcache/pipeline.hpp"
#include "factcache/slow_source.hpp"
#include "factcache/synthetic.hpp"

using namespace factcache;

namespace {

using Prior = std::map<std::string, std::string>;

const RelationRef& rel(const std::string& id) { return builtin_relations().at(id); }

struct World {
    std::shared_ptr<MemorySlowSource> slow = std::make_shared<MemorySlowSource>();
    TieredFactStore store{slow, {std::nullopt, 1}};
    std::shared_ptr<AliasIndex> aliases = std::make_shared<AliasIndex>();
    Pipeline pipeline{store, aliases};

    void slow_fact(const FactTriple& t) {
        slow->put(t);
        aliases->add_triple(t);
    }
};

FactTriple us_gov(const std::string& id, const std::string& label) {
    return labelled_triple("US", "United States", rel("P6"), id, label);
}

FactTriple biden_spouse() { return labelled_triple("Biden", "Joe Biden", rel("P26"), "Jill", "Jill Biden"); }

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error";
    return ErrorCode::InvalidArgument;
}

}  // namespace

TEST(ExtractEntity, FigureExemplars) {
    AliasIndex index;
    index.add("Casino Royale", "Q151904");
    index.add("Casino", "Q133215");
    index.add("Seine-Maritime", "Q12834");
    index.add("Seine", "Q1471");
    EXPECT_EQ(extract_entity("Who is the cast member of Casino Royale?", ExtractorKind::AliasDictionary, index), "Q151904");
    EXPECT_EQ(extract_entity("What is the inspiration behind the name of Seine-Maritime?", ExtractorKind::AliasDictionary, index),
              "Q12834");
    EXPECT_EQ(code_of([&] { extract_entity("Who wrote Hamlet?", ExtractorKind::AliasDictionary, index); }),
              ErrorCode::NotFound);
    EXPECT_EQ(code_of([&] { extract_entity("   ", ExtractorKind::AliasDictionary, index); }), ErrorCode::InvalidArgument);
}

TEST(ExtractEntity, LongestThenLeftmostAtWordBoundaries) {
    AliasIndex index;
    index.add("Paris", "paris");
    index.add("Rome", "rome");
    index.add("York", "york");
    index.add("New York", "nyc");
    EXPECT_EQ(extract_entity("From Rome to Paris", ExtractorKind::AliasDictionary, index), "paris");
    EXPECT_EQ(extract_entity("From Paris to Rome!", ExtractorKind::AliasDictionary, index), "paris");
    EXPECT_EQ(extract_entity("Is new york bigger than York?", ExtractorKind::AliasDictionary, index), "nyc");
    EXPECT_EQ(code_of([&] { extract_entity("Parisian romeo", ExtractorKind::AliasDictionary, index); }), ErrorCode::NotFound);
    const auto all = index.disjoint_matches("New York or Rome");
    ASSERT_EQ(all.size(), 2u);
    EXPECT_EQ(all[0].entity, "nyc");
    EXPECT_EQ(all[1].entity, "rome");
}

TEST(ExtractEntity, PromptedThroughModel) {
    AliasIndex index;
    index.add("Casino Royale", "Q151904");
    MockModel model;
    EXPECT_EQ(extract_entity("Who is the cast member of Casino Royale?", ExtractorKind::ModelPrompted, index, &model),
              "Q151904");
    model.set_extraction("Who directed it?", "Nobody Known");
    EXPECT_EQ(code_of([&] { extract_entity("Who directed it?", ExtractorKind::ModelPrompted, index, &model); }),
              ErrorCode::NotFound);
}

TEST(Rank, HandComputedCosine) {
    // query tokens: who is the head of government in america (8 distinct)
    // "(US, head_of_gov, Biden)": us head of gov biden (5); shared: head, of
    // "(US, capital, Washington)": nothing shared
    const TripleSet candidates{make_triple("US", "head_of_gov", "Biden"), make_triple("US", "capital", "Washington")};
    const auto ranked = rank_triples("Who is the head of government in America?", candidates, 2, LexicalScorer{});
    ASSERT_EQ(ranked.triples.size(), 2u);
    EXPECT_EQ(ranked.triples[0].triple.relation, "head_of_gov");
    EXPECT_NEAR(ranked.triples[0].score, 2.0 / std::sqrt(8.0 * 5.0), 1e-12);
    EXPECT_EQ(ranked.triples[1].score, 0.0);
    EXPECT_EQ(rank_triples("Who is the head of government in America?", candidates, 1, LexicalScorer{}).triples.size(), 1u);
}

TEST(Rank, SingletonTiesAndEmpty) {
    const auto one = rank_triples("anything", TripleSet{make_triple("a", "r", "b")}, 1, LexicalScorer{});
    ASSERT_EQ(one.triples.size(), 1u);
    EXPECT_EQ(one.triples[0].score, 0.0);

    const TripleSet tied{make_triple("b", "x", "y"), make_triple("a", "x", "y")};
    const auto t = rank_triples("x y", tied, 2, LexicalScorer{});
    EXPECT_EQ(t.triples[0].score, t.triples[1].score);
    EXPECT_EQ(t.triples[0].triple.subject, "a");

    EXPECT_TRUE(rank_triples("q", {}, 3, LexicalScorer{}).triples.empty());
    EXPECT_EQ(code_of([] { rank_triples("q", {}, 0, LexicalScorer{}); }), ErrorCode::InvalidArgument);
}

TEST(Rank, ScoresNonIncreasingAndBounded) {
    std::mt19937_64 rng(8);
    const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "head", "of"};
    for (int trial = 0; trial < 100; ++trial) {
        TripleSet c;
        for (int i = 0; i < 10; ++i) {
            c.insert(make_triple(words[uniform_index(rng, 6)], words[uniform_index(rng, 6)], words[uniform_index(rng, 6)]));
        }
        const auto r = rank_triples("alpha head of gamma", c, 4, LexicalScorer{});
        EXPECT_LE(r.triples.size(), 4u);
        for (std::size_t i = 0; i < r.triples.size(); ++i) {
            EXPECT_GE(r.triples[i].score, 0.0);
            EXPECT_LE(r.triples[i].score, 1.0 + 1e-12);
            if (i) EXPECT_GE(r.triples[i - 1].score, r.triples[i].score);
        }
    }
}

TEST(Rank, EmbeddingScorerPlugsIn) {
    EmbeddingScorer scorer([](std::string_view s) {
        return std::vector<double>{s.find("capital") != std::string_view::npos ? 1.0 : 0.0, 1.0};
    });
    const TripleSet c{make_triple("US", "capital", "Washington"), make_triple("US", "head_of_gov", "Biden")};
    EXPECT_EQ(rank_triples("capital?", c, 1, scorer).triples[0].triple.relation, "capital");
}

TEST(Answer, CachedFactIsEchoed) {
    World w;
    w.slow_fact(labelled_triple("Q1", "Sioux Falls", rel("P6"), "Q2", "Paul Ten Haken"));
    MockModel model;
    EXPECT_EQ(w.pipeline.answer("Who is the current head of government for Sioux Falls?", TaskKind::QA, model).text,
              "Paul Ten Haken");
}

TEST(Answer, EmptyCacheFallsBackToPrior) {
    World w;
    MockModel model(Prior{{"Who is the current head of government for Sioux Falls?", "Mike Huether"}});
    const auto trace = w.pipeline.answer_traced("Who is the current head of government for Sioux Falls?", TaskKind::QA, model);
    EXPECT_TRUE(trace.entities.empty());
    EXPECT_TRUE(trace.prompt.evidence.empty());
    EXPECT_EQ(trace.answer.text, "Mike Huether");
}

TEST(Answer, EditBecomesVisible) {
    World w;
    w.aliases->add("America", "US");
    MockModel model(Prior{{"Who is the head of government in America?", "Obama"}});
    EXPECT_EQ(w.pipeline.answer("Who is the head of government in America?", TaskKind::QA, model).text, "Obama");
    w.pipeline.apply_edit(us_gov("Biden", "Biden"));
    EXPECT_EQ(w.pipeline.answer("Who is the head of government in America?", TaskKind::QA, model).text, "Biden");
    EXPECT_EQ(w.pipeline.answer("Who is the head of government in America?", TaskKind::QA, model, false).text, "Obama");
}

TEST(Answer, TraceCountsCacheAccess) {
    World w;
    w.slow_fact(us_gov("Biden", "Joe Biden"));
    MockModel model;
    const auto cold = w.pipeline.answer_traced("Who is the current head of government for United States?", TaskKind::QA, model);
    EXPECT_EQ(cold.cache_misses, 1u);
    const auto warm = w.pipeline.answer_traced("Who is the current head of government for United States?", TaskKind::QA, model);
    EXPECT_EQ(warm.cache_hits, 1u);
    EXPECT_EQ(warm.entities, std::vector<std::string>{"US"});
    EXPECT_GE(warm.latency.total().count(), 0);
}

TEST(Answer, MultipleEntitiesAreUnioned) {
    World w;
    w.slow_fact(us_gov("Biden", "Joe Biden"));
    w.slow_fact(labelled_triple("FR", "France", rel("P36"), "Paris", "Paris"));
    MockModel model;
    const auto trace = w.pipeline.answer_traced("United States or France: what is the capital?", TaskKind::QA, model);
    EXPECT_EQ(trace.entities.size(), 2u);
    EXPECT_TRUE(trace.retrieved.contains(make_triple("FR", "P36", "Paris")));
    EXPECT_EQ(trace.answer.text, "Paris");
}

TEST(Answer, FormatInvarianceOnDeskItems) {
    const auto dump = load_dump(std::string(FACTCACHE_SOURCE_DIR) + "/data/desk_dump.jsonl");
    World w;
    for (const auto& t : dump.triples) w.slow_fact(t);
    MockModel model;
    const auto items = build_dataset(dump.triples, builtin_relations(), 7);
    ASSERT_FALSE(items.empty());
    for (const auto& item : items) {
        const auto qa = w.pipeline.answer_traced(item.query_for(TaskKind::QA), TaskKind::QA, model).prompt.evidence;
        for (auto task : {TaskKind::Cloze, TaskKind::Completion}) {
            EXPECT_EQ(w.pipeline.answer_traced(item.query_for(task), task, model).prompt.evidence, qa)
                << item.query_for(task);
        }
    }
}

TEST(Answer, PromptIsDeterministic) {
    World w;
    w.slow_fact(us_gov("Biden", "Joe Biden"));
    w.slow_fact(labelled_triple("US", "United States", rel("P36"), "DC", "Washington"));
    MockModel model;
    const auto q = "What is the capital of United States?";
    const auto a = w.pipeline.answer_traced(q, TaskKind::QA, model).prompt.render();
    for (int i = 0; i < 5; ++i) EXPECT_EQ(w.pipeline.answer_traced(q, TaskKind::QA, model).prompt.render(), a);
}

TEST(Answer, RepeatedEditsStayVisible) {
    const auto suite = synthetic_suite(52, 13);
    for (int n : {1, 2, 5, 10}) {
        World w;
        MockModel model(suite.prior);
        for (const auto& item : suite.items) {
            for (int i = 1; i < n; ++i) {
                auto stale = item.triple;
                stale.object = item.triple.object + "_old" + std::to_string(i);
                stale.object_label = item.triple.object_label + " Old " + std::to_string(i);
                w.pipeline.apply_edit(stale);
            }
            w.pipeline.apply_edit(item.triple);
        }
        for (const auto& item : suite.items) {
            EXPECT_EQ(w.pipeline.answer(item.query_for(TaskKind::QA), TaskKind::QA, model).text, item.gold) << n;
        }
    }
}

TEST(Answer, ConcurrentCallersAgree) {
    World w;
    const auto suite = synthetic_suite(26, 2);
    for (const auto& item : suite.items) w.pipeline.apply_edit(item.triple);
    std::vector<std::thread> threads;
    std::atomic<int> wrong{0};
    for (int t = 0; t < 6; ++t) {
        threads.emplace_back([&] {
            MockModel model;
            for (const auto& item : suite.items) {
                if (w.pipeline.answer(item.query_for(TaskKind::QA), TaskKind::QA, model).text != item.gold) ++wrong;
            }
        });
    }
    for (auto& t : threads) t.join();
    EXPECT_EQ(wrong.load(), 0);
}

TEST(Answer, PromptedExtractorEndToEnd) {
    auto slow = std::make_shared<MemorySlowSource>();
    TieredFactStore store(slow);
    auto aliases = std::make_shared<AliasIndex>();
    const auto t = labelled_triple("Q1", "Sioux Falls", rel("P6"), "Q2", "Paul Ten Haken");
    slow->put(t);
    aliases->add_triple(t);
    Pipeline p(store, aliases, {1, ExtractorKind::ModelPrompted});
    MockModel model;
    EXPECT_EQ(p.answer("Who is the current head of government for Sioux Falls?", TaskKind::QA, model).text, "Paul Ten Haken");
}

TEST(MultiHop, UsChainBothModes) {
    World w;
    w.slow_fact(us_gov("Biden", "Joe Biden"));
    w.slow_fact(biden_spouse());
    const std::vector<FactTriple> chain{us_gov("Biden", "Joe Biden"), biden_spouse()};
    const auto item = build_multihop(chain, builtin_relations(), chain_kinds(chain, infer_entity_kinds(chain)));
    MockModel model;
    EXPECT_EQ(w.pipeline.answer_multihop(item, MultiHopMode::Decompose, model).text, "Jill Biden");
    EXPECT_EQ(w.pipeline.answer_multihop(item, MultiHopMode::Dialogue, model).text, "Jill Biden");
}

TEST(MultiHop, MissingSecondHop) {
    World w;
    w.slow_fact(us_gov("Biden", "Joe Biden"));
    const std::vector<FactTriple> chain{us_gov("Biden", "Joe Biden"), biden_spouse()};
    const auto item = build_multihop(chain, builtin_relations());
    MockModel model;
    for (auto mode : {MultiHopMode::Decompose, MultiHopMode::Dialogue}) {
        try {
            w.pipeline.answer_multihop(item, mode, model);
            FAIL();
        } catch (const HopFailed& e) {
            EXPECT_EQ(e.hop(), 2u) << to_string(mode);
        }
    }
}

TEST(MultiHop, SyntheticChainsAndRemovedHops) {
    const auto chains = synthetic_chains(2, 21);
    MockModel model;
    for (const auto& item : chains) {
        {
            World w;
            for (const auto& t : item.chain) w.pipeline.apply_edit(t);
            for (auto mode : {MultiHopMode::Decompose, MultiHopMode::Dialogue}) {
                EXPECT_EQ(w.pipeline.answer_multihop(item, mode, model).text, item.final_gold) << item.multihop_question();
            }
        }
        for (std::size_t drop = 0; drop < item.hops(); ++drop) {
            World w;
            for (std::size_t i = 0; i < item.hops(); ++i) {
                if (i != drop) w.pipeline.apply_edit(item.chain[i]);
            }
            for (auto mode : {MultiHopMode::Decompose, MultiHopMode::Dialogue}) {
                try {
                    w.pipeline.answer_multihop(item, mode, model);
                    ADD_FAILURE() << "answered without hop " << drop + 1;
                } catch (const HopFailed& e) {
                    EXPECT_EQ(e.hop(), drop + 1) << to_string(mode) << " " << item.multihop_question();
                }
            }
        }
    }
}

TEST(Pipeline, ConstructionGuards) {
    auto slow = std::make_shared<MemorySlowSource>();
    TieredFactStore store(slow);
    EXPECT_THROW(Pipeline(store, nullptr), Error);
    EXPECT_THROW(Pipeline(store, std::make_shared<AliasIndex>(), {0, ExtractorKind::AliasDictionary}), Error);
}
