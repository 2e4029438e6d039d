#include <gtest/gtest.h>

#include <cstdlib>
#include <numeric>

#include "factcache/model_client.hpp"
#include "factcache/synthetic.hpp"

using namespace factcache;

namespace {

using Prior = std::map<std::string, std::string>;

const RelationRef& rel(const std::string& id) { return builtin_relations().at(id); }

FactTriple sioux() { return labelled_triple("Q1", "Sioux Falls", rel("P6"), "Q2", "Paul Ten Haken"); }

double total(const Distribution& d) {
    return std::accumulate(d.begin(), d.end(), 0.0, [](double acc, const auto& kv) { return acc + kv.second; });
}

struct HttpStub {
    std::shared_ptr<http::FixtureTransport> transport = std::make_shared<http::FixtureTransport>();
    std::vector<std::chrono::milliseconds> sleeps;

    HttpCompletionModel model(HttpModelOptions opts = {}) {
        if (opts.endpoint.empty()) opts.endpoint = "http://model.test/v1/complete";
        HttpCompletionModel m(opts, transport);
        m.set_sleep([this](std::chrono::milliseconds d) { sleeps.push_back(d); });
        return m;
    }

    void reply(const std::string& prompt, int status, const std::string& body, int max_tokens = 32) {
        http::Request req;
        req.method = "POST";
        req.url = "http://model.test/v1/complete";
        req.body = nlohmann::json{{"prompt", prompt}, {"max_tokens", max_tokens}}.dump();
        transport->add(req, {status, body, {}});
    }
};

}  // namespace

TEST(Mock, EchoesMatchingEvidence) {
    MockModel m;
    const auto a = m.generate(assemble_prompt(TaskKind::QA, {sioux()}, "Who is the current head of government for Sioux Falls?"));
    EXPECT_EQ(a.text, "Paul Ten Haken");
}

TEST(Mock, IgnoresEvidenceWithoutRelationOverlap) {
    MockModel m(Prior{{"What is the capital of Sioux Falls?", "Pierre"}});
    EXPECT_EQ(m.generate(assemble_prompt(TaskKind::QA, {sioux()}, "What is the capital of Sioux Falls?")).text, "Pierre");
    EXPECT_EQ(m.generate(assemble_prompt(TaskKind::QA, {sioux()}, "Who is the mayor?")).text, "unknown");
}

TEST(Mock, FirstOverlappingTripleWins) {
    MockModel m;
    auto capital = labelled_triple("Q1", "Sioux Falls", rel("P36"), "Q9", "Nowhere");
    const auto a = m.generate(assemble_prompt(TaskKind::QA, {capital, sioux()}, "The head of government for Sioux Falls is"));
    EXPECT_EQ(a.text, "Paul Ten Haken");
}

TEST(Mock, PriorTableWithoutEvidence) {
    MockModel m(Prior{{"Who is the head of government for United States?", "Obama"}});
    EXPECT_EQ(m.generate(assemble_prompt(TaskKind::QA, {}, " Who is the head of government for United States? ")).text,
              "Obama");
}

TEST(Mock, FactCheckReadsPropositionEnding) {
    MockModel m;
    const std::string yes = "Determine whether the proposition is true.\nProposition:The head of government for Sioux Falls is Paul Ten Haken.";
    const std::string no = "Determine whether the proposition is true.\nProposition:The head of government for Sioux Falls is Theodor Leutwein.";
    EXPECT_EQ(m.generate(assemble_prompt(TaskKind::FactCheck, {sioux()}, yes)).text, "True");
    EXPECT_EQ(m.generate(assemble_prompt(TaskKind::FactCheck, {sioux()}, no)).text, "False");
}

TEST(Mock, DistributionIsNormalisedAndDeterministic) {
    MockModel m(Prior{{"q", "Obama"}});
    for (const auto& p : {assemble_prompt(TaskKind::QA, {sioux()}, "head of government of Sioux Falls?"),
                          assemble_prompt(TaskKind::QA, {}, "q"), assemble_prompt(TaskKind::FactCheck, {sioux()}, "x")}) {
        const auto a = m.generate(p);
        const auto b = m.generate(p);
        ASSERT_TRUE(a.distribution.has_value());
        EXPECT_EQ(a.text, b.text);
        EXPECT_EQ(*a.distribution, *b.distribution);
        EXPECT_NEAR(total(*a.distribution), 1.0, 1e-9);
        for (const auto& [_, v] : *a.distribution) EXPECT_GE(v, 0.0);
        const auto top = std::max_element(a.distribution->begin(), a.distribution->end(),
                                          [](const auto& x, const auto& y) { return x.second < y.second; });
        EXPECT_EQ(top->first, a.text);
        EXPECT_GE(top->second, 1.0 - MockModel::kEpsilon);
    }
    EXPECT_TRUE(m.supports_distribution());
    EXPECT_EQ(m.kind(), ModelKind::MockTable);
}

TEST(Mock, ExtractionTableThenCapitalisedSpan) {
    MockModel m;
    m.set_extraction("Who is the spouse of Joe Biden?", "Joe Biden");
    EXPECT_EQ(m.complete(extraction_prompt("Who is the spouse of Joe Biden?")), "Joe Biden");
    EXPECT_EQ(m.complete(extraction_prompt("Who is the cast member of Casino Royale?")), "Casino Royale");
    EXPECT_EQ(m.complete(extraction_prompt("what about this?")), "");
}

TEST(Http, PlaysBackFixtureText) {
    HttpStub s;
    auto model = s.model();
    const auto prompt = assemble_prompt(TaskKind::QA, {sioux()}, "Who?");
    s.reply(prompt.render(), 200, R"({"text": "  Paul Ten Haken\nextra line"})");
    const auto a = model.generate(prompt);
    EXPECT_EQ(a.text, "Paul Ten Haken");
    EXPECT_FALSE(a.distribution.has_value());
    EXPECT_FALSE(model.supports_distribution());
    const auto sent = s.transport->sent();
    ASSERT_EQ(sent.size(), 1u);
    EXPECT_EQ(nlohmann::json::parse(sent[0].body)["max_tokens"], 32);
}

TEST(Http, RetryBudgetBoundsAttempts) {
    HttpStub s;
    HttpModelOptions opts;
    opts.retry_budget = 3;
    auto model = s.model(opts);
    s.reply("p", 503, "busy");
    try {
        model.complete("p");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ModelError);
        EXPECT_NE(std::string(e.what()).find("HTTP 503"), std::string::npos);
    }
    EXPECT_EQ(s.transport->sent().size(), 4u);
    EXPECT_EQ(s.sleeps.size(), 3u);
}

TEST(Http, ClientErrorsAreNotRetried) {
    HttpStub s;
    auto model = s.model();
    s.reply("p", 401, "no");
    EXPECT_THROW(model.complete("p"), Error);
    EXPECT_EQ(s.transport->sent().size(), 1u);
}

TEST(Http, EmptyAndMalformedReplies) {
    HttpStub s;
    auto model = s.model();
    s.reply("empty", 200, R"({"text": " \n \n"})");
    s.reply("bad", 200, R"({"choices": []})");
    try {
        model.complete("empty");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::EmptyCompletion);
    }
    try {
        model.complete("bad");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::ModelError);
    }
}

TEST(Http, BearerKeyFromNamedVariable) {
    ::setenv("FACTCACHE_TEST_KEY", "sekret", 1);
    HttpStub s;
    HttpModelOptions opts;
    opts.api_key_env = "FACTCACHE_TEST_KEY";
    auto model = s.model(opts);
    s.reply("p", 200, R"({"text": "ok"})");
    EXPECT_EQ(model.complete("p"), "ok");
    const auto headers = s.transport->sent().at(0).headers;
    EXPECT_NE(std::find(headers.begin(), headers.end(), std::pair<std::string, std::string>{"Authorization", "Bearer sekret"}),
              headers.end());
    ::unsetenv("FACTCACHE_TEST_KEY");
}

TEST(Http, ConfigGuards) {
    auto t = std::make_shared<http::FixtureTransport>();
    EXPECT_THROW(HttpCompletionModel({}, t), Error);
    HttpModelOptions opts;
    opts.endpoint = "http://x";
    opts.retry_budget = -1;
    EXPECT_THROW(HttpCompletionModel(opts, t), Error);
}
