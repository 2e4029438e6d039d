#include <gtest/gtest.h>

#include <fstream>
#include <random>
#include <sstream>

#include "factcache/kb_client.hpp"

using namespace factcache;
using namespace factcache::kb;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string asset(const std::string& rel) { return read_file(std::string(FACTCACHE_SOURCE_DIR) + "/assets/" + rel); }

std::string replace_all(std::string s, const std::string& from, const std::string& to) {
    std::size_t pos = 0;
    while ((pos = s.find(from, pos)) != std::string::npos) {
        s.replace(pos, from.size(), to);
        pos += to.size();
    }
    return s;
}

nlohmann::json uri(const std::string& v) { return {{"type", "uri"}, {"value", v}}; }
nlohmann::json lit(const std::string& v) { return {{"type", "literal"}, {"xml:lang", "en"}, {"value", v}}; }

std::string results(const nlohmann::json& bindings) {
    return nlohmann::json{{"head", {{"vars", nlohmann::json::array()}}}, {"results", {{"bindings", bindings}}}}.dump();
}

struct Stub {
    std::shared_ptr<http::FixtureTransport> transport = std::make_shared<http::FixtureTransport>();
    SparqlClient client{std::string(kWikidataEndpoint), transport, 1000.0};

    void reply(const std::string& query, int status, std::string body, std::map<std::string, std::string> headers = {}) {
        http::Request req;
        req.url = client.request_url(query);
        http::Response resp;
        resp.status = status;
        resp.body = std::move(body);
        resp.headers = std::move(headers);
        transport->add(req, resp);
    }
};

RawTripleRow row(std::string subject_uri, std::string label, std::string object_uri, std::string object_label) {
    return {std::move(subject_uri), std::move(label), std::move(object_uri), std::move(object_label), std::nullopt};
}

}  // namespace

TEST(Queries, WikidataQueryIsTemplateSubstitution) {
    const auto expected =
        replace_all(replace_all(replace_all(asset("sparql/wikidata_triples.rq"), "{item}", "P6"), "{limit}", "100"),
                    "{offset}", "200");
    EXPECT_EQ(wikidata_triples_query("P6", 100, 200), expected);
    EXPECT_NE(expected.find("?subject wdt:P6 ?object."), std::string::npos);
    EXPECT_NE(expected.find("LIMIT 100\nOFFSET 200\n"), std::string::npos);
    EXPECT_EQ(wikidata_triples_query("P6", 100, 200), wikidata_triples_query("P6", 100, 200));
}

TEST(Queries, PersonOnlyUncommentsHumanFilter) {
    const auto q = wikidata_triples_query("P26", 10, 0, {true, false});
    EXPECT_NE(q.find("      ?subject wdt:P31 wd:Q5."), std::string::npos);
    EXPECT_EQ(q.find("# ?subject wdt:P31"), std::string::npos);
    EXPECT_NE(wikidata_triples_query("P26", 10, 0).find("# ?subject wdt:P31 wd:Q5."), std::string::npos);
}

TEST(Queries, RepairNamesTheSubquery) {
    const auto q = wikidata_triples_query("P6", 1, 0, {false, true});
    EXPECT_NE(q.find("} AS %triples\n"), std::string::npos);
    EXPECT_NE(q.find("INCLUDE %triples\n"), std::string::npos);
}

TEST(Queries, DbpediaAndEquivalentMatchAssets) {
    EXPECT_EQ(dbpedia_triples_query("http://dbpedia.org/ontology/birthPlace"),
              replace_all(asset("sparql/dbpedia_triples.rq"), "{property_url}", "http://dbpedia.org/ontology/birthPlace"));
    EXPECT_EQ(equivalent_properties_query(), asset("sparql/equivalent_properties.rq"));
}

TEST(Queries, RequestUrlPercentEncodesEverythingReserved) {
    SparqlClient client("https://example.org/sparql", std::make_shared<http::FixtureTransport>());
    EXPECT_EQ(client.request_url("SELECT ?x {}/a-b_c.d~e\n"),
              "https://example.org/sparql?query=SELECT%20%3Fx%20%7B%7D%2Fa-b_c.d~e%0A");
}

TEST(Uris, EntityAndPropertyIds) {
    EXPECT_EQ(entity_id_from_uri("http://www.wikidata.org/entity/Q42"), "Q42");
    EXPECT_EQ(entity_id_from_uri("http://dbpedia.org/resource/Paris"), "dbr:Paris");
    EXPECT_EQ(entity_id_from_uri("urn:x"), "urn:x");
    EXPECT_EQ(wikidata_property_id("http://www.wikidata.org/prop/direct/P26"), "P26");
    EXPECT_FALSE(wikidata_property_id("http://dbpedia.org/ontology/spouse").has_value());
}

TEST(IdentifierFilter, WholeWordsWithAllowlist) {
    IdentifierFilter f;
    EXPECT_TRUE(f.drops("VIAF ID"));
    EXPECT_TRUE(f.drops("postal code"));
    EXPECT_FALSE(f.drops("IATA airline designator"));
    EXPECT_FALSE(f.drops("ICAO airport code"));
    EXPECT_FALSE(f.drops("president"));
    EXPECT_FALSE(f.drops("birth place"));
}

TEST(EquivalentProperties, RecordedFixture) {
    auto transport = http::FixtureTransport::from_file(std::string(FACTCACHE_SOURCE_DIR) + "/data/sparql_fixture.json");
    SparqlClient client(std::string(kDbpediaEndpoint), transport, 1000.0);
    const auto pairs = fetch_equivalent_properties(client);
    std::map<std::string, std::string> by_label;
    for (const auto& p : pairs) by_label[p.label] = p.wikidata_property;
    EXPECT_EQ(by_label.at("birth place"), "P19");
    EXPECT_EQ(by_label.count("VIAF ID"), 0u);
    EXPECT_EQ(by_label.at("IATA airline designator"), "P229");
    for (const auto& p : pairs) {
        EXPECT_EQ(p.wikidata_property[0], 'P');
        EXPECT_FALSE(p.label.empty());
    }
}

TEST(EquivalentProperties, EmptyResult) {
    Stub s;
    s.reply(equivalent_properties_query(), 200, results(nlohmann::json::array()));
    EXPECT_TRUE(fetch_equivalent_properties(s.client).empty());
}

TEST(EquivalentProperties, MissingBindingIsMalformed) {
    Stub s;
    s.reply(equivalent_properties_query(), 200, results({{{"itemLabel", lit("spouse")}}}));
    try {
        fetch_equivalent_properties(s.client);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    }
}

TEST(FetchTriples, RecordedHeadOfGovernment) {
    auto transport = http::FixtureTransport::from_file(std::string(FACTCACHE_SOURCE_DIR) + "/data/sparql_fixture.json");
    SparqlClient client(std::string(kWikidataEndpoint), transport, 1000.0);
    const auto rows = fetch_triples(client, Schema::Wikidata, "P6", 100, 0);
    auto it = std::find_if(rows.begin(), rows.end(), [](const RawTripleRow& r) { return r.subject_label == "Sioux Falls"; });
    ASSERT_NE(it, rows.end());
    EXPECT_EQ(it->object_label, "Paul Ten Haken");
    ASSERT_TRUE(it->object_uri.has_value());
    ASSERT_EQ(transport->sent().size(), 1u);
    EXPECT_EQ(transport->sent()[0].url, client.request_url(wikidata_triples_query("P6", 100, 0)));
}

TEST(FetchTriples, ZeroLimitSendsNothing) {
    Stub s;
    EXPECT_TRUE(fetch_triples(s.client, Schema::Wikidata, "P6", 0, 0).empty());
    EXPECT_TRUE(s.transport->sent().empty());
}

TEST(FetchTriples, ExhaustedPagination) {
    Stub s;
    s.reply(wikidata_triples_query("P6", 100, 5000), 200, results(nlohmann::json::array()));
    EXPECT_TRUE(fetch_triples(s.client, Schema::Wikidata, "P6", 100, 5000).empty());
}

TEST(FetchTriples, LiteralsAndCounts) {
    Stub s;
    nlohmann::json b = nlohmann::json::array();
    b.push_back({{"subject", uri("http://www.wikidata.org/entity/Q1")},
                 {"object", {{"type", "literal"}, {"value", "1971-05-01"}}},
                 {"subjectLabel", lit("Amtrak")},
                 {"relationCount", {{"type", "literal"}, {"value", "12"}}}});
    s.reply(wikidata_triples_query("P571", 10, 0), 200, results(b));
    const auto rows = fetch_triples(s.client, Schema::Wikidata, "P571", 10, 0);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_FALSE(rows[0].object_uri.has_value());
    EXPECT_EQ(rows[0].object_label, "1971-05-01");
    EXPECT_EQ(rows[0].relation_count, 12u);
}

TEST(FetchTriples, DbpediaPagesClientSide) {
    Stub s;
    nlohmann::json b = nlohmann::json::array();
    for (int i = 0; i < 5; ++i) {
        b.push_back({{"subject", uri("http://dbpedia.org/resource/S" + std::to_string(i))},
                     {"object", uri("http://dbpedia.org/resource/O" + std::to_string(i))}});
    }
    const std::string prop = "http://dbpedia.org/ontology/spouse";
    s.reply(dbpedia_triples_query(prop), 200, results(b));
    const auto rows = fetch_triples(s.client, Schema::DBpedia, prop, 2, 2);
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].subject_uri, "http://dbpedia.org/resource/S2");
    EXPECT_EQ(rows[1].subject_uri, "http://dbpedia.org/resource/S3");
    EXPECT_EQ(rows[0].subject_label, rows[0].subject_uri);
}

TEST(FetchTriples, RateLimitCarriesRetryAfter) {
    Stub s;
    s.reply(wikidata_triples_query("P6", 10, 0), 429, "slow down", {{"Retry-After", "30"}});
    try {
        fetch_triples(s.client, Schema::Wikidata, "P6", 10, 0);
        FAIL();
    } catch (const RateLimited& e) {
        EXPECT_EQ(e.code(), ErrorCode::RateLimited);
        EXPECT_EQ(e.retry_after(), 30);
    }
}

TEST(FetchTriples, HttpAndBodyErrors) {
    Stub s;
    s.reply(wikidata_triples_query("P6", 10, 0), 503, "");
    s.reply(wikidata_triples_query("P6", 10, 10), 200, "<html>");
    try {
        fetch_triples(s.client, Schema::Wikidata, "P6", 10, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::HttpError);
    }
    try {
        fetch_triples(s.client, Schema::Wikidata, "P6", 10, 10);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::MalformedResponse);
    }
}

TEST(Retry, RetriesTransportErrorsWithDoublingBackoff) {
    std::vector<std::chrono::milliseconds> sleeps;
    http::RetryPolicy policy;
    policy.sleep = [&](std::chrono::milliseconds d) { sleeps.push_back(d); };
    int calls = 0;
    EXPECT_THROW(http::with_retry(policy, [&]() -> int {
                     ++calls;
                     throw Error(ErrorCode::HttpError, "down");
                 }),
                 Error);
    EXPECT_EQ(calls, 3);
    EXPECT_EQ(sleeps, (std::vector<std::chrono::milliseconds>{std::chrono::milliseconds(250), std::chrono::milliseconds(500)}));

    calls = 0;
    EXPECT_EQ(http::with_retry(policy, [&] {
                  if (++calls < 2) throw RateLimited("429", 1);
                  return 7;
              }),
              7);

    calls = 0;
    EXPECT_THROW(http::with_retry(policy, [&]() -> int {
                     ++calls;
                     throw Error(ErrorCode::MalformedResponse, "bad");
                 }),
                 Error);
    EXPECT_EQ(calls, 1);
}

TEST(FilterAmbiguous, SharedLabelDropsBoth) {
    const std::vector<RawTripleRow> rows{
        row("http://www.wikidata.org/entity/Q1", "Hope Springs", "http://www.wikidata.org/entity/Q10", "A"),
        row("http://www.wikidata.org/entity/Q2", "Hope Springs", "http://www.wikidata.org/entity/Q11", "B"),
        row("http://www.wikidata.org/entity/Q3", "Sioux Falls", "http://www.wikidata.org/entity/Q12", "Paul Ten Haken")};
    const auto kept = filter_ambiguous(rows, "P6", "head of government", Source::Wikidata);
    ASSERT_EQ(kept.size(), 1u);
    EXPECT_EQ(kept.begin()->subject, "Q3");
    EXPECT_EQ(kept.begin()->object, "Q12");
    EXPECT_EQ(kept.begin()->object_label, "Paul Ten Haken");
}

TEST(FilterAmbiguous, MultipleObjectsDropSubject) {
    const std::vector<RawTripleRow> rows{
        row("http://www.wikidata.org/entity/Q1", "Parent", "http://www.wikidata.org/entity/Q10", "Child A"),
        row("http://www.wikidata.org/entity/Q1", "Parent", "http://www.wikidata.org/entity/Q11", "Child B")};
    EXPECT_TRUE(filter_ambiguous(rows, "P40", "child", Source::Wikidata).empty());
}

TEST(FilterAmbiguous, DuplicateRowsAreOneFact) {
    const auto r = row("http://www.wikidata.org/entity/Q1", "Solo", "http://www.wikidata.org/entity/Q2", "X");
    EXPECT_EQ(filter_ambiguous({r, r}, "P6", "head of government", Source::Wikidata).size(), 1u);
}

TEST(FilterAmbiguous, OutputSatisfiesFunctionalDependencies) {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<RawTripleRow> rows;
        const auto n = 1 + uniform_index(rng, 30);
        for (std::size_t i = 0; i < n; ++i) {
            rows.push_back(row("u" + std::to_string(uniform_index(rng, 10)), "L" + std::to_string(uniform_index(rng, 8)),
                               "o" + std::to_string(uniform_index(rng, 4)), "x"));
        }
        const auto kept = filter_ambiguous(rows, "P1", "r", Source::DBpedia);
        std::map<std::string, std::set<std::string>> uris, objects;
        for (const auto& t : kept) {
            uris[t.subject_label].insert(t.subject);
            objects[t.subject].insert(t.object);
        }
        for (const auto& [_, s] : uris) EXPECT_EQ(s.size(), 1u);
        for (const auto& [_, s] : objects) EXPECT_EQ(s.size(), 1u);
        // Every kept row is unambiguous in the input as judged by brute force.
        for (const auto& t : kept) {
            for (const auto& r : rows) {
                if (r.subject_label == t.subject_label) EXPECT_EQ(r.subject_uri, t.subject);
                if (r.subject_uri == t.subject) EXPECT_EQ(*r.object_uri, t.object);
            }
        }
    }
}
