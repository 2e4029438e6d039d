#pragma once
// SPARQL clients for Wikidata and DBpedia: equivalent-property discovery,
// paged triple collection, and the batch-level ambiguity filter.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "factcache/assets.hpp"
#include "factcache/error.hpp"
#include "factcache/http.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/text.hpp"

namespace factcache::kb {

inline constexpr std::string_view kWikidataEndpoint = "https://query.wikidata.org/sparql";
inline constexpr std::string_view kDbpediaEndpoint = "https://dbpedia.org/sparql";

enum class Schema { Wikidata, DBpedia };

struct EquivalentPropertyPair {
    std::string dbpedia_property;   // URI
    std::string wikidata_property;  // "P<digits>"
    std::string label;              // DBpedia English label
};

struct RawTripleRow {
    std::string subject_uri;
    std::string subject_label;
    std::optional<std::string> object_uri;  // nullopt for literal objects
    std::string object_label;
    std::optional<std::uint64_t> relation_count;  // Wikidata query only
};

struct QueryOptions {
    // Un-comments the person-only restriction line of the Wikidata query.
    bool person_only = false;
    // The printed Wikidata query lost its named-subquery identifier; set
    // this to emit a runnable query for live endpoints.
    bool repair_named_subquery = false;
};

namespace detail {

inline std::string substitute(std::string text, std::string_view placeholder, std::string_view value) {
    for (auto pos = text.find(placeholder); pos != std::string::npos;
         pos = text.find(placeholder, pos + value.size())) {
        text.replace(pos, placeholder.size(), value);
    }
    return text;
}

}  // namespace detail

inline std::string equivalent_properties_query() { return std::string(assets::kEquivalentPropertiesQuery); }

inline std::string wikidata_triples_query(std::string_view property_id, std::size_t limit, std::size_t offset,
                                          const QueryOptions& options = {}) {
    std::string q(assets::kWikidataTriplesQuery);
    q = detail::substitute(std::move(q), "{item}", property_id);
    q = detail::substitute(std::move(q), "{limit}", std::to_string(limit));
    q = detail::substitute(std::move(q), "{offset}", std::to_string(offset));
    if (options.person_only) q = detail::substitute(std::move(q), "# ?subject wdt:P31", "?subject wdt:P31");
    if (options.repair_named_subquery) {
        q = detail::substitute(std::move(q), "} AS \n", "} AS %triples\n");
        q = detail::substitute(std::move(q), "INCLUDE \n", "INCLUDE %triples\n");
    }
    return q;
}

inline std::string dbpedia_triples_query(std::string_view property_url) {
    return detail::substitute(std::string(assets::kDbpediaTriplesQuery), "{property_url}", property_url);
}

// All direct claims of one Wikidata item; used by the remote slow tier.
inline std::string subject_facts_query(std::string_view entity_id) {
    std::string q =
        "SELECT ?p ?object ?subjectLabel ?objectLabel\n"
        "WHERE {\n"
        "  wd:{entity} ?p ?object.\n"
        "  FILTER(STRSTARTS(STR(?p), \"http://www.wikidata.org/prop/direct/\")).\n"
        "  OPTIONAL { wd:{entity} rdfs:label ?subjectLabel. FILTER(LANG(?subjectLabel) = \"en\"). }\n"
        "  OPTIONAL { ?object rdfs:label ?objectLabel. FILTER(LANG(?objectLabel) = \"en\"). }\n"
        "}\n";
    return detail::substitute(std::move(q), "{entity}", entity_id);
}

// "http://www.wikidata.org/entity/Q42" -> "Q42", DBpedia resources -> "dbr:Name".
inline std::string entity_id_from_uri(std::string_view uri) {
    static constexpr std::string_view kWikidataEntity = "http://www.wikidata.org/entity/";
    static constexpr std::string_view kDbpediaResource = "http://dbpedia.org/resource/";
    if (uri.substr(0, kWikidataEntity.size()) == kWikidataEntity) {
        return std::string(uri.substr(kWikidataEntity.size()));
    }
    if (uri.substr(0, kDbpediaResource.size()) == kDbpediaResource) {
        return "dbr:" + std::string(uri.substr(kDbpediaResource.size()));
    }
    return std::string(uri);
}

// Trailing "P<digits>" of a Wikidata property URI, if any.
inline std::optional<std::string> wikidata_property_id(std::string_view uri) {
    static const std::regex kProperty("(P[0-9]+)$");
    std::match_results<std::string_view::const_iterator> m;
    if (std::regex_search(uri.begin(), uri.end(), m, kProperty)) return m[1].str();
    return std::nullopt;
}

// Drops identifier-like relations. Matching is on whole words so that
// e.g. "president" is not caught by "id".
struct IdentifierFilter {
    std::set<std::string> blocked_words{"id", "code"};
    std::set<std::string> allowed_words{"iata", "icao"};

    bool drops(std::string_view label) const {
        bool blocked = false;
        for (const auto& token : text::tokenize(label)) {
            if (allowed_words.count(token)) return false;
            if (blocked_words.count(token)) blocked = true;
        }
        return blocked;
    }
};

class SparqlClient {
public:
    SparqlClient(std::string endpoint, std::shared_ptr<http::Transport> transport,
                 double requests_per_second = 5.0)
        : endpoint_(std::move(endpoint)),
          transport_(std::move(transport)),
          limiter_(std::make_shared<http::RateLimiter>(requests_per_second)) {
        if (endpoint_.empty()) throw Error(ErrorCode::InvalidArgument, "SPARQL endpoint is empty");
    }

    const std::string& endpoint() const { return endpoint_; }

    std::string request_url(std::string_view query) const {
        return endpoint_ + "?query=" + http::percent_encode(query);
    }

    // Returns the results.bindings array of an application/sparql-results+json reply.
    nlohmann::json select(std::string_view query) const {
        http::Request req;
        req.method = "GET";
        req.url = request_url(query);
        req.headers = {{"Accept", "application/sparql-results+json"},
                       {"User-Agent", "factcache/0.1 (knowledge-editing cache)"}};
        limiter_->acquire();
        const http::Response resp = transport_->send(req);
        if (resp.status == 429) {
            std::optional<int> retry_after;
            if (auto h = resp.header("Retry-After")) {
                try {
                    retry_after = std::stoi(*h);
                } catch (const std::exception&) {
                }
            }
            throw RateLimited(endpoint_ + " rate limited the request", retry_after);
        }
        if (resp.status < 200 || resp.status >= 300) {
            throw Error(ErrorCode::HttpError, endpoint_ + " returned HTTP " + std::to_string(resp.status));
        }
        nlohmann::json doc = nlohmann::json::parse(resp.body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("results") ||
            !doc["results"].contains("bindings") || !doc["results"]["bindings"].is_array()) {
            throw Error(ErrorCode::MalformedResponse, endpoint_ + " reply is not SPARQL JSON results");
        }
        return doc["results"]["bindings"];
    }

private:
    std::string endpoint_;
    std::shared_ptr<http::Transport> transport_;
    std::shared_ptr<http::RateLimiter> limiter_;
};

namespace detail {

inline std::optional<std::string> binding_value(const nlohmann::json& row, const char* name) {
    auto it = row.find(name);
    if (it == row.end() || !it->is_object() || !it->contains("value")) return std::nullopt;
    return (*it)["value"].get<std::string>();
}

inline std::optional<std::string> binding_type(const nlohmann::json& row, const char* name) {
    auto it = row.find(name);
    if (it == row.end() || !it->is_object() || !it->contains("type")) return std::nullopt;
    return (*it)["type"].get<std::string>();
}

inline std::string require_value(const nlohmann::json& row, const char* name) {
    auto v = binding_value(row, name);
    if (!v) throw Error(ErrorCode::MalformedResponse, std::string("binding lacks ?") + name);
    return *v;
}

}  // namespace detail

inline std::vector<EquivalentPropertyPair> fetch_equivalent_properties(const SparqlClient& client,
                                                                       const IdentifierFilter& filter = {}) {
    std::vector<EquivalentPropertyPair> out;
    for (const auto& row : client.select(equivalent_properties_query())) {
        EquivalentPropertyPair pair;
        pair.dbpedia_property = detail::require_value(row, "DBpediaProp");
        pair.label = detail::require_value(row, "itemLabel");
        auto pid = wikidata_property_id(detail::require_value(row, "WikidataProp"));
        if (!pid || pair.label.empty() || filter.drops(pair.label)) continue;
        pair.wikidata_property = *pid;
        out.push_back(std::move(pair));
    }
    return out;
}

// `relation` is a Wikidata property id ("P6") or a DBpedia property URL.
inline std::vector<RawTripleRow> fetch_triples(const SparqlClient& client, Schema schema, std::string_view relation,
                                               std::size_t limit, std::size_t offset,
                                               const QueryOptions& options = {}) {
    if (limit == 0) return {};
    const bool wikidata = schema == Schema::Wikidata;
    const std::string query = wikidata ? wikidata_triples_query(relation, limit, offset, options)
                                       : dbpedia_triples_query(relation);
    const auto bindings = client.select(query);

    std::vector<RawTripleRow> rows;
    std::size_t index = 0;
    for (const auto& b : bindings) {
        // The DBpedia query has no paging clauses, so page on our side.
        if (!wikidata && index++ < offset) continue;
        if (rows.size() >= limit) break;
        RawTripleRow row;
        row.subject_uri = detail::require_value(b, "subject");
        row.subject_label = detail::binding_value(b, "subjectLabel").value_or(row.subject_uri);
        const auto object = detail::require_value(b, "object");
        const bool literal = detail::binding_type(b, "object").value_or("uri") != "uri";
        if (literal) {
            row.object_label = object;
        } else {
            row.object_uri = object;
            row.object_label = detail::binding_value(b, "objectLabel").value_or(object);
        }
        if (auto count = detail::binding_value(b, "relationCount")) {
            try {
                row.relation_count = std::stoull(*count);
            } catch (const std::exception&) {
                throw Error(ErrorCode::MalformedResponse, "relationCount is not a count: " + *count);
            }
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

// Drops (a) rows whose subject label maps to several subject URIs within the
// batch and (b) rows whose subject has several distinct objects. Survivors
// become triples of `relation`.
inline TripleSet filter_ambiguous(const std::vector<RawTripleRow>& rows, std::string_view relation_id,
                                  std::string_view relation_label, Source source,
                                  Timestamp fetched_at = std::chrono::system_clock::now()) {
    std::map<std::string, std::set<std::string>> uris_by_label;
    std::map<std::string, std::set<std::string>> objects_by_subject;
    auto object_key = [](const RawTripleRow& r) {
        return r.object_uri ? "uri:" + *r.object_uri : "literal:" + r.object_label;
    };
    for (const auto& r : rows) {
        uris_by_label[r.subject_label].insert(r.subject_uri);
        objects_by_subject[r.subject_uri].insert(object_key(r));
    }

    TripleSet out;
    for (const auto& r : rows) {
        if (uris_by_label[r.subject_label].size() > 1) continue;
        if (objects_by_subject[r.subject_uri].size() > 1) continue;
        FactTriple t;
        t.subject = entity_id_from_uri(r.subject_uri);
        t.subject_label = r.subject_label;
        t.relation = std::string(relation_id);
        t.relation_label = std::string(relation_label);
        t.object_is_literal = !r.object_uri.has_value();
        t.object = r.object_uri ? entity_id_from_uri(*r.object_uri) : r.object_label;
        t.object_label = r.object_label;
        t.source = source;
        t.fetched_at = fetched_at;
        out.insert(std::move(t));
    }
    return out;
}

}  // namespace factcache::kb
