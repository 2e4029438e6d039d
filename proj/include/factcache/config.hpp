#pragma once
// Command-line configuration: one JSON document. Relative paths resolve
// against the directory holding the config file.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/metrics.hpp"
#include "factcache/pipeline.hpp"
#include "factcache/slow_source.hpp"

namespace factcache {

struct SlowSourceConfig {
    SlowSourceKind kind = SlowSourceKind::LocalDump;
    std::string locator;  // dump path or SPARQL endpoint
    std::string fixture;  // recorded exchanges for the remote kind; live HTTP when empty
};

struct CacheConfig {
    std::string state_path = "factcache_state.json";
    std::optional<std::size_t> capacity;
    std::size_t prefetch_depth = 1;
};

struct ModelConfig {
    ModelKind kind = ModelKind::MockTable;
    std::string prior_table;
    std::string endpoint;
    std::string fixture;
    std::string api_key_env;
    int max_tokens = 32;
    int retry_budget = 2;
};

struct PipelineConfig {
    std::size_t k = 1;
    std::size_t max_hops = 5;
    std::string scorer = "lexical";
    ExtractorKind extractor = ExtractorKind::AliasDictionary;
};

struct EvalConfig {
    SureParams sure;
    std::uint64_t seed = 7;
    std::string single_hop;
    std::string multi_hop;
    std::vector<std::size_t> edit_counts{1, 2, 5, 10};
    std::vector<std::size_t> scale_sizes{1, 10, 100, 1000, 10000, 100000};
};

struct KbConfig {
    std::string wikidata_endpoint = "https://query.wikidata.org/sparql";
    std::string dbpedia_endpoint = "https://dbpedia.org/sparql";
    std::string fixture;
    double requests_per_second = 5.0;
    bool person_only = false;
};

struct DataConfig {
    std::string templates;
};

struct Config {
    SlowSourceConfig slow_source;
    CacheConfig cache;
    ModelConfig model;
    PipelineConfig pipeline;
    EvalConfig eval;
    KbConfig kb;
    DataConfig data;
    std::filesystem::path base_dir = ".";

    // Resolves a configured path against the config file's directory.
    std::string path(const std::string& p) const {
        if (p.empty()) return p;
        const std::filesystem::path fp(p);
        return fp.is_absolute() ? p : (base_dir / fp).lexically_normal().string();
    }
};

namespace detail {

template <typename T>
void read_opt(const nlohmann::json& j, const char* key, T& out) {
    if (auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            out = it->get<T>();
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ConfigError, std::string("bad value for \"") + key + "\": " + e.what());
        }
    }
}

inline const nlohmann::json& section(const nlohmann::json& doc, const char* name) {
    static const nlohmann::json empty = nlohmann::json::object();
    auto it = doc.find(name);
    if (it == doc.end()) return empty;
    if (!it->is_object()) throw Error(ErrorCode::ConfigError, std::string("section \"") + name + "\" must be an object");
    return *it;
}

}  // namespace detail

inline Config parse_config(const nlohmann::json& doc, std::filesystem::path base_dir = ".") {
    using detail::read_opt;
    using detail::section;
    if (!doc.is_object()) throw Error(ErrorCode::ConfigError, "config must be a JSON object");
    Config c;
    c.base_dir = std::move(base_dir);

    const auto& slow = section(doc, "slow_source");
    std::string kind = "local_dump";
    read_opt(slow, "kind", kind);
    if (kind == "local_dump") {
        c.slow_source.kind = SlowSourceKind::LocalDump;
    } else if (kind == "remote_sparql") {
        c.slow_source.kind = SlowSourceKind::RemoteSparql;
    } else {
        throw Error(ErrorCode::ConfigError, "slow_source.kind must be local_dump or remote_sparql");
    }
    read_opt(slow, "locator", c.slow_source.locator);
    read_opt(slow, "fixture", c.slow_source.fixture);

    const auto& cache = section(doc, "cache");
    read_opt(cache, "state_path", c.cache.state_path);
    if (cache.contains("capacity") && !cache["capacity"].is_null()) {
        std::size_t cap = 0;
        read_opt(cache, "capacity", cap);
        if (cap == 0) throw Error(ErrorCode::ConfigError, "cache.capacity must be positive or null");
        c.cache.capacity = cap;
    }
    read_opt(cache, "prefetch_depth", c.cache.prefetch_depth);
    if (c.cache.prefetch_depth > 5) throw Error(ErrorCode::ConfigError, "cache.prefetch_depth must be 0..5");

    const auto& model = section(doc, "model");
    std::string model_kind = "mock_table";
    read_opt(model, "kind", model_kind);
    if (model_kind == "mock_table") {
        c.model.kind = ModelKind::MockTable;
    } else if (model_kind == "http_completion") {
        c.model.kind = ModelKind::HttpCompletion;
    } else {
        throw Error(ErrorCode::ConfigError, "model.kind must be mock_table or http_completion");
    }
    read_opt(model, "prior_table", c.model.prior_table);
    read_opt(model, "endpoint", c.model.endpoint);
    read_opt(model, "fixture", c.model.fixture);
    read_opt(model, "api_key_env", c.model.api_key_env);
    read_opt(model, "max_tokens", c.model.max_tokens);
    read_opt(model, "retry_budget", c.model.retry_budget);
    if (c.model.max_tokens < 1) throw Error(ErrorCode::ConfigError, "model.max_tokens must be >= 1");
    if (c.model.retry_budget < 0 || c.model.retry_budget > 10) {
        throw Error(ErrorCode::ConfigError, "model.retry_budget must be 0..10");
    }
    if (c.model.kind == ModelKind::HttpCompletion && c.model.endpoint.empty()) {
        throw Error(ErrorCode::ConfigError, "model.endpoint is required for http_completion");
    }

    const auto& pipe = section(doc, "pipeline");
    read_opt(pipe, "k", c.pipeline.k);
    read_opt(pipe, "max_hops", c.pipeline.max_hops);
    read_opt(pipe, "scorer", c.pipeline.scorer);
    std::string extractor = "alias_dictionary";
    read_opt(pipe, "extractor", extractor);
    auto ek = parse_extractor_kind(extractor);
    if (!ek) throw Error(ErrorCode::ConfigError, "pipeline.extractor must be alias_dictionary or model_prompted");
    c.pipeline.extractor = *ek;
    if (c.pipeline.k < 1 || c.pipeline.k > 100) throw Error(ErrorCode::ConfigError, "pipeline.k must be 1..100");
    if (c.pipeline.max_hops < 1 || c.pipeline.max_hops > 10) {
        throw Error(ErrorCode::ConfigError, "pipeline.max_hops must be 1..10");
    }
    if (c.pipeline.scorer != "lexical") throw Error(ErrorCode::ConfigError, "pipeline.scorer must be lexical");

    const auto& eval = section(doc, "eval");
    const auto& sure = section(eval, "sure");
    read_opt(sure, "a", c.eval.sure.a);
    read_opt(sure, "b", c.eval.sure.b);
    read_opt(sure, "alpha", c.eval.sure.alpha);
    read_opt(sure, "beta", c.eval.sure.beta);
    try {
        c.eval.sure.validate();
    } catch (const Error& e) {
        throw Error(ErrorCode::ConfigError, e.what());
    }
    read_opt(eval, "seed", c.eval.seed);
    read_opt(eval, "single_hop", c.eval.single_hop);
    read_opt(eval, "multi_hop", c.eval.multi_hop);
    read_opt(eval, "edit_counts", c.eval.edit_counts);
    read_opt(eval, "scale_sizes", c.eval.scale_sizes);

    const auto& kb = section(doc, "kb");
    read_opt(kb, "wikidata_endpoint", c.kb.wikidata_endpoint);
    read_opt(kb, "dbpedia_endpoint", c.kb.dbpedia_endpoint);
    read_opt(kb, "fixture", c.kb.fixture);
    read_opt(kb, "requests_per_second", c.kb.requests_per_second);
    read_opt(kb, "person_only", c.kb.person_only);
    if (!(c.kb.requests_per_second > 0)) throw Error(ErrorCode::ConfigError, "kb.requests_per_second must be > 0");

    const auto& data = section(doc, "data");
    read_opt(data, "templates", c.data.templates);

    // Referenced input files must exist.
    auto require = [&](const std::string& p, const char* key) {
        if (!p.empty() && !std::filesystem::exists(c.path(p))) {
            throw Error(ErrorCode::ConfigError, std::string(key) + " does not exist: " + c.path(p));
        }
    };
    if (c.slow_source.kind == SlowSourceKind::LocalDump) require(c.slow_source.locator, "slow_source.locator");
    require(c.slow_source.fixture, "slow_source.fixture");
    require(c.model.prior_table, "model.prior_table");
    require(c.model.fixture, "model.fixture");
    require(c.kb.fixture, "kb.fixture");
    require(c.data.templates, "data.templates");
    require(c.eval.single_hop, "eval.single_hop");
    require(c.eval.multi_hop, "eval.multi_hop");
    return c;
}

inline Config load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::ConfigError, "cannot open config: " + path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw Error(ErrorCode::ConfigError, path + " is not valid JSON");
    return parse_config(doc, std::filesystem::path(path).parent_path());
}

}  // namespace factcache
