#pragma once
// Language-model clients. MockModel is a deterministic stand-in that reads
// the evidence it is given and otherwise falls back to a fixed table of
// (stale) prior answers. HttpCompletionModel talks to a JSON completion API.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/http.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/metrics.hpp"
#include "factcache/prompts.hpp"
#include "factcache/text.hpp"

namespace factcache {

enum class ModelKind { MockTable, HttpCompletion };

struct ModelAnswer {
    std::string text;
    std::optional<Distribution> distribution;
    std::chrono::nanoseconds latency{0};
};

class ModelClient {
public:
    virtual ~ModelClient() = default;
    virtual ModelKind kind() const = 0;
    virtual bool supports_distribution() const = 0;
    virtual ModelAnswer generate(const AssembledPrompt& prompt) = 0;
    // Raw completion, used by the prompted entity extractor.
    virtual std::string complete(const std::string& prompt) = 0;
};

inline const std::set<std::string>& relation_stopwords() {
    static const std::set<std::string> words{"of", "the", "a", "an", "in", "is", "for", "to", "by", "on", "at", "and", "or"};
    return words;
}

// True when a content word of the relation label occurs in the query.
inline bool relation_overlaps(const FactTriple& t, std::string_view query) {
    const auto query_tokens = text::tokenize(query);
    const std::set<std::string> q(query_tokens.begin(), query_tokens.end());
    for (const auto& tok : text::tokenize(t.relation_text())) {
        if (!relation_stopwords().count(tok) && q.count(tok)) return true;
    }
    return false;
}

class MockModel final : public ModelClient {
public:
    static constexpr double kEpsilon = 0.01;
    static constexpr std::string_view kUnknown = "unknown";

    MockModel() = default;
    explicit MockModel(std::map<std::string, std::string> prior) : prior_(std::move(prior)) {}

    // Prior table file: JSON object {"<query>": "<answer>", ...}.
    static MockModel from_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open prior table: " + path);
        nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
        if (doc.is_discarded() || !doc.is_object()) throw Error(ErrorCode::ParseError, path + ": expected a JSON object");
        return MockModel(doc.get<std::map<std::string, std::string>>());
    }

    void set_prior(std::string query, std::string answer) { prior_[std::move(query)] = std::move(answer); }
    void set_extraction(std::string sentence, std::string entity) {
        extraction_[std::move(sentence)] = std::move(entity);
    }
    const std::map<std::string, std::string>& prior() const { return prior_; }

    ModelKind kind() const override { return ModelKind::MockTable; }
    bool supports_distribution() const override { return true; }

    ModelAnswer generate(const AssembledPrompt& prompt) override {
        const auto start = std::chrono::steady_clock::now();
        ModelAnswer out;
        out.text = choose(prompt);

        std::set<std::string> candidates{out.text, std::string(kUnknown)};
        if (auto p = prior_answer(prompt.query)) candidates.insert(*p);
        for (const auto& t : prompt.evidence_triples) candidates.insert(t.object_text());
        if (prompt.task == TaskKind::FactCheck) candidates.insert({"True", "False"});
        Distribution dist;
        const double share = kEpsilon / static_cast<double>(candidates.size());
        for (const auto& c : candidates) dist[c] = share;
        dist[out.text] += 1.0 - kEpsilon;
        out.distribution = std::move(dist);
        out.latency = std::chrono::steady_clock::now() - start;
        return out;
    }

    // Extraction: a table hit on the input sentence, else the longest run of
    // capitalised words after the first word.
    std::string complete(const std::string& prompt) override {
        const auto lines = detail::split_lines(prompt);
        std::string sentence;
        for (auto it = lines.rbegin(); it != lines.rend(); ++it) {
            if (!text::trim(*it).empty()) {
                sentence = std::string(text::trim(*it));
                break;
            }
        }
        if (auto it = extraction_.find(sentence); it != extraction_.end()) return it->second;
        return longest_capitalised_span(sentence);
    }

private:
    std::optional<std::string> prior_answer(const std::string& query) const {
        auto it = prior_.find(std::string(text::trim(query)));
        if (it == prior_.end()) return std::nullopt;
        return it->second;
    }

    std::string choose(const AssembledPrompt& prompt) const {
        for (const auto& t : prompt.evidence_triples) {
            if (!relation_overlaps(t, prompt.query)) continue;
            if (prompt.task == TaskKind::FactCheck) {
                const std::string suffix = " " + t.object_text() + ".";
                const auto& q = prompt.query;
                const bool holds = q.size() >= suffix.size() &&
                                   q.compare(q.size() - suffix.size(), suffix.size(), suffix) == 0;
                return holds ? "True" : "False";
            }
            return t.object_text();
        }
        return prior_answer(prompt.query).value_or(std::string(kUnknown));
    }

    static std::string longest_capitalised_span(std::string_view sentence) {
        std::string best;
        std::string current;
        bool first_word = true;
        std::size_t i = 0;
        while (i < sentence.size()) {
            std::size_t j = i;
            while (j < sentence.size() && sentence[j] != ' ') ++j;
            std::string word(sentence.substr(i, j - i));
            while (!word.empty() && (word.back() == '?' || word.back() == '.' || word.back() == ',')) word.pop_back();
            const bool cap = !word.empty() && ((word[0] >= 'A' && word[0] <= 'Z') || (word[0] >= '0' && word[0] <= '9' && !current.empty()));
            if (cap && !first_word) {
                current += current.empty() ? word : " " + word;
                if (current.size() > best.size()) best = current;
            } else {
                current.clear();
            }
            first_word = false;
            i = j + 1;
        }
        return best;
    }

    std::map<std::string, std::string> prior_;
    std::map<std::string, std::string> extraction_;
};

struct HttpModelOptions {
    std::string endpoint;
    std::string api_key_env;  // name of the variable holding the key; may be empty
    int max_tokens = 32;
    int retry_budget = 2;     // retries after the first attempt
    std::chrono::milliseconds initial_backoff{250};
};

// POSTs {"prompt", "max_tokens"} and expects {"text"} back.
class HttpCompletionModel final : public ModelClient {
public:
    HttpCompletionModel(HttpModelOptions options, std::shared_ptr<http::Transport> transport)
        : options_(std::move(options)), transport_(std::move(transport)) {
        if (options_.endpoint.empty()) throw Error(ErrorCode::ConfigError, "model.endpoint is empty");
        if (options_.retry_budget < 0) throw Error(ErrorCode::ConfigError, "model.retry_budget must be >= 0");
        retry_.attempts = options_.retry_budget + 1;
        retry_.initial_backoff = options_.initial_backoff;
    }

    void set_sleep(std::function<void(std::chrono::milliseconds)> sleep) { retry_.sleep = std::move(sleep); }

    ModelKind kind() const override { return ModelKind::HttpCompletion; }
    bool supports_distribution() const override { return false; }

    ModelAnswer generate(const AssembledPrompt& prompt) override {
        const auto start = std::chrono::steady_clock::now();
        ModelAnswer out;
        out.text = complete(prompt.render());
        out.latency = std::chrono::steady_clock::now() - start;
        return out;
    }

    std::string complete(const std::string& prompt) override {
        http::Request req;
        req.method = "POST";
        req.url = options_.endpoint;
        nlohmann::json body{{"prompt", prompt}, {"max_tokens", options_.max_tokens}};
        req.body = body.dump();
        req.headers = {{"Content-Type", "application/json"}};
        if (!options_.api_key_env.empty()) {
            if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
                req.headers.emplace_back("Authorization", std::string("Bearer ") + key);
            }
        }

        http::Response resp;
        try {
            resp = http::with_retry(retry_, [&] {
                http::Response r = transport_->send(req);
                if (r.status == 429 || r.status >= 500) {
                    throw Error(ErrorCode::HttpError, "completion endpoint returned HTTP " + std::to_string(r.status));
                }
                return r;
            });
        } catch (const Error& e) {
            throw Error(ErrorCode::ModelError, e.what());
        }
        if (resp.status < 200 || resp.status >= 300) {
            throw Error(ErrorCode::ModelError, "completion endpoint returned HTTP " + std::to_string(resp.status));
        }
        nlohmann::json doc = nlohmann::json::parse(resp.body, nullptr, false);
        if (doc.is_discarded() || !doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
            throw Error(ErrorCode::ModelError, "completion reply lacks a \"text\" string");
        }
        const std::string raw = doc["text"].get<std::string>();
        for (const auto& line : detail::split_lines(raw)) {
            const auto t = text::trim(line);
            if (!t.empty()) return std::string(t);
        }
        throw Error(ErrorCode::EmptyCompletion, "completion text is empty");
    }

private:
    HttpModelOptions options_;
    std::shared_ptr<http::Transport> transport_;
    http::RetryPolicy retry_;
};

}  // namespace factcache
