#pragma once
// Minimal HTTP plumbing shared by the SPARQL clients and the completion
// adapter: a transport interface with a live cpp-httplib backend and a
// recorded-fixture backend, a token-bucket rate limiter, and bounded retry.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#ifdef FACTCACHE_WITH_OPENSSL
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>
#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/text.hpp"

namespace factcache::http {

struct Request {
    std::string method = "GET";
    std::string url;
    std::string body;
    std::vector<std::pair<std::string, std::string>> headers;
};

struct Response {
    int status = 0;
    std::string body;
    std::map<std::string, std::string> headers;

    std::optional<std::string> header(const std::string& name) const {
        for (const auto& [k, v] : headers) {
            if (text::to_lower(k) == text::to_lower(name)) return v;
        }
        return std::nullopt;
    }
};

class Transport {
public:
    virtual ~Transport() = default;
    // Throws Error(HttpError) when no response could be obtained at all.
    virtual Response send(const Request& request) = 0;
};

inline std::string percent_encode(std::string_view s) {
    static constexpr char kHex[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(s.size() * 3);
    for (char c : s) {
        const auto u = static_cast<unsigned char>(c);
        if ((u >= 'A' && u <= 'Z') || (u >= 'a' && u <= 'z') || (u >= '0' && u <= '9') || u == '-' ||
            u == '_' || u == '.' || u == '~') {
            out.push_back(c);
        } else {
            out.push_back('%');
            out.push_back(kHex[u >> 4]);
            out.push_back(kHex[u & 0x0F]);
        }
    }
    return out;
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // path + query, at least "/"
};

inline ParsedUrl split_url(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "URL has no scheme: " + std::string(url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string_view::npos) return {std::string(url), "/"};
    return {std::string(url.substr(0, path_start)), std::string(url.substr(path_start))};
}

class HttplibTransport final : public Transport {
public:
    explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds(30)) : timeout_(timeout) {}

    Response send(const Request& request) override {
        const auto parsed = split_url(request.url);
        httplib::Client client(parsed.origin);
        client.set_connection_timeout(timeout_);
        client.set_read_timeout(timeout_);
        client.set_follow_location(true);
        httplib::Headers headers;
        std::string content_type = "application/x-www-form-urlencoded";
        for (const auto& [k, v] : request.headers) {
            if (text::to_lower(k) == "content-type") {
                content_type = v;
            } else {
                headers.emplace(k, v);
            }
        }
        httplib::Result result = request.method == "POST"
                                     ? client.Post(parsed.path, headers, request.body, content_type)
                                     : client.Get(parsed.path, headers);
        if (!result) {
            throw Error(ErrorCode::HttpError,
                        request.method + " " + request.url + " failed: " + httplib::to_string(result.error()));
        }
        Response response;
        response.status = result->status;
        response.body = result->body;
        for (const auto& [k, v] : result->headers) response.headers.emplace(k, v);
        return response;
    }

private:
    std::chrono::seconds timeout_;
};

// Plays back recorded exchanges. A fixture file is a JSON array of
// {"method", "url", "body"?, "status", "response", "headers"?}; requests are
// matched on method + url + body. Unmatched requests raise HttpError.
class FixtureTransport final : public Transport {
public:
    struct Exchange {
        Request request;
        Response response;
    };

    FixtureTransport() = default;
    explicit FixtureTransport(std::vector<Exchange> exchanges) : exchanges_(std::move(exchanges)) {}

    static std::shared_ptr<FixtureTransport> from_file(const std::string& path) {
        return std::make_shared<FixtureTransport>(read_exchanges(path));
    }

    static std::vector<Exchange> read_exchanges(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open fixture file: " + path);
        nlohmann::json doc;
        try {
            in >> doc;
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, path + ": " + e.what());
        }
        std::vector<Exchange> exchanges;
        for (const auto& rec : doc) {
            Exchange ex;
            ex.request.method = rec.value("method", "GET");
            ex.request.url = rec.at("url").get<std::string>();
            ex.request.body = rec.value("body", "");
            ex.response.status = rec.value("status", 200);
            const auto& resp = rec.at("response");
            ex.response.body = resp.is_string() ? resp.get<std::string>() : resp.dump();
            if (rec.contains("headers")) {
                for (const auto& [k, v] : rec["headers"].items()) ex.response.headers[k] = v.get<std::string>();
            }
            exchanges.push_back(std::move(ex));
        }
        return exchanges;
    }

    void add(Request request, Response response) {
        exchanges_.push_back({std::move(request), std::move(response)});
    }

    Response send(const Request& request) override {
        std::lock_guard lock(mutex_);
        sent_.push_back(request);
        for (const auto& ex : exchanges_) {
            if (ex.request.method == request.method && ex.request.url == request.url &&
                ex.request.body == request.body) {
                return ex.response;
            }
        }
        throw Error(ErrorCode::HttpError, "no recorded exchange for " + request.method + " " + request.url);
    }

    std::vector<Request> sent() const {
        std::lock_guard lock(mutex_);
        return sent_;
    }

private:
    std::vector<Exchange> exchanges_;
    mutable std::mutex mutex_;
    std::vector<Request> sent_;
};

// Token bucket: `rate` tokens per second, burst of `capacity`.
class RateLimiter {
public:
    using Clock = std::chrono::steady_clock;

    explicit RateLimiter(double rate_per_second, double capacity = 1.0)
        : rate_(rate_per_second), capacity_(capacity), tokens_(capacity), last_(Clock::now()) {
        if (rate_ <= 0.0 || capacity_ < 1.0) {
            throw Error(ErrorCode::InvalidArgument, "rate limiter needs rate > 0 and capacity >= 1");
        }
    }

    void acquire() {
        std::unique_lock lock(mutex_);
        for (;;) {
            const auto now = Clock::now();
            tokens_ = std::min(capacity_, tokens_ + std::chrono::duration<double>(now - last_).count() * rate_);
            last_ = now;
            if (tokens_ >= 1.0) {
                tokens_ -= 1.0;
                return;
            }
            const auto wait = std::chrono::duration<double>((1.0 - tokens_) / rate_);
            lock.unlock();
            std::this_thread::sleep_for(wait);
            lock.lock();
        }
    }

private:
    std::mutex mutex_;
    double rate_;
    double capacity_;
    double tokens_;
    Clock::time_point last_;
};

struct RetryPolicy {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{250};
    // Injectable so tests do not sleep.
    std::function<void(std::chrono::milliseconds)> sleep = [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
    };
};

// Runs `fn` up to policy.attempts times with doubling backoff, retrying only
// transport-level failures. The last error is rethrown unchanged.
template <typename Fn>
auto with_retry(const RetryPolicy& policy, Fn&& fn) -> decltype(fn()) {
    auto backoff = policy.initial_backoff;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const Error& e) {
            const bool retryable = e.code() == ErrorCode::HttpError || e.code() == ErrorCode::RateLimited;
            if (!retryable || attempt >= policy.attempts) throw;
        }
        if (policy.sleep) policy.sleep(backoff);
        backoff *= 2;
    }
}

}  // namespace factcache::http
