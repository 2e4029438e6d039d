#pragma once
// The slow tier: the authoritative external knowledge base behind the fact
// cache. Backed either by a local JSON Lines dump or a remote SPARQL endpoint.

#include <fstream>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/http.hpp"
#include "factcache/kb_client.hpp"
#include "factcache/knowledge_model.hpp"

namespace factcache {

enum class SlowSourceKind { LocalDump, RemoteSparql };

class SlowSource {
public:
    virtual ~SlowSource() = default;

    virtual SlowSourceKind kind() const = 0;
    virtual const std::string& locator() const = 0;

    // All triples with the given subject. Throws Error(SlowUnreachable).
    virtual std::vector<FactTriple> fetch(std::string_view subject) = 0;

    // Time the data currently served was captured.
    virtual Timestamp snapshot_at() const = 0;

    // Re-reads the backing data before a sync. No-op for live endpoints.
    virtual void refresh() {}
};

// ---- dump format ---------------------------------------------------------
// Line 1: {"snapshot_at": "<RFC 3339>"}; then one triple per line with keys
// subject_id, subject_label, relation_id, relation_label, object_id (null for
// literals), object_label, source, fetched_at.

struct TripleDump {
    Timestamp snapshot_at{};
    std::vector<FactTriple> triples;
};

inline nlohmann::ordered_json triple_to_dump_record(const FactTriple& t) {
    nlohmann::ordered_json rec;
    rec["subject_id"] = t.subject;
    rec["subject_label"] = t.subject_text();
    rec["relation_id"] = t.relation;
    rec["relation_label"] = t.relation_text();
    rec["object_id"] = t.object_is_literal ? nlohmann::ordered_json(nullptr) : nlohmann::ordered_json(t.object);
    rec["object_label"] = t.object_text();
    rec["source"] = std::string(to_string(t.source));
    rec["fetched_at"] = text::format_rfc3339(t.fetched_at);
    return rec;
}

inline FactTriple triple_from_dump_record(const nlohmann::json& rec) {
    auto str = [&](const char* key) -> std::string {
        if (!rec.contains(key) || !rec[key].is_string()) {
            throw Error(ErrorCode::SchemaViolation, std::string("dump record lacks string field ") + key);
        }
        return rec[key].get<std::string>();
    };
    FactTriple t;
    t.subject = str("subject_id");
    t.subject_label = str("subject_label");
    t.relation = str("relation_id");
    t.relation_label = str("relation_label");
    t.object_label = str("object_label");
    if (!rec.contains("object_id")) throw Error(ErrorCode::SchemaViolation, "dump record lacks object_id");
    if (rec["object_id"].is_null()) {
        t.object_is_literal = true;
        t.object = t.object_label;
    } else if (rec["object_id"].is_string()) {
        t.object = rec["object_id"].get<std::string>();
    } else {
        throw Error(ErrorCode::SchemaViolation, "object_id must be a string or null");
    }
    t.source = parse_source(str("source"));
    t.fetched_at = text::parse_rfc3339(str("fetched_at"));
    if (rec.contains("version") && rec["version"].is_number_unsigned()) t.version = rec["version"].get<std::uint64_t>();
    t.validate();
    return t;
}

inline TripleDump parse_dump(std::istream& in, const std::string& name = "<dump>") {
    TripleDump dump;
    std::string line;
    std::size_t line_no = 0;
    bool header_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (text::trim(line).empty()) continue;
        const auto where = name + ":" + std::to_string(line_no) + ": ";
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded() || !rec.is_object()) throw Error(ErrorCode::ParseError, where + "not a JSON object");
        if (!header_seen) {
            if (!rec.contains("snapshot_at") || !rec["snapshot_at"].is_string()) {
                throw Error(ErrorCode::SchemaViolation, where + "first record must be {\"snapshot_at\": ...}");
            }
            dump.snapshot_at = text::parse_rfc3339(rec["snapshot_at"].get<std::string>());
            header_seen = true;
            continue;
        }
        try {
            dump.triples.push_back(triple_from_dump_record(rec));
        } catch (const Error& e) {
            throw Error(e.code(), where + e.what());
        }
    }
    if (!header_seen) throw Error(ErrorCode::SchemaViolation, name + ": missing snapshot_at header");
    return dump;
}

inline TripleDump load_dump(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot open dump: " + path);
    return parse_dump(in, path);
}

inline void write_dump(std::ostream& out, const TripleDump& dump) {
    nlohmann::ordered_json header;
    header["snapshot_at"] = text::format_rfc3339(dump.snapshot_at);
    out << header.dump() << '\n';
    for (const auto& t : dump.triples) out << triple_to_dump_record(t).dump() << '\n';
}

// ---- in-memory and dump-backed sources -------------------------------------

// Mutable in-memory tier. Used for tests and for synthetic scenarios; can be
// switched offline to exercise the unreachable path.
class MemorySlowSource : public SlowSource {
public:
    explicit MemorySlowSource(std::string locator = "memory", Timestamp snapshot = {})
        : locator_(std::move(locator)), snapshot_(snapshot) {}

    SlowSourceKind kind() const override { return SlowSourceKind::LocalDump; }
    const std::string& locator() const override { return locator_; }

    std::vector<FactTriple> fetch(std::string_view subject) override {
        std::lock_guard lock(mutex_);
        ++fetch_calls_;
        if (offline_) throw Error(ErrorCode::SlowUnreachable, locator_ + " is offline");
        std::vector<FactTriple> out;
        for (const FactTriple* t : triples_.by_subject(subject)) out.push_back(*t);
        return out;
    }

    Timestamp snapshot_at() const override {
        std::lock_guard lock(mutex_);
        return snapshot_;
    }

    // Replaces any triple with the same (subject, relation).
    void put(FactTriple t) {
        std::lock_guard lock(mutex_);
        for (const FactTriple* existing : triples_.by_subject(t.subject)) {
            if (existing->relation == t.relation) {
                triples_.erase(existing->key());
                break;
            }
        }
        triples_.insert(std::move(t));
    }

    void set_snapshot(Timestamp t) {
        std::lock_guard lock(mutex_);
        snapshot_ = t;
    }
    void set_offline(bool offline) {
        std::lock_guard lock(mutex_);
        offline_ = offline;
    }
    std::size_t fetch_calls() const {
        std::lock_guard lock(mutex_);
        return fetch_calls_;
    }
    TripleSet triples() const {
        std::lock_guard lock(mutex_);
        return triples_;
    }

protected:
    void reset(TripleDump dump) {
        std::lock_guard lock(mutex_);
        triples_ = TripleSet{};
        for (auto& t : dump.triples) triples_.insert(std::move(t));
        snapshot_ = dump.snapshot_at;
    }

private:
    std::string locator_;
    mutable std::mutex mutex_;
    TripleSet triples_;
    Timestamp snapshot_;
    bool offline_ = false;
    std::size_t fetch_calls_ = 0;
};

class LocalDumpSource final : public MemorySlowSource {
public:
    explicit LocalDumpSource(std::string path) : MemorySlowSource(path), path_(std::move(path)) {
        if (path_.empty()) throw Error(ErrorCode::InvalidArgument, "dump locator is empty");
        refresh();
    }

    void refresh() override { reset(load_dump(path_)); }

private:
    std::string path_;
};

// Live Wikidata tier. Each fetch is one SPARQL request, retried per policy.
class RemoteSparqlSource final : public SlowSource {
public:
    RemoteSparqlSource(std::string endpoint, std::shared_ptr<http::Transport> transport,
                       http::RetryPolicy retry = {}, double requests_per_second = 5.0)
        : client_(std::move(endpoint), std::move(transport), requests_per_second), retry_(std::move(retry)) {}

    SlowSourceKind kind() const override { return SlowSourceKind::RemoteSparql; }
    const std::string& locator() const override { return client_.endpoint(); }

    std::vector<FactTriple> fetch(std::string_view subject) override {
        nlohmann::json bindings;
        try {
            bindings = http::with_retry(retry_, [&] { return client_.select(kb::subject_facts_query(subject)); });
        } catch (const Error& e) {
            if (e.code() == ErrorCode::MalformedResponse) throw;
            throw Error(ErrorCode::SlowUnreachable, e.what());
        }
        const auto now = std::chrono::system_clock::now();
        {
            std::lock_guard lock(mutex_);
            last_fetch_ = now;
        }
        std::vector<FactTriple> out;
        for (const auto& b : bindings) {
            const auto pid = kb::wikidata_property_id(kb::detail::require_value(b, "p"));
            if (!pid) continue;
            FactTriple t;
            t.subject = std::string(subject);
            t.subject_label = kb::detail::binding_value(b, "subjectLabel").value_or(std::string(subject));
            t.relation = *pid;
            t.relation_label = *pid;
            const auto object = kb::detail::require_value(b, "object");
            t.object_is_literal = kb::detail::binding_type(b, "object").value_or("uri") != "uri";
            t.object = t.object_is_literal ? object : kb::entity_id_from_uri(object);
            t.object_label = kb::detail::binding_value(b, "objectLabel").value_or(t.object);
            t.source = Source::Wikidata;
            t.fetched_at = now;
            out.push_back(std::move(t));
        }
        return out;
    }

    Timestamp snapshot_at() const override {
        std::lock_guard lock(mutex_);
        return last_fetch_;
    }

private:
    kb::SparqlClient client_;
    http::RetryPolicy retry_;
    mutable std::mutex mutex_;
    Timestamp last_fetch_{};
};

}  // namespace factcache
