#pragma once
// Two-tier fact store. The fast table is a local, indexed, mutable cache
// holding at most one object per (subject, relation); the slow table is the
// external knowledge base it reads through to.

#include <algorithm>
#include <atomic>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "factcache/error.hpp"
#include "factcache/knowledge_model.hpp"
#include "factcache/slow_source.hpp"

namespace factcache {

struct CacheStats {
    std::uint64_t hits = 0;
    std::uint64_t misses = 0;
    std::uint64_t slow_fetches = 0;      // read-through fetches, one per miss
    std::uint64_t prefetch_fetches = 0;  // neighbour fetches, counted apart from misses
    std::uint64_t updates_applied = 0;
    std::uint64_t replacements = 0;
};

struct EditRequest {
    std::string subject;
    std::string relation;
    std::string new_object;
    bool object_is_literal = false;
    // Optional display labels; ids are shown when absent.
    std::string subject_label;
    std::string relation_label;
    std::string object_label;
    Source source = Source::Synthetic;
    Timestamp issued_at = std::chrono::system_clock::now();

    void validate() const {
        if (subject.empty()) throw Error(ErrorCode::InvalidArgument, "edit subject is empty");
        if (relation.empty()) throw Error(ErrorCode::InvalidArgument, "edit relation is empty");
    }
};

enum class UpdateOutcome { Replaced, Inserted };

inline std::string_view to_string(UpdateOutcome o) {
    return o == UpdateOutcome::Replaced ? "REPLACED" : "INSERTED";
}

struct UpdateResult {
    UpdateOutcome outcome;
    bool changed;  // false for an idempotent re-apply
    std::uint64_t version;
};

struct RetrieveResult {
    TripleSet triples;
    bool hit = false;
};

struct StoreOptions {
    std::optional<std::size_t> capacity;  // unbounded when empty
    std::size_t prefetch_depth = 1;
};

class TieredFactStore {
public:
    explicit TieredFactStore(std::shared_ptr<SlowSource> slow, StoreOptions options = {})
        : slow_(std::move(slow)), options_(options) {
        if (!slow_) throw Error(ErrorCode::InvalidArgument, "fact store needs a slow source");
        if (options_.capacity && *options_.capacity == 0) {
            throw Error(ErrorCode::InvalidArgument, "capacity must be positive when set");
        }
    }

    TieredFactStore(const TieredFactStore&) = delete;
    TieredFactStore& operator=(const TieredFactStore&) = delete;

    const StoreOptions& options() const { return options_; }
    SlowSource& slow() { return *slow_; }

    TripleSet retrieve(std::string_view entity) { return retrieve_traced(entity).triples; }

    // Fast-table lookup with read-through on miss. An empty fast result is a
    // miss; absence is not cached, so a true negative is fetched every time.
    RetrieveResult retrieve_traced(std::string_view entity) {
        if (entity.empty()) throw Error(ErrorCode::InvalidArgument, "entity is empty");
        if (auto cached = lookup(entity)) {
            stats_.hits.fetch_add(1, std::memory_order_relaxed);
            return {std::move(*cached), true};
        }

        stats_.slow_fetches.fetch_add(1, std::memory_order_relaxed);
        const std::vector<FactTriple> fetched = slow_->fetch(entity);
        stats_.misses.fetch_add(1, std::memory_order_relaxed);

        TripleSet seeds;
        {
            std::unique_lock lock(mutex_);
            for (const auto& t : fetched) insert_read_only(t);
            enforce_capacity({std::string(entity)});
            seeds = subject_triples(entity);
        }
        if (options_.prefetch_depth > 0 && !seeds.empty()) {
            try {
                prefetch_neighbors(seeds);
            } catch (const Error&) {
                // Partial prefetch stays; the retrieval itself succeeded.
                prefetch_errors_.fetch_add(1, std::memory_order_relaxed);
            }
        }
        return {std::move(seeds), false};
    }

    // Pulls the slow-tier triples of every entity object reachable from
    // `seeds` within prefetch_depth hops. Returns the number newly inserted.
    std::size_t prefetch_neighbors(const TripleSet& seeds) {
        std::size_t added = 0;
        std::set<std::string> protected_subjects;
        std::set<std::string> visited;
        std::vector<std::string> level;
        for (const auto& t : seeds) {
            protected_subjects.insert(t.subject);
            visited.insert(t.subject);
        }
        for (const auto& t : seeds) {
            if (!t.object_is_literal && visited.insert(t.object).second) level.push_back(t.object);
        }
        for (std::size_t depth = 0; depth < options_.prefetch_depth && !level.empty(); ++depth) {
            std::vector<std::string> next;
            for (const auto& entity : level) {
                if (has_subject(entity)) continue;
                stats_.prefetch_fetches.fetch_add(1, std::memory_order_relaxed);
                const std::vector<FactTriple> fetched = slow_->fetch(entity);
                std::unique_lock lock(mutex_);
                for (const auto& t : fetched) {
                    if (insert_read_only(t)) ++added;
                    if (!t.object_is_literal && visited.insert(t.object).second) next.push_back(t.object);
                }
                enforce_capacity(protected_subjects);
            }
            level = std::move(next);
        }
        return added;
    }

    UpdateResult apply_update(const EditRequest& edit) {
        edit.validate();
        std::unique_lock lock(mutex_);
        return write(edit, edit.source);
    }

    UpdateResult inject_manual(const EditRequest& edit) {
        edit.validate();
        std::unique_lock lock(mutex_);
        return write(edit, Source::Manual);
    }

    // Re-fetches every cached subject and applies the slow tier's objects.
    // A manual triple issued after the slow snapshot is kept. Each subject is
    // fetched before anything is written, so a failure leaves it untouched.
    std::size_t sync() {
        slow_->refresh();
        const Timestamp snapshot = slow_->snapshot_at();
        std::vector<std::string> subjects;
        {
            std::shared_lock lock(mutex_);
            subjects.reserve(subjects_.size());
            for (const auto& [s, _] : subjects_) subjects.push_back(s);
        }
        std::sort(subjects.begin(), subjects.end());

        std::size_t changed = 0;
        for (const auto& subject : subjects) {
            const std::vector<FactTriple> fetched = slow_->fetch(subject);
            std::unique_lock lock(mutex_);
            for (const auto& t : fetched) {
                const Slot* slot = find_slot(t.subject, t.relation);
                if (slot && slot->triple.source == Source::Manual && slot->triple.fetched_at > snapshot) continue;
                EditRequest e;
                e.subject = t.subject;
                e.relation = t.relation;
                e.new_object = t.object;
                e.object_is_literal = t.object_is_literal;
                e.subject_label = t.subject_label;
                e.relation_label = t.relation_label;
                e.object_label = t.object_label;
                e.issued_at = t.fetched_at;
                if (write(e, t.source, /*edited=*/false).changed) ++changed;
            }
            enforce_capacity({});
        }
        return changed;
    }

    // Bulk read-only insert (cache warm-up from a dump). Returns inserted count.
    std::size_t load(const std::vector<FactTriple>& triples) {
        std::unique_lock lock(mutex_);
        std::size_t added = 0;
        for (const auto& t : triples) {
            t.validate();
            if (insert_read_only(t)) ++added;
        }
        enforce_capacity({});
        return added;
    }

    CacheStats stats() const {
        CacheStats s;
        s.hits = stats_.hits.load();
        s.misses = stats_.misses.load();
        s.slow_fetches = stats_.slow_fetches.load();
        s.prefetch_fetches = stats_.prefetch_fetches.load();
        s.updates_applied = stats_.updates_applied.load();
        s.replacements = stats_.replacements.load();
        return s;
    }

    std::uint64_t prefetch_errors() const { return prefetch_errors_.load(); }

    std::size_t size() const {
        std::shared_lock lock(mutex_);
        return count_;
    }

    bool has_subject(std::string_view entity) const {
        std::shared_lock lock(mutex_);
        return subjects_.count(std::string(entity)) > 0;
    }

    // Every fast-table triple.
    TripleSet snapshot() const {
        std::shared_lock lock(mutex_);
        TripleSet out;
        for (const auto& [_, entry] : subjects_) {
            for (const auto& [__, slot] : entry.by_relation) out.insert(slot.triple);
        }
        return out;
    }

    // ---- persistence (used by the CLI between invocations) ----------------

    nlohmann::ordered_json export_state() const {
        std::shared_lock lock(mutex_);
        nlohmann::ordered_json doc;
        const auto s = stats();
        doc["stats"] = {{"hits", s.hits},
                        {"misses", s.misses},
                        {"slow_fetches", s.slow_fetches},
                        {"prefetch_fetches", s.prefetch_fetches},
                        {"updates_applied", s.updates_applied},
                        {"replacements", s.replacements}};
        std::vector<const Slot*> slots;
        for (const auto& [_, entry] : subjects_) {
            for (const auto& [__, slot] : entry.by_relation) slots.push_back(&slot);
        }
        std::sort(slots.begin(), slots.end(),
                  [](const Slot* a, const Slot* b) { return a->triple.key() < b->triple.key(); });
        auto triples = nlohmann::ordered_json::array();
        for (const Slot* slot : slots) {
            auto rec = triple_to_dump_record(slot->triple);
            rec["version"] = slot->triple.version;
            rec["edited"] = slot->edited;
            triples.push_back(std::move(rec));
        }
        doc["triples"] = std::move(triples);
        return doc;
    }

    void import_state(const nlohmann::json& doc) {
        std::unique_lock lock(mutex_);
        subjects_.clear();
        lru_.clear();
        edit_order_.clear();
        versions_.clear();
        count_ = 0;
        if (doc.contains("stats")) {
            const auto& s = doc["stats"];
            stats_.hits = s.value("hits", std::uint64_t{0});
            stats_.misses = s.value("misses", std::uint64_t{0});
            stats_.slow_fetches = s.value("slow_fetches", std::uint64_t{0});
            stats_.prefetch_fetches = s.value("prefetch_fetches", std::uint64_t{0});
            stats_.updates_applied = s.value("updates_applied", std::uint64_t{0});
            stats_.replacements = s.value("replacements", std::uint64_t{0});
        }
        for (const auto& rec : doc.value("triples", nlohmann::json::array())) {
            FactTriple t = triple_from_dump_record(rec);
            const bool edited = rec.value("edited", false);
            versions_[version_key(t.subject, t.relation)] = t.version;
            place(std::move(t), edited);
        }
    }

private:
    struct Slot {
        FactTriple triple;
        bool edited = false;
        std::uint64_t write_seq = 0;
    };

    struct SubjectEntry {
        std::map<std::string, Slot> by_relation;
        std::list<std::string>::iterator lru_pos;
    };

    struct AtomicStats {
        std::atomic<std::uint64_t> hits{0};
        std::atomic<std::uint64_t> misses{0};
        std::atomic<std::uint64_t> slow_fetches{0};
        std::atomic<std::uint64_t> prefetch_fetches{0};
        std::atomic<std::uint64_t> updates_applied{0};
        std::atomic<std::uint64_t> replacements{0};
    };

    static std::string version_key(std::string_view s, std::string_view r) {
        std::string k(s);
        k.push_back('\x1f');
        k.append(r);
        return k;
    }

    std::optional<TripleSet> lookup(std::string_view entity) {
        // LRU bookkeeping mutates, so a bounded store takes the exclusive lock.
        if (options_.capacity) {
            std::unique_lock lock(mutex_);
            auto it = subjects_.find(std::string(entity));
            if (it == subjects_.end() || it->second.by_relation.empty()) return std::nullopt;
            lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
            return subject_triples(entity);
        }
        std::shared_lock lock(mutex_);
        auto it = subjects_.find(std::string(entity));
        if (it == subjects_.end() || it->second.by_relation.empty()) return std::nullopt;
        return subject_triples(entity);
    }

    TripleSet subject_triples(std::string_view entity) const {
        TripleSet out;
        auto it = subjects_.find(std::string(entity));
        if (it == subjects_.end()) return out;
        for (const auto& [_, slot] : it->second.by_relation) out.insert(slot.triple);
        return out;
    }

    const Slot* find_slot(const std::string& subject, const std::string& relation) const {
        auto it = subjects_.find(subject);
        if (it == subjects_.end()) return nullptr;
        auto rit = it->second.by_relation.find(relation);
        return rit == it->second.by_relation.end() ? nullptr : &rit->second;
    }

    Slot& place(FactTriple t, bool edited) {
        auto [it, fresh] = subjects_.try_emplace(t.subject);
        if (fresh) {
            lru_.push_front(t.subject);
            it->second.lru_pos = lru_.begin();
        } else {
            lru_.splice(lru_.begin(), lru_, it->second.lru_pos);
        }
        const std::string relation = t.relation;
        auto [sit, inserted] = it->second.by_relation.try_emplace(relation);
        if (inserted) ++count_;
        Slot& slot = sit->second;
        if (slot.edited) edit_order_.erase(slot.write_seq);
        slot.triple = std::move(t);
        slot.edited = edited;
        slot.write_seq = ++write_seq_;
        if (edited) edit_order_.emplace(slot.write_seq, std::pair{slot.triple.subject, relation});
        return slot;
    }

    // Read-through insert; never overwrites an existing (subject, relation).
    bool insert_read_only(const FactTriple& t) {
        if (find_slot(t.subject, t.relation)) return false;
        FactTriple copy = t;
        auto& v = versions_[version_key(t.subject, t.relation)];
        copy.version = v == 0 ? 1 : v + 1;
        v = copy.version;
        place(std::move(copy), false);
        return true;
    }

    UpdateResult write(const EditRequest& edit, Source source, bool edited = true) {
        stats_.updates_applied.fetch_add(1, std::memory_order_relaxed);
        const Slot* existing = find_slot(edit.subject, edit.relation);
        auto& version = versions_[version_key(edit.subject, edit.relation)];
        if (existing && existing->triple.object == edit.new_object &&
            existing->triple.object_is_literal == edit.object_is_literal) {
            return {UpdateOutcome::Replaced, false, existing->triple.version};
        }

        FactTriple t;
        t.subject = edit.subject;
        t.relation = edit.relation;
        t.object = edit.new_object;
        t.object_is_literal = edit.object_is_literal;
        t.subject_label = edit.subject_label;
        t.relation_label = edit.relation_label;
        t.object_label = edit.object_label;
        t.source = source;
        t.fetched_at = edit.issued_at;
        if (existing) {
            // Keep labels the edit did not supply.
            if (t.subject_label.empty()) t.subject_label = existing->triple.subject_label;
            if (t.relation_label.empty()) t.relation_label = existing->triple.relation_label;
        }
        t.version = version + 1;
        version = t.version;
        const bool replaced = existing != nullptr;
        place(std::move(t), edited);
        if (replaced) stats_.replacements.fetch_add(1, std::memory_order_relaxed);
        enforce_capacity({edit.subject});
        return {replaced ? UpdateOutcome::Replaced : UpdateOutcome::Inserted, true, version};
    }

    void erase_slot(std::unordered_map<std::string, SubjectEntry>::iterator sit,
                    std::map<std::string, Slot>::iterator rit) {
        if (rit->second.edited) edit_order_.erase(rit->second.write_seq);
        sit->second.by_relation.erase(rit);
        --count_;
        if (sit->second.by_relation.empty()) {
            lru_.erase(sit->second.lru_pos);
            subjects_.erase(sit);
        }
    }

    // Evicts read-only triples of the least recently used subjects first,
    // then the oldest edits. Protected subjects go last.
    void enforce_capacity(const std::set<std::string>& protected_subjects) {
        if (!options_.capacity) return;
        const std::size_t cap = *options_.capacity;
        auto evict_read_only = [&](bool allow_protected) {
            std::vector<std::string> order(lru_.rbegin(), lru_.rend());
            for (const auto& subject : order) {
                if (count_ <= cap) return;
                if (!allow_protected && protected_subjects.count(subject)) continue;
                auto sit = subjects_.find(subject);
                auto& rels = sit->second.by_relation;
                std::vector<std::string> victims;
                for (const auto& [relation, slot] : rels) {
                    if (!slot.edited) victims.push_back(relation);
                }
                for (const auto& relation : victims) {
                    if (count_ <= cap) return;
                    sit = subjects_.find(subject);
                    erase_slot(sit, sit->second.by_relation.find(relation));
                }
            }
        };
        evict_read_only(false);
        while (count_ > cap && !edit_order_.empty()) {
            const auto [subject, relation] = edit_order_.begin()->second;
            auto sit = subjects_.find(subject);
            erase_slot(sit, sit->second.by_relation.find(relation));
        }
        if (count_ > cap) evict_read_only(true);
    }

    std::shared_ptr<SlowSource> slow_;
    StoreOptions options_;
    mutable std::shared_mutex mutex_;
    std::unordered_map<std::string, SubjectEntry> subjects_;
    std::list<std::string> lru_;  // front = most recently used
    std::map<std::uint64_t, std::pair<std::string, std::string>> edit_order_;
    std::unordered_map<std::string, std::uint64_t> versions_;
    std::size_t count_ = 0;
    std::uint64_t write_seq_ = 0;
    AtomicStats stats_;
    std::atomic<std::uint64_t> prefetch_errors_{0};
};

}  // namespace factcache
