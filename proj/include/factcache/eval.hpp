#pragma once
// Evaluation drivers: the main single-hop evaluation (EM per task, locality
// drawdown, NKL, SURE), the repeated-update transition scenario, the store
// scale scenario, and multi-hop chains. Reports render as JSON or a table.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "factcache/dataset.hpp"
#include "factcache/error.hpp"
#include "factcache/fact_cache.hpp"
#include "factcache/metrics.hpp"
#include "factcache/model_client.hpp"
#include "factcache/pipeline.hpp"
#include "factcache/slow_source.hpp"
#include "factcache/synthetic.hpp"

namespace factcache {

struct TaskScore {
    double em = 0.0;       // edited model, percent
    double base_em = 0.0;  // evidence suppressed, percent
    std::size_t count = 0;
};

struct EvalReport {
    std::map<TaskKind, TaskScore> tasks;
    double em_macro = 0.0;
    double em_micro = 0.0;
    double locality_base_em = 0.0;
    double locality_edited_em = 0.0;
    double dd = 0.0;
    std::optional<double> nkl;  // raw mean KL; nullopt when the model gives no distributions
    double sure = 0.0;
    SureParams params;
    std::chrono::nanoseconds wall_time{0};
    std::size_t items = 0;

    std::optional<double> nkl_reported() const {
        if (!nkl) return std::nullopt;
        return *nkl * kNklReportScale;
    }
};

namespace detail {

inline double seconds(std::chrono::nanoseconds d) { return std::chrono::duration<double>(d).count(); }

inline double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    const auto n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

inline Prediction prediction_for(const BenchmarkItem& item, TaskKind task, std::string answer) {
    Prediction p{std::move(answer), item.gold_for(task), std::nullopt};
    if (task == TaskKind::Choice) p.gold_letter = item.choice_letter();
    return p;
}

}  // namespace detail

// Applies every item's triple as an edit, then scores edited answers against
// base answers (same model, evidence suppressed). Wall time covers both the
// edits and the generation.
inline EvalReport run_main_eval(const std::vector<BenchmarkItem>& items, Pipeline& pipeline, ModelClient& model,
                                const SureParams& params = {}) {
    if (items.empty()) throw Error(ErrorCode::EmptySet, "no benchmark items to evaluate");
    params.validate();
    const auto start = std::chrono::steady_clock::now();
    for (const auto& item : items) pipeline.apply_edit(item.triple);

    std::map<TaskKind, std::vector<Prediction>> edited;
    std::map<TaskKind, std::vector<Prediction>> base;
    std::vector<Prediction> loc_base;
    std::vector<Prediction> loc_edited;
    std::vector<std::optional<Distribution>> dist_base;
    std::vector<std::optional<Distribution>> dist_edited;

    for (const auto& item : items) {
        for (TaskKind task : kSingleHopTasks) {
            const std::string query = item.query_for(task);
            edited[task].push_back(detail::prediction_for(item, task, pipeline.answer(query, task, model).text));
            base[task].push_back(detail::prediction_for(item, task, pipeline.answer(query, task, model, false).text));
        }
        auto b = pipeline.answer(item.locality_query, TaskKind::Locality, model, false);
        auto e = pipeline.answer(item.locality_query, TaskKind::Locality, model, true);
        loc_base.push_back(detail::prediction_for(item, TaskKind::Locality, b.text));
        loc_edited.push_back(detail::prediction_for(item, TaskKind::Locality, e.text));
        if (b.distribution && e.distribution) {
            auto [p, q] = align_supports(*b.distribution, *e.distribution);
            dist_base.emplace_back(std::move(p));
            dist_edited.emplace_back(std::move(q));
        } else {
            dist_base.emplace_back(std::nullopt);
            dist_edited.emplace_back(std::nullopt);
        }
    }

    EvalReport report;
    report.params = params;
    report.items = items.size();
    std::size_t hits = 0;
    std::size_t total = 0;
    double macro = 0.0;
    for (TaskKind task : kSingleHopTasks) {
        TaskScore s;
        s.em = em_score(edited[task]);
        s.base_em = em_score(base[task]);
        s.count = edited[task].size();
        for (const auto& p : edited[task]) hits += exact_match(p) ? 1 : 0;
        total += s.count;
        macro += s.em;
        report.tasks[task] = s;
    }
    report.em_macro = macro / static_cast<double>(std::size(kSingleHopTasks));
    report.em_micro = 100.0 * static_cast<double>(hits) / static_cast<double>(total);
    report.locality_base_em = em_score(loc_base);
    report.locality_edited_em = em_score(loc_edited);
    report.tasks[TaskKind::Locality] = {report.locality_edited_em, report.locality_base_em, loc_edited.size()};
    report.dd = drawdown(report.locality_base_em, report.locality_edited_em);
    report.nkl = nkl(dist_base, dist_edited);
    report.sure = sure(report.em_macro, report.dd, params);
    report.wall_time = std::chrono::steady_clock::now() - start;
    return report;
}

// ---- scenario environments --------------------------------------------------

using SlowSourceFactory = std::function<std::shared_ptr<SlowSource>()>;

inline SlowSourceFactory empty_slow_source() {
    return [] { return std::make_shared<MemorySlowSource>("synthetic"); };
}

// A fresh store, alias index and pipeline; scenarios build one per run so
// runs do not see each other's edits.
struct ScenarioEnv {
    std::unique_ptr<TieredFactStore> store;
    std::unique_ptr<Pipeline> pipeline;

    ScenarioEnv(const SlowSourceFactory& slow, StoreOptions store_options, PipelineOptions pipeline_options)
        : store(std::make_unique<TieredFactStore>(slow(), store_options)),
          pipeline(std::make_unique<Pipeline>(*store, std::make_shared<AliasIndex>(), pipeline_options)) {}
};

struct ScenarioSettings {
    SlowSourceFactory slow = empty_slow_source();
    StoreOptions store;
    PipelineOptions pipeline;
};

// ---- repeated updates ----------------------------------------------------

struct TransitionReport {
    std::map<std::size_t, double> em_by_count;  // QA EM after n updates per fact
    double control_em = 0.0;                    // only superseded values written
    std::size_t items = 0;
};

inline FactTriple superseded_value(const FactTriple& t, std::size_t step) {
    FactTriple s = t;
    s.object = t.object + "~" + std::to_string(step);
    s.object_label = "Former " + t.object_text() + " " + std::to_string(step);
    s.object_is_literal = t.object_is_literal;
    return s;
}

// For each n, writes n distinct values per fact (the last being the gold)
// into a fresh store and scores QA. The control writes only a superseded
// value, standing in for a cache that never received the final update.
inline TransitionReport run_transition_scenario(const std::vector<BenchmarkItem>& items, ModelClient& model,
                                                const std::vector<std::size_t>& edit_counts,
                                                const ScenarioSettings& settings = {}) {
    if (items.empty()) throw Error(ErrorCode::EmptySet, "no benchmark items for the transition scenario");
    TransitionReport report;
    report.items = items.size();
    auto score = [&](Pipeline& pipeline) {
        std::vector<Prediction> preds;
        for (const auto& item : items) {
            const auto q = item.query_for(TaskKind::QA);
            preds.push_back(detail::prediction_for(item, TaskKind::QA, pipeline.answer(q, TaskKind::QA, model).text));
        }
        return em_score(preds);
    };
    for (std::size_t n : edit_counts) {
        if (n < 1) throw Error(ErrorCode::InvalidArgument, "edit counts must be >= 1");
        ScenarioEnv env(settings.slow, settings.store, settings.pipeline);
        for (const auto& item : items) {
            for (std::size_t step = 1; step < n; ++step) env.pipeline->apply_edit(superseded_value(item.triple, step));
            env.pipeline->apply_edit(item.triple);
        }
        report.em_by_count[n] = score(*env.pipeline);
    }
    ScenarioEnv control(settings.slow, settings.store, settings.pipeline);
    for (const auto& item : items) control.pipeline->apply_edit(superseded_value(item.triple, 1));
    report.control_em = score(*control.pipeline);
    return report;
}

// ---- store scale ------------------------------------------------------------

struct ScalePoint {
    std::size_t size = 0;
    std::size_t probes = 0;
    double em = 0.0;
    double median_answer_latency_s = 0.0;
    double median_lookup_latency_s = 0.0;
};

struct ScaleReport {
    std::vector<ScalePoint> points;

    const ScalePoint* at(std::size_t size) const {
        for (const auto& p : points) {
            if (p.size == size) return &p;
        }
        return nullptr;
    }
};

// Injects `size` synthetic edits per point and probes up to `max_probes`
// evenly spaced facts. Lookup latency times a warm fast-table retrieve alone.
inline ScaleReport run_scale_scenario(ModelClient& model, const std::vector<std::size_t>& sizes,
                                      const ScenarioSettings& settings = {}, std::size_t max_probes = 100,
                                      std::size_t lookup_repeats = 5) {
    const auto& rels = builtin_relations();
    std::vector<const RelationRef*> relations;
    for (const auto& [id, r] : rels) relations.push_back(&r);

    ScaleReport report;
    for (std::size_t size : sizes) {
        if (size < 1) throw Error(ErrorCode::InvalidArgument, "scale sizes must be >= 1");
        ScenarioEnv env(settings.slow, settings.store, settings.pipeline);
        std::vector<FactTriple> facts;
        facts.reserve(size);
        for (std::size_t i = 0; i < size; ++i) {
            const auto num = std::to_string(i);
            facts.push_back(labelled_triple("S" + num, "Subject " + num, *relations[i % relations.size()], "O" + num,
                                            "Object " + num));
            env.pipeline->apply_edit(facts.back());
        }
        const std::size_t probes = std::min(size, max_probes);
        std::vector<Prediction> preds;
        std::vector<double> answer_latency;
        std::vector<double> lookup_latency;
        for (std::size_t p = 0; p < probes; ++p) {
            const FactTriple& fact = facts[p * size / probes];
            const RelationRef& rel = rels.at(fact.relation);
            const std::string query = fill_template(rel.task_templates.at(TaskKind::QA).front(), fact.subject_text());
            const auto t0 = std::chrono::steady_clock::now();
            const auto answer = env.pipeline->answer(query, TaskKind::QA, model);
            answer_latency.push_back(detail::seconds(std::chrono::steady_clock::now() - t0));
            preds.push_back({answer.text, fact.object_text(), std::nullopt});
            for (std::size_t r = 0; r < lookup_repeats; ++r) {
                const auto l0 = std::chrono::steady_clock::now();
                const auto found = env.store->retrieve(fact.subject);
                lookup_latency.push_back(detail::seconds(std::chrono::steady_clock::now() - l0));
                if (found.empty()) throw Error(ErrorCode::NotFound, "probe subject vanished: " + fact.subject);
            }
        }
        report.points.push_back({size, probes, em_score(preds), detail::median(answer_latency),
                                 detail::median(lookup_latency)});
    }
    return report;
}

// ---- multi-hop ----------------------------------------------------------------

struct MultiHopFailure {
    std::size_t item = 0;
    MultiHopMode mode = MultiHopMode::Decompose;
    std::size_t hop = 0;
};

struct MultiHopReport {
    // (hops, mode) -> EM as a fraction in [0, 1]
    std::map<std::pair<std::size_t, MultiHopMode>, double> em;
    std::map<std::pair<std::size_t, MultiHopMode>, std::size_t> counts;
    std::vector<MultiHopFailure> failures;

    // Published full-scale multi-hop results, printed alongside ours for reading.
    static const std::map<std::pair<std::size_t, MultiHopMode>, double>& reference() {
        static const std::map<std::pair<std::size_t, MultiHopMode>, double> ref = {
            {{2, MultiHopMode::Decompose}, 0.960}, {{3, MultiHopMode::Decompose}, 0.786},
            {{4, MultiHopMode::Decompose}, 0.427}, {{5, MultiHopMode::Decompose}, 0.167},
            {{2, MultiHopMode::Dialogue}, 0.946},  {{3, MultiHopMode::Dialogue}, 0.757},
            {{4, MultiHopMode::Dialogue}, 0.390},  {{5, MultiHopMode::Dialogue}, 0.181},
        };
        return ref;
    }
};

// Loads every chain (minus `drop_hop`, 1-based, when set) into a fresh store
// and answers each item in both modes. A HOP_FAILED answer scores 0 and is
// listed in `failures`.
inline MultiHopReport run_multihop_scenario(const std::vector<MultiHopItem>& items, ModelClient& model,
                                            const ScenarioSettings& settings = {},
                                            std::optional<std::size_t> drop_hop = std::nullopt) {
    if (items.empty()) throw Error(ErrorCode::EmptySet, "no multi-hop items");
    ScenarioEnv env(settings.slow, settings.store, settings.pipeline);
    for (const auto& item : items) {
        for (std::size_t h = 0; h < item.hops(); ++h) {
            const auto& t = item.chain[h];
            env.pipeline->aliases().add_triple(t);
            if (!drop_hop || *drop_hop != h + 1) env.pipeline->apply_edit(t);
        }
    }
    MultiHopReport report;
    std::map<std::pair<std::size_t, MultiHopMode>, std::size_t> hits;
    for (std::size_t i = 0; i < items.size(); ++i) {
        const auto& item = items[i];
        for (MultiHopMode mode : {MultiHopMode::Decompose, MultiHopMode::Dialogue}) {
            const auto key = std::make_pair(item.hops(), mode);
            ++report.counts[key];
            try {
                const auto answer = env.pipeline->answer_multihop(item, mode, model);
                if (exact_match({answer.text, item.final_gold, std::nullopt})) ++hits[key];
            } catch (const HopFailed& e) {
                report.failures.push_back({i, mode, e.hop()});
            }
        }
    }
    for (const auto& [key, n] : report.counts) report.em[key] = static_cast<double>(hits[key]) / static_cast<double>(n);
    return report;
}

// ---- rendering ------------------------------------------------------------------

inline nlohmann::ordered_json to_json(const EvalReport& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json tasks = nlohmann::ordered_json::object();
    for (const auto& [task, s] : r.tasks) {
        tasks[std::string(to_string(task))] = {{"em", s.em}, {"base_em", s.base_em}, {"count", s.count}};
    }
    j["tasks"] = tasks;
    j["em"] = r.em_macro;
    j["em_micro"] = r.em_micro;
    j["locality_base_em"] = r.locality_base_em;
    j["locality_edited_em"] = r.locality_edited_em;
    j["dd"] = r.dd;
    j["nkl_x1e-4"] = r.nkl_reported() ? nlohmann::ordered_json(*r.nkl_reported()) : nlohmann::ordered_json(nullptr);
    j["sure"] = r.sure;
    j["sure_params"] = {{"a", r.params.a}, {"b", r.params.b}, {"alpha", r.params.alpha}, {"beta", r.params.beta}};
    j["wall_time_s"] = detail::seconds(r.wall_time);
    j["items"] = r.items;
    return j;
}

inline nlohmann::ordered_json to_json(const TransitionReport& r) {
    nlohmann::ordered_json j;
    nlohmann::ordered_json curve = nlohmann::ordered_json::array();
    for (const auto& [n, em] : r.em_by_count) curve.push_back({{"edits", n}, {"em", em}});
    j["curve"] = curve;
    j["control_em"] = r.control_em;
    j["items"] = r.items;
    return j;
}

inline nlohmann::ordered_json to_json(const ScaleReport& r) {
    nlohmann::ordered_json points = nlohmann::ordered_json::array();
    for (const auto& p : r.points) {
        points.push_back({{"facts", p.size},
                          {"probes", p.probes},
                          {"em", p.em},
                          {"median_answer_latency_s", p.median_answer_latency_s},
                          {"median_lookup_latency_s", p.median_lookup_latency_s}});
    }
    return {{"points", points}};
}

inline nlohmann::ordered_json to_json(const MultiHopReport& r) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    for (const auto& [key, em] : r.em) {
        auto ref = MultiHopReport::reference().find(key);
        rows.push_back({{"hops", key.first},
                        {"mode", std::string(to_string(key.second))},
                        {"em", em},
                        {"count", r.counts.at(key)},
                        {"reference_em", ref == MultiHopReport::reference().end() ? nlohmann::ordered_json(nullptr)
                                                                                  : nlohmann::ordered_json(ref->second)}});
    }
    nlohmann::ordered_json failures = nlohmann::ordered_json::array();
    for (const auto& f : r.failures) {
        failures.push_back({{"item", f.item}, {"mode", std::string(to_string(f.mode))}, {"hop", f.hop}});
    }
    return {{"rows", rows}, {"failures", failures}};
}

namespace detail {

inline std::string fixed(double v, int precision = 2) {
    std::ostringstream os;
    os << std::fixed << std::setprecision(precision) << v;
    return os.str();
}

}  // namespace detail

inline std::string to_table(const EvalReport& r) {
    std::ostringstream os;
    os << std::left << std::setw(12) << "task" << std::right << std::setw(10) << "EM" << std::setw(10) << "base"
       << std::setw(8) << "n" << "\n";
    for (const auto& [task, s] : r.tasks) {
        os << std::left << std::setw(12) << to_string(task) << std::right << std::setw(10) << detail::fixed(s.em)
           << std::setw(10) << detail::fixed(s.base_em) << std::setw(8) << s.count << "\n";
    }
    os << "EM (macro)   " << detail::fixed(r.em_macro) << "\n";
    os << "EM (micro)   " << detail::fixed(r.em_micro) << "\n";
    os << "DD           " << detail::fixed(r.dd) << "\n";
    os << "NKL (1e-4)   " << (r.nkl ? detail::fixed(*r.nkl_reported(), 4) : std::string("*")) << "\n";
    os << "SURE         " << detail::fixed(r.sure) << "\n";
    os << "wall time s  " << detail::fixed(detail::seconds(r.wall_time), 3) << "\n";
    return os.str();
}

inline std::string to_table(const TransitionReport& r) {
    std::ostringstream os;
    os << std::setw(8) << "edits" << std::setw(10) << "EM" << "\n";
    for (const auto& [n, em] : r.em_by_count) os << std::setw(8) << n << std::setw(10) << detail::fixed(em) << "\n";
    os << "control (updates withheld) EM " << detail::fixed(r.control_em) << "\n";
    return os.str();
}

inline std::string to_table(const ScaleReport& r) {
    std::ostringstream os;
    os << std::setw(10) << "facts" << std::setw(8) << "probes" << std::setw(10) << "EM" << std::setw(16)
       << "answer ms" << std::setw(16) << "lookup ms" << "\n";
    for (const auto& p : r.points) {
        os << std::setw(10) << p.size << std::setw(8) << p.probes << std::setw(10) << detail::fixed(p.em)
           << std::setw(16) << detail::fixed(p.median_answer_latency_s * 1e3, 4) << std::setw(16)
           << detail::fixed(p.median_lookup_latency_s * 1e3, 4) << "\n";
    }
    return os.str();
}

inline std::string to_table(const MultiHopReport& r) {
    std::ostringstream os;
    os << std::setw(6) << "hops" << std::setw(12) << "mode" << std::setw(8) << "EM" << std::setw(12) << "reference"
       << "\n";
    for (const auto& [key, em] : r.em) {
        auto ref = MultiHopReport::reference().find(key);
        os << std::setw(6) << key.first << std::setw(12) << to_string(key.second) << std::setw(8)
           << detail::fixed(em, 3) << std::setw(12)
           << (ref == MultiHopReport::reference().end() ? std::string("-") : detail::fixed(ref->second, 3)) << "\n";
    }
    os << "hop failures " << r.failures.size() << "\n";
    return os.str();
}

}  // namespace factcache
