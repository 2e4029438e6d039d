// factcache: command-line front end for the tiered fact cache, the
// answering pipeline, dataset tooling and the evaluation drivers.
//
// Machine-readable output goes to stdout, diagnostics to stderr. The fast
// table and its counters persist between invocations in cache.state_path.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "factcache/factcache.hpp"

namespace fc = factcache;

namespace {

struct Globals {
    std::string config_path = "factcache.json";
    std::optional<std::uint64_t> seed;
    std::string format = "table";
};

std::shared_ptr<fc::http::Transport> transport_for(const fc::Config& cfg, const std::string& fixture) {
    if (!fixture.empty()) {
        return fc::http::FixtureTransport::from_file(cfg.path(fixture));
    }
    return std::make_shared<fc::http::HttplibTransport>();
}

std::shared_ptr<fc::SlowSource> make_slow_source(const fc::Config& cfg) {
    if (cfg.slow_source.kind == fc::SlowSourceKind::LocalDump) {
        if (cfg.slow_source.locator.empty()) throw fc::Error(fc::ErrorCode::ConfigError, "slow_source.locator is empty");
        return std::make_shared<fc::LocalDumpSource>(cfg.path(cfg.slow_source.locator));
    }
    return std::make_shared<fc::RemoteSparqlSource>(cfg.slow_source.locator, transport_for(cfg, cfg.slow_source.fixture),
                                                    fc::http::RetryPolicy{}, cfg.kb.requests_per_second);
}

std::unique_ptr<fc::ModelClient> make_model(const fc::Config& cfg) {
    if (cfg.model.kind == fc::ModelKind::MockTable) {
        if (cfg.model.prior_table.empty()) return std::make_unique<fc::MockModel>();
        return std::make_unique<fc::MockModel>(fc::MockModel::from_file(cfg.path(cfg.model.prior_table)));
    }
    fc::HttpModelOptions opts;
    opts.endpoint = cfg.model.endpoint;
    opts.api_key_env = cfg.model.api_key_env;
    opts.max_tokens = cfg.model.max_tokens;
    opts.retry_budget = cfg.model.retry_budget;
    return std::make_unique<fc::HttpCompletionModel>(opts, transport_for(cfg, cfg.model.fixture));
}

fc::StoreOptions store_options(const fc::Config& cfg) {
    fc::StoreOptions o;
    o.capacity = cfg.cache.capacity;
    o.prefetch_depth = cfg.cache.prefetch_depth;
    return o;
}

fc::PipelineOptions pipeline_options(const fc::Config& cfg) {
    fc::PipelineOptions o;
    o.k = cfg.pipeline.k;
    o.extractor = cfg.pipeline.extractor;
    return o;
}

// Names the pipeline can recognise: everything in the fast table plus, for
// dump-backed sources, everything in the dump.
std::shared_ptr<fc::AliasIndex> build_aliases(fc::TieredFactStore& store) {
    auto index = std::make_shared<fc::AliasIndex>();
    index->add_triples(store.snapshot());
    if (auto* mem = dynamic_cast<fc::MemorySlowSource*>(&store.slow())) index->add_triples(mem->triples());
    return index;
}

class Session {
public:
    explicit Session(const Globals& g) : cfg_(fc::load_config(g.config_path)) {
        if (g.seed) cfg_.eval.seed = *g.seed;
    }

    const fc::Config& config() const { return cfg_; }

    fc::TieredFactStore& store() {
        if (!store_) {
            store_ = std::make_unique<fc::TieredFactStore>(make_slow_source(cfg_), store_options(cfg_));
            const auto path = cfg_.path(cfg_.cache.state_path);
            if (std::filesystem::exists(path)) {
                std::ifstream in(path);
                nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
                if (doc.is_discarded()) throw fc::Error(fc::ErrorCode::ParseError, "corrupt cache state: " + path);
                store_->import_state(doc);
            }
        }
        return *store_;
    }

    void save() {
        if (!store_) return;
        const auto path = cfg_.path(cfg_.cache.state_path);
        const auto tmp = path + ".tmp";
        {
            std::ofstream out(tmp);
            if (!out) throw fc::Error(fc::ErrorCode::InvalidArgument, "cannot write cache state: " + path);
            out << store_->export_state().dump(1) << '\n';
        }
        std::filesystem::rename(tmp, path);
    }

private:
    fc::Config cfg_;
    std::unique_ptr<fc::TieredFactStore> store_;
};

void print(const nlohmann::ordered_json& j, const std::string& table, const Globals& g) {
    if (g.format == "json") {
        std::cout << j.dump(2) << '\n';
    } else {
        std::cout << table;
    }
}

std::vector<fc::BenchmarkItem> load_single(const fc::Config& cfg) {
    if (cfg.eval.single_hop.empty()) throw fc::Error(fc::ErrorCode::ConfigError, "eval.single_hop is not set");
    return fc::load_benchmark(cfg.path(cfg.eval.single_hop)).single_hop;
}

std::map<std::string, fc::RelationRef> load_templates(const fc::Config& cfg) {
    if (cfg.data.templates.empty()) return fc::builtin_relations();
    return fc::load_relation_templates(cfg.path(cfg.data.templates));
}

fc::ScenarioSettings scenario_settings(const fc::Config& cfg) {
    fc::ScenarioSettings s;
    s.slow = [&cfg] { return make_slow_source(cfg); };
    s.store = store_options(cfg);
    s.pipeline = pipeline_options(cfg);
    return s;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"factcache: a knowledge-editing fact cache"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config_path, "Config file")->capture_default_str();
    app.add_option("--seed", g.seed, "Overrides eval.seed");

    // edit
    auto* edit = app.add_subcommand("edit", "Inject a manual fact (subject, relation, object)");
    std::string e_subject, e_relation, e_object, e_slabel, e_rlabel, e_olabel;
    bool e_literal = false;
    edit->add_option("subject", e_subject)->required();
    edit->add_option("relation", e_relation)->required();
    edit->add_option("object", e_object)->required();
    edit->add_option("--subject-label", e_slabel);
    edit->add_option("--relation-label", e_rlabel);
    edit->add_option("--object-label", e_olabel);
    edit->add_flag("--literal", e_literal, "Object is a literal value");

    // query
    auto* query = app.add_subcommand("query", "Answer a question through the pipeline");
    std::string q_text, q_task = "qa";
    bool q_trace = false;
    query->add_option("question", q_text)->required();
    query->add_option("--task", q_task, "qa|completion|cloze|choice|fact_check|locality")->capture_default_str();
    query->add_flag("--trace", q_trace, "Show entities, cache hits, evidence and prompt");

    // cache
    auto* cache = app.add_subcommand("cache", "Fast-table administration");
    cache->require_subcommand(1);
    auto* c_sync = cache->add_subcommand("sync", "Refresh cached subjects from the slow source");
    auto* c_stats = cache->add_subcommand("stats", "Print cache counters");
    auto* c_load = cache->add_subcommand("load", "Warm the fast table from a dump file");
    std::string c_dump;
    c_load->add_option("dump", c_dump)->required()->check(CLI::ExistingFile);

    // data
    auto* data = app.add_subcommand("data", "Dataset tooling");
    data->require_subcommand(1);
    auto* d_fetch = data->add_subcommand("fetch", "Collect triples over SPARQL");
    std::string d_relation = "P6", d_schema = "wikidata", d_relation_label;
    std::size_t d_limit = 100, d_offset = 0;
    bool d_equivalent = false;
    d_fetch->add_option("--relation", d_relation, "Property id or DBpedia property URL")->capture_default_str();
    d_fetch->add_option("--relation-label", d_relation_label);
    d_fetch->add_option("--schema", d_schema)->check(CLI::IsMember({"wikidata", "dbpedia"}))->capture_default_str();
    d_fetch->add_option("--limit", d_limit)->capture_default_str();
    d_fetch->add_option("--offset", d_offset)->capture_default_str();
    d_fetch->add_flag("--equivalent-properties", d_equivalent, "List DBpedia/Wikidata equivalent properties");
    auto* d_build = data->add_subcommand("build", "Generate benchmark files from the slow-source dump");
    std::string d_out_single, d_out_multi;
    std::size_t d_chains = 3;
    d_build->add_option("--out", d_out_single, "Single-hop JSON Lines output")->required();
    d_build->add_option("--out-multihop", d_out_multi, "Multi-hop JSON Lines output");
    d_build->add_option("--chains-per-length", d_chains)->capture_default_str();
    auto* d_validate = data->add_subcommand("validate", "Validate a benchmark file");
    std::string d_file;
    bool d_lenient = false;
    d_validate->add_option("file", d_file)->required()->check(CLI::ExistingFile);
    d_validate->add_flag("--lenient", d_lenient, "Report bad records and continue");

    // eval
    auto* eval = app.add_subcommand("eval", "Run an evaluation suite");
    std::string suite;
    std::vector<std::size_t> sizes;
    eval->add_option("suite", suite, "main|rq1|rq2|rq3")->required()->check(CLI::IsMember({"main", "rq1", "rq2", "rq3"}));
    eval->add_option("--format", g.format)->check(CLI::IsMember({"json", "table"}))->capture_default_str();
    eval->add_option("--sizes", sizes, "Store sizes for rq3 (overrides eval.scale_sizes)");

    CLI11_PARSE(app, argc, argv);

    try {
        Session session(g);
        const auto& cfg = session.config();

        if (*edit) {
            fc::EditRequest req;
            req.subject = e_subject;
            req.relation = e_relation;
            req.new_object = e_object;
            req.object_is_literal = e_literal;
            req.subject_label = e_slabel;
            req.relation_label = e_rlabel;
            req.object_label = e_olabel;
            const auto r = session.store().inject_manual(req);
            std::cout << fc::to_string(r.outcome) << (r.changed ? "" : " (no change)") << '\n';
            session.save();
        } else if (*query) {
            const auto task = fc::parse_task_kind(q_task);
            if (!task) {
                std::cerr << "unknown task: " << q_task << '\n';
                return 2;
            }
            auto& store = session.store();
            auto model = make_model(cfg);
            fc::Pipeline pipeline(store, build_aliases(store), pipeline_options(cfg));
            const auto trace = pipeline.answer_traced(q_text, *task, *model);
            std::cout << trace.answer.text << '\n';
            if (q_trace) {
                std::cout << "entities:";
                for (const auto& e : trace.entities) std::cout << ' ' << e;
                std::cout << "\ncache: " << trace.cache_hits << " hit, " << trace.cache_misses << " miss\n";
                std::cout << "evidence:\n";
                for (const auto& s : trace.evidence.triples) {
                    std::cout << "  " << s.triple.serialize() << " score=" << s.score << '\n';
                }
                std::cout << "prompt:\n" << trace.prompt.render() << '\n';
            }
            session.save();
        } else if (*cache) {
            auto& store = session.store();
            if (*c_sync) {
                std::cout << store.sync() << " changed\n";
            } else if (*c_stats) {
                const auto s = store.stats();
                std::cout << "hits=" << s.hits << " misses=" << s.misses << " slow_fetches=" << s.slow_fetches
                          << " prefetch_fetches=" << s.prefetch_fetches << " updates_applied=" << s.updates_applied
                          << " replacements=" << s.replacements << " size=" << store.size() << '\n';
            } else if (*c_load) {
                const auto dump = fc::load_dump(c_dump);
                store.load(dump.triples);
                std::cout << dump.triples.size() << " triples loaded\n";
            }
            session.save();
        } else if (*data) {
            if (*d_fetch) {
                auto transport = transport_for(cfg, cfg.kb.fixture);
                // Equivalent properties live in DBpedia's ontology.
                const bool wikidata = d_schema == "wikidata" && !d_equivalent;
                fc::kb::SparqlClient client(wikidata ? cfg.kb.wikidata_endpoint : cfg.kb.dbpedia_endpoint, transport,
                                            cfg.kb.requests_per_second);
                if (d_equivalent) {
                    for (const auto& p : fc::kb::fetch_equivalent_properties(client)) {
                        nlohmann::ordered_json j{{"dbpedia_property", p.dbpedia_property},
                                                 {"wikidata_property", p.wikidata_property},
                                                 {"label", p.label}};
                        std::cout << j.dump() << '\n';
                    }
                } else {
                    fc::kb::QueryOptions opts;
                    opts.person_only = cfg.kb.person_only;
                    const auto rows = fc::kb::fetch_triples(
                        client, wikidata ? fc::kb::Schema::Wikidata : fc::kb::Schema::DBpedia, d_relation, d_limit,
                        d_offset, opts);
                    std::string label = d_relation_label;
                    if (label.empty()) {
                        const auto& builtin = fc::builtin_relations();
                        auto it = builtin.find(d_relation);
                        label = it == builtin.end() ? d_relation : it->second.label;
                    }
                    const auto triples = fc::kb::filter_ambiguous(
                        rows, d_relation, label, wikidata ? fc::Source::Wikidata : fc::Source::DBpedia);
                    for (const auto& t : triples) std::cout << fc::triple_to_dump_record(t).dump() << '\n';
                    std::cerr << rows.size() << " rows, " << triples.size() << " kept\n";
                }
            } else if (*d_build) {
                auto* mem = dynamic_cast<fc::MemorySlowSource*>(&session.store().slow());
                if (!mem) throw fc::Error(fc::ErrorCode::ConfigError, "data build needs a local_dump slow source");
                const auto triples_set = mem->triples();
                const std::vector<fc::FactTriple> triples(triples_set.begin(), triples_set.end());
                const auto relations = load_templates(cfg);
                const auto items = fc::build_dataset(triples, relations, cfg.eval.seed);
                {
                    std::ofstream out(d_out_single);
                    fc::write_benchmark(out, items);
                }
                std::size_t chains_written = 0;
                if (!d_out_multi.empty()) {
                    std::vector<fc::FactTriple> usable;
                    for (const auto& t : triples) {
                        if (relations.count(t.relation)) usable.push_back(t);
                    }
                    const auto kinds = fc::infer_entity_kinds(usable);
                    std::vector<fc::MultiHopItem> chains;
                    for (std::size_t hops = 2; hops <= 5; ++hops) {
                        for (auto& c : fc::find_chains(usable, hops, d_chains)) {
                            chains.push_back(fc::build_multihop(c, relations, fc::chain_kinds(c, kinds)));
                        }
                    }
                    std::ofstream out(d_out_multi);
                    fc::write_benchmark(out, {}, chains);
                    chains_written = chains.size();
                }
                std::cout << items.size() << " single-hop items, " << chains_written << " multi-hop items\n";
            } else if (*d_validate) {
                const auto result = fc::load_benchmark(d_file, !d_lenient);
                for (const auto& issue : result.issues) {
                    std::cerr << d_file << ':' << issue.line << ": " << issue.message << '\n';
                }
                std::cout << result.size() << " items OK\n";
                if (!result.issues.empty()) return 1;
            }
        } else if (*eval) {
            auto model = make_model(cfg);
            if (suite == "main") {
                fc::TieredFactStore store(make_slow_source(cfg), store_options(cfg));
                fc::Pipeline pipeline(store, build_aliases(store), pipeline_options(cfg));
                const auto report = fc::run_main_eval(load_single(cfg), pipeline, *model, cfg.eval.sure);
                print(fc::to_json(report), fc::to_table(report), g);
            } else if (suite == "rq1") {
                const auto report =
                    fc::run_transition_scenario(load_single(cfg), *model, cfg.eval.edit_counts, scenario_settings(cfg));
                print(fc::to_json(report), fc::to_table(report), g);
            } else if (suite == "rq2") {
                if (cfg.eval.multi_hop.empty()) throw fc::Error(fc::ErrorCode::ConfigError, "eval.multi_hop is not set");
                const auto items = fc::load_benchmark(cfg.path(cfg.eval.multi_hop)).multi_hop;
                const auto report = fc::run_multihop_scenario(items, *model, scenario_settings(cfg));
                print(fc::to_json(report), fc::to_table(report), g);
            } else {
                const auto report = fc::run_scale_scenario(*model, sizes.empty() ? cfg.eval.scale_sizes : sizes,
                                                           scenario_settings(cfg));
                print(fc::to_json(report), fc::to_table(report), g);
            }
        }
    } catch (const fc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
