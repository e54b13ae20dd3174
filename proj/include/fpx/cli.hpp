#pragma once

// Command layer shared by the fpx binary and the tests. Every command
// takes a fully resolved parameter struct, writes its artifacts under a
// fixed name in the output directory, and drops a manifest.json echoing
// the resolved configuration — feeding that manifest back through
// --config reproduces the outputs byte for byte.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpx/agents.hpp"
#include "fpx/arena.hpp"
#include "fpx/hft.hpp"
#include "fpx/latency.hpp"
#include "fpx/model.hpp"
#include "fpx/planner.hpp"

namespace fpx {

// ---------------------------------------------------------------------------
// Small file helpers
// ---------------------------------------------------------------------------

inline nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error(path + ": " + e.what());
    }
}

inline void write_text_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << body;
    if (!out) throw std::runtime_error("failed writing " + path);
}

inline void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw std::invalid_argument("output directory must not be empty");
    std::filesystem::create_directories(dir);
}

namespace detail {

inline void require_keys(const nlohmann::json& j, std::initializer_list<const char*> allowed,
                         const std::string& what) {
    if (!j.is_object()) throw std::invalid_argument(what + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed) {
            if (it.key() == k) {
                known = true;
                break;
            }
        }
        if (!known) throw std::invalid_argument(what + ": unknown key \"" + it.key() + "\"");
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Simulator config blocks (JSON mirrors of the struct fields)
// ---------------------------------------------------------------------------

inline void apply_json(HftConfig& c, const nlohmann::json& j) {
    detail::require_keys(j, {"threshold_b", "cooling_s", "initial_cash", "t_decay_ms",
                             "round_trip"},
                         "hft sim config");
    if (j.contains("threshold_b")) c.threshold_b = j.at("threshold_b").get<double>();
    if (j.contains("cooling_s")) c.cooling_s = j.at("cooling_s").get<double>();
    if (j.contains("initial_cash")) c.initial_cash = j.at("initial_cash").get<double>();
    if (j.contains("t_decay_ms")) c.t_decay_ms = j.at("t_decay_ms").get<double>();
    if (j.contains("round_trip")) c.round_trip = j.at("round_trip").get<bool>();
}

inline nlohmann::json to_json(const HftConfig& c) {
    return {{"threshold_b", c.threshold_b},
            {"cooling_s", c.cooling_s},
            {"initial_cash", c.initial_cash},
            {"t_decay_ms", c.t_decay_ms},
            {"round_trip", c.round_trip}};
}

inline void apply_json(DuelConfig& c, const nlohmann::json& j) {
    detail::require_keys(j, {"tick_ms", "rounds_to_win", "max_ticks", "hp_start", "damage",
                             "stale_penalty"},
                         "duel config");
    if (j.contains("tick_ms")) c.tick_ms = j.at("tick_ms").get<double>();
    if (j.contains("rounds_to_win")) c.rounds_to_win = j.at("rounds_to_win").get<int>();
    if (j.contains("max_ticks")) c.max_ticks = j.at("max_ticks").get<int>();
    if (j.contains("hp_start")) c.hp_start = j.at("hp_start").get<double>();
    if (j.contains("damage")) c.damage = j.at("damage").get<double>();
    if (j.contains("stale_penalty")) c.stale_penalty = j.at("stale_penalty").get<double>();
}

inline nlohmann::json to_json(const DuelConfig& c) {
    return {{"tick_ms", c.tick_ms},          {"rounds_to_win", c.rounds_to_win},
            {"max_ticks", c.max_ticks},      {"hp_start", c.hp_start},
            {"damage", c.damage},            {"stale_penalty", c.stale_penalty}};
}

// ---------------------------------------------------------------------------
// Agent roster config
// ---------------------------------------------------------------------------

// Two agent flavors: "plan" derives latency and accuracy from a precision
// plan (size_tag + gamma through the cost table, quality map, and the
// bundled model), "fixed" pins both knobs directly.
struct AgentSpec {
    std::string type;  // "plan" | "fixed"
    std::string name;  // required for fixed; optional override for plan
    std::string size_tag;
    double gamma = 0.0;
    double latency_ms = 0.0;
    double p = 1.0;
    double fraction = 1.0;
    std::uint64_t seed = 1;
};

struct AgentsConfig {
    QualityMap qmap;
    std::string model_path;
    std::string corpus_path;
    std::string cost_table_path;
    std::vector<AgentSpec> specs;
};

inline AgentsConfig agents_config_from_json(const nlohmann::json& j) {
    detail::require_keys(j, {"quality_map", "model", "corpus", "cost_table", "agents"},
                         "agents config");
    AgentsConfig cfg;
    if (j.contains("quality_map")) {
        const auto& q = j.at("quality_map");
        detail::require_keys(q, {"p_max", "alpha"}, "quality_map");
        if (q.contains("p_max")) cfg.qmap.p_max = q.at("p_max").get<double>();
        if (q.contains("alpha")) cfg.qmap.alpha = q.at("alpha").get<double>();
    }
    if (j.contains("model")) cfg.model_path = j.at("model").get<std::string>();
    if (j.contains("corpus")) cfg.corpus_path = j.at("corpus").get<std::string>();
    if (j.contains("cost_table")) cfg.cost_table_path = j.at("cost_table").get<std::string>();
    if (!j.contains("agents")) throw std::invalid_argument("agents config: missing \"agents\"");
    for (const auto& a : j.at("agents")) {
        detail::require_keys(a, {"type", "name", "size_tag", "gamma", "latency_ms", "p",
                                 "fraction", "seed"},
                             "agent entry");
        AgentSpec s;
        if (!a.contains("type")) throw std::invalid_argument("agent entry: missing \"type\"");
        s.type = a.at("type").get<std::string>();
        if (a.contains("name")) s.name = a.at("name").get<std::string>();
        if (a.contains("seed")) s.seed = a.at("seed").get<std::uint64_t>();
        if (s.type == "plan") {
            if (!a.contains("size_tag") || !a.contains("gamma")) {
                throw std::invalid_argument("plan agent: needs \"size_tag\" and \"gamma\"");
            }
            s.size_tag = a.at("size_tag").get<std::string>();
            s.gamma = a.at("gamma").get<double>();
        } else if (s.type == "fixed") {
            if (s.name.empty() || !a.contains("latency_ms") || !a.contains("p")) {
                throw std::invalid_argument(
                    "fixed agent: needs \"name\", \"latency_ms\", and \"p\"");
            }
            s.latency_ms = a.at("latency_ms").get<double>();
            s.p = a.at("p").get<double>();
            if (a.contains("fraction")) s.fraction = a.at("fraction").get<double>();
        } else {
            throw std::invalid_argument("agent entry: unknown type \"" + s.type + "\"");
        }
        cfg.specs.push_back(std::move(s));
    }
    if (cfg.specs.empty()) throw std::invalid_argument("agents config: empty agent list");
    return cfg;
}

inline AgentsConfig load_agents_config(const std::string& path) {
    try {
        return agents_config_from_json(read_json_file(path));
    } catch (const std::invalid_argument& e) {
        throw std::invalid_argument(path + ": " + e.what());
    }
}

// Instantiates the roster. Plan agents share one model load and one
// calibration pass, so a gamma ladder over the same checkpoint stays
// cheap.
inline std::vector<AgentProfile> build_agents(const AgentsConfig& cfg) {
    const bool any_plan =
        std::any_of(cfg.specs.begin(), cfg.specs.end(),
                    [](const AgentSpec& s) { return s.type == "plan"; });

    std::optional<ToyTransformer> model;
    Corpus corpus;
    CostTable table;
    CalibrationResult cal;
    if (any_plan) {
        if (cfg.model_path.empty() || cfg.corpus_path.empty() || cfg.cost_table_path.empty()) {
            throw std::invalid_argument(
                "agents config: plan agents need \"model\", \"corpus\", and \"cost_table\" paths");
        }
        model = load_checkpoint(cfg.model_path);
        corpus = load_corpus(cfg.corpus_path);
        table = load_cost_table(cfg.cost_table_path);
        cal = calibrate(*model, corpus);
    }

    std::vector<AgentProfile> agents;
    agents.reserve(cfg.specs.size());
    for (const AgentSpec& s : cfg.specs) {
        if (s.type == "plan") {
            PrecisionPlan plan = assign(cal, s.gamma);
            const double proxy = quality_proxy(*model, corpus, &plan.assignment);
            agents.push_back(from_plan(s.size_tag, plan, table, cfg.qmap, proxy, s.seed, s.name));
        } else {
            agents.push_back(
                make_latency_quality_agent(s.name, s.latency_ms, s.p, s.seed, s.fraction));
        }
    }
    return agents;
}

// ---------------------------------------------------------------------------
// Manifests
// ---------------------------------------------------------------------------

// A --config argument accepts either a bare parameter object or a
// manifest from a previous run of the same subcommand.
inline nlohmann::json command_config(const nlohmann::json& j, const std::string& subcommand) {
    if (j.is_object() && j.contains("subcommand")) {
        const std::string sc = j.at("subcommand").get<std::string>();
        if (sc != subcommand) {
            throw std::invalid_argument("config file is a manifest for \"" + sc +
                                        "\", not \"" + subcommand + "\"");
        }
        return j.at("config");
    }
    return j;
}

inline void write_manifest(const std::string& out_dir, const std::string& subcommand,
                           const nlohmann::json& config) {
    nlohmann::json m;
    m["subcommand"] = subcommand;
    m["config"] = config;
    write_text_file(out_dir + "/manifest.json", m.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// calibrate
// ---------------------------------------------------------------------------

struct CalibrateParams {
    std::string model;
    std::string corpus;
    std::string out_dir = "out";
};

inline void apply_json(CalibrateParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"model", "corpus", "out_dir"}, "calibrate config");
    if (j.contains("model")) p.model = j.at("model").get<std::string>();
    if (j.contains("corpus")) p.corpus = j.at("corpus").get<std::string>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
}

inline nlohmann::json to_json(const CalibrateParams& p) {
    return {{"model", p.model}, {"corpus", p.corpus}, {"out_dir", p.out_dir}};
}

inline CalibrationResult cmd_calibrate(const CalibrateParams& p) {
    if (p.model.empty()) throw std::invalid_argument("calibrate: a model path is required");
    if (p.corpus.empty()) throw std::invalid_argument("calibrate: a corpus path is required");
    const ToyTransformer model = load_checkpoint(p.model);
    const Corpus corpus = load_corpus(p.corpus);
    const CalibrationResult cal = calibrate(model, corpus);
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/calibration.json", calibration_to_json(cal).dump(2) + "\n");
    write_manifest(p.out_dir, "calibrate", to_json(p));
    return cal;
}

// ---------------------------------------------------------------------------
// plan
// ---------------------------------------------------------------------------

struct PlanParams {
    std::string model;
    std::string corpus;
    double gamma = 0.0;
    std::string out_dir = "out";
};

inline void apply_json(PlanParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"model", "corpus", "gamma", "out_dir"}, "plan config");
    if (j.contains("model")) p.model = j.at("model").get<std::string>();
    if (j.contains("corpus")) p.corpus = j.at("corpus").get<std::string>();
    if (j.contains("gamma")) p.gamma = j.at("gamma").get<double>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
}

inline nlohmann::json to_json(const PlanParams& p) {
    return {{"model", p.model}, {"corpus", p.corpus}, {"gamma", p.gamma},
            {"out_dir", p.out_dir}};
}

inline PrecisionPlan cmd_plan(const PlanParams& p) {
    if (p.model.empty()) throw std::invalid_argument("plan: a model path is required");
    if (p.corpus.empty()) throw std::invalid_argument("plan: a corpus path is required");
    const ToyTransformer model = load_checkpoint(p.model);
    const Corpus corpus = load_corpus(p.corpus);
    const PrecisionPlan plan = assign(calibrate(model, corpus), p.gamma);
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/plan.json", plan_to_json(plan).dump(2) + "\n");
    write_manifest(p.out_dir, "plan", to_json(p));
    return plan;
}

// ---------------------------------------------------------------------------
// sweep
// ---------------------------------------------------------------------------

struct SweepParams {
    std::string model;
    std::string corpus;
    std::string cost_table;
    std::string size_tag = "3B";
    std::vector<double> gammas = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::string out_dir = "out";
};

inline void apply_json(SweepParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"model", "corpus", "cost_table", "size_tag", "gammas", "out_dir"},
                         "sweep config");
    if (j.contains("model")) p.model = j.at("model").get<std::string>();
    if (j.contains("corpus")) p.corpus = j.at("corpus").get<std::string>();
    if (j.contains("cost_table")) p.cost_table = j.at("cost_table").get<std::string>();
    if (j.contains("size_tag")) p.size_tag = j.at("size_tag").get<std::string>();
    if (j.contains("gammas")) p.gammas = j.at("gammas").get<std::vector<double>>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
}

inline nlohmann::json to_json(const SweepParams& p) {
    return {{"model", p.model},       {"corpus", p.corpus}, {"cost_table", p.cost_table},
            {"size_tag", p.size_tag}, {"gammas", p.gammas}, {"out_dir", p.out_dir}};
}

inline std::string sweep_csv(const std::vector<SweepRow>& rows) {
    std::string out = "gamma,bitwidth_avg,latency_ms,quality_proxy\n";
    char buf[128];
    for (const SweepRow& r : rows) {
        std::snprintf(buf, sizeof buf, "%.2f,%.2f,%.4f,%.6f\n", r.gamma, r.plan.bitwidth_avg(),
                      r.latency_ms, r.quality_proxy);
        out += buf;
    }
    return out;
}

inline std::vector<SweepRow> cmd_sweep(const SweepParams& p) {
    if (p.model.empty()) throw std::invalid_argument("sweep: a model path is required");
    if (p.corpus.empty()) throw std::invalid_argument("sweep: a corpus path is required");
    if (p.cost_table.empty()) throw std::invalid_argument("sweep: a cost table path is required");
    const ToyTransformer model = load_checkpoint(p.model);
    const Corpus corpus = load_corpus(p.corpus);
    const CostTable table = load_cost_table(p.cost_table);
    const std::vector<SweepRow> rows = sweep(model, corpus, p.gammas, table, p.size_tag);
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/sweep.csv", sweep_csv(rows));
    write_manifest(p.out_dir, "sweep", to_json(p));
    return rows;
}

// ---------------------------------------------------------------------------
// hft
// ---------------------------------------------------------------------------

struct HftCmdParams {
    std::string market;
    std::string agents;
    std::string out_dir = "out";
    HftConfig sim;
};

inline void apply_json(HftCmdParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"market", "agents", "out_dir", "sim"}, "hft config");
    if (j.contains("market")) p.market = j.at("market").get<std::string>();
    if (j.contains("agents")) p.agents = j.at("agents").get<std::string>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("sim")) apply_json(p.sim, j.at("sim"));
}

inline nlohmann::json to_json(const HftCmdParams& p) {
    return {{"market", p.market}, {"agents", p.agents}, {"out_dir", p.out_dir},
            {"sim", to_json(p.sim)}};
}

inline std::string hft_report_csv(const DayReport& rep) {
    std::string out = "name,size_tag,gamma,latency_ms,trades,yield_pct\n";
    char buf[192];
    for (const AgentDayResult& a : rep.agents) {
        std::snprintf(buf, sizeof buf, "%s,%s,%.2f,%.4f,%d,%.4f\n", a.name.c_str(),
                      a.size_tag.c_str(), a.gamma, a.latency_ms, a.trades, a.yield_pct);
        out += buf;
    }
    return out;
}

inline DayReport cmd_hft(const HftCmdParams& p) {
    if (p.market.empty()) throw std::invalid_argument("hft: a market CSV path is required");
    if (p.agents.empty()) throw std::invalid_argument("hft: an agents config path is required");
    const std::vector<MarketTick> ticks = ingest_csv(p.market);
    std::vector<AgentProfile> roster = build_agents(load_agents_config(p.agents));
    const DayReport rep = run_day(ticks, roster, p.sim);
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/hft_report.csv", hft_report_csv(rep));
    write_manifest(p.out_dir, "hft", to_json(p));
    return rep;
}

// ---------------------------------------------------------------------------
// arena
// ---------------------------------------------------------------------------

struct ArenaCmdParams {
    std::string agents;
    std::string out_dir = "out";
    DuelConfig duel;
    int matches_per_pair = 40;
    std::uint64_t seed = 1;
};

inline void apply_json(ArenaCmdParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"agents", "out_dir", "duel", "matches_per_pair", "seed"},
                         "arena config");
    if (j.contains("agents")) p.agents = j.at("agents").get<std::string>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
    if (j.contains("duel")) apply_json(p.duel, j.at("duel"));
    if (j.contains("matches_per_pair")) p.matches_per_pair = j.at("matches_per_pair").get<int>();
    if (j.contains("seed")) p.seed = j.at("seed").get<std::uint64_t>();
}

inline nlohmann::json to_json(const ArenaCmdParams& p) {
    return {{"agents", p.agents},
            {"out_dir", p.out_dir},
            {"duel", to_json(p.duel)},
            {"matches_per_pair", p.matches_per_pair},
            {"seed", p.seed}};
}

inline std::string ratings_csv(const LadderResult& lr) {
    std::string out = "agent,rating,wins,losses,draws\n";
    char buf[160];
    for (const std::string& name : lr.names) {
        const EloEntry& e = lr.table.entries.at(name);
        std::snprintf(buf, sizeof buf, "%s,%.2f,%d,%d,%d\n", name.c_str(), e.rating, e.wins,
                      e.losses, e.draws);
        out += buf;
    }
    return out;
}

inline std::string win_matrix_csv(const LadderResult& lr) {
    std::string out = "agent";
    for (const std::string& name : lr.names) out += "," + name;
    out += "\n";
    char buf[32];
    for (std::size_t i = 0; i < lr.names.size(); ++i) {
        out += lr.names[i];
        for (std::size_t j = 0; j < lr.names.size(); ++j) {
            if (i == j) {
                out += ",-";
            } else {
                std::snprintf(buf, sizeof buf, ",%.4f", lr.win_rate[i][j]);
                out += buf;
            }
        }
        out += "\n";
    }
    return out;
}

inline LadderResult cmd_arena(const ArenaCmdParams& p) {
    if (p.agents.empty()) throw std::invalid_argument("arena: an agents config path is required");
    const std::vector<AgentProfile> roster = build_agents(load_agents_config(p.agents));
    const LadderResult lr = run_ladder(roster, p.matches_per_pair, p.duel, p.seed);
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/arena_ratings.csv", ratings_csv(lr));
    write_text_file(p.out_dir + "/arena_matrix.csv", win_matrix_csv(lr));
    write_manifest(p.out_dir, "arena", to_json(p));
    return lr;
}

// ---------------------------------------------------------------------------
// profile
// ---------------------------------------------------------------------------

struct ProfileParams {
    std::string cost_table;
    std::string size_tag = "3B";
    std::vector<double> fractions = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0};
    std::string out_dir = "out";
};

inline void apply_json(ProfileParams& p, const nlohmann::json& j) {
    detail::require_keys(j, {"cost_table", "size_tag", "fractions", "out_dir"},
                         "profile config");
    if (j.contains("cost_table")) p.cost_table = j.at("cost_table").get<std::string>();
    if (j.contains("size_tag")) p.size_tag = j.at("size_tag").get<std::string>();
    if (j.contains("fractions")) p.fractions = j.at("fractions").get<std::vector<double>>();
    if (j.contains("out_dir")) p.out_dir = j.at("out_dir").get<std::string>();
}

inline nlohmann::json to_json(const ProfileParams& p) {
    return {{"cost_table", p.cost_table},
            {"size_tag", p.size_tag},
            {"fractions", p.fractions},
            {"out_dir", p.out_dir}};
}

// Returns the printable interpolation table; also written as profile.csv.
inline std::string cmd_profile(const ProfileParams& p) {
    if (p.cost_table.empty()) {
        throw std::invalid_argument("profile: a cost table path is required");
    }
    const CostTable table = load_cost_table(p.cost_table);
    std::string csv = "size_tag,fp4_fraction,latency_ms\n";
    char buf[96];
    for (double f : p.fractions) {
        const LatencyEstimate est = estimate(table, p.size_tag, f);
        std::snprintf(buf, sizeof buf, "%s,%.2f,%.4f\n", p.size_tag.c_str(), f, est.total_ms);
        csv += buf;
    }
    ensure_dir(p.out_dir);
    write_text_file(p.out_dir + "/profile.csv", csv);
    write_manifest(p.out_dir, "profile", to_json(p));
    return csv;
}

}  // namespace fpx
