// fpx command-line interface. Every subcommand resolves its parameters as
// flags > --config file > built-in defaults, runs, and writes artifacts
// plus a manifest.json into --out; pointing --config at a previous run's
// manifest replays it.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fpx/cli.hpp"

namespace {

// Loads --config (bare object or manifest) into the params, then lets any
// explicitly supplied flags win.
template <typename Params>
void start_from_config(Params& params, const std::string& config_file,
                       const std::string& subcommand) {
    if (config_file.empty()) return;
    fpx::apply_json(params, fpx::command_config(fpx::read_json_file(config_file), subcommand));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"adaptive mixed-precision planning and latency-sensitive simulation"};
    app.require_subcommand(1);

    // --- calibrate ---------------------------------------------------------
    auto* calibrate = app.add_subcommand(
        "calibrate", "Measure per-layer 4-bit sensitivity over a corpus");
    std::string cal_config, cal_model, cal_corpus, cal_out;
    calibrate->add_option("--config", cal_config, "JSON params or manifest to start from");
    calibrate->add_option("--model", cal_model, "model checkpoint path");
    calibrate->add_option("--corpus", cal_corpus, "corpus path");
    calibrate->add_option("--out", cal_out, "output directory");
    calibrate->callback([&] {
        fpx::CalibrateParams p;
        start_from_config(p, cal_config, "calibrate");
        if (calibrate->count("--model")) p.model = cal_model;
        if (calibrate->count("--corpus")) p.corpus = cal_corpus;
        if (calibrate->count("--out")) p.out_dir = cal_out;
        fpx::cmd_calibrate(p);
        std::printf("wrote %s/calibration.json\n", p.out_dir.c_str());
    });

    // --- plan ---------------------------------------------------------------
    auto* plan = app.add_subcommand("plan", "Assign 4-bit layers for one gamma");
    std::string plan_config, plan_model, plan_corpus, plan_out;
    double plan_gamma = 0.0;
    plan->add_option("--config", plan_config, "JSON params or manifest to start from");
    plan->add_option("--model", plan_model, "model checkpoint path");
    plan->add_option("--corpus", plan_corpus, "corpus path");
    plan->add_option("--gamma", plan_gamma, "aggressiveness in [0,1]");
    plan->add_option("--out", plan_out, "output directory");
    plan->callback([&] {
        fpx::PlanParams p;
        start_from_config(p, plan_config, "plan");
        if (plan->count("--model")) p.model = plan_model;
        if (plan->count("--corpus")) p.corpus = plan_corpus;
        if (plan->count("--gamma")) p.gamma = plan_gamma;
        if (plan->count("--out")) p.out_dir = plan_out;
        const fpx::PrecisionPlan result = fpx::cmd_plan(p);
        std::printf("wrote %s/plan.json (gamma %.2f -> %d of %d layers at 4-bit)\n",
                    p.out_dir.c_str(), result.gamma, result.fp4_count(), result.layer_count());
    });

    // --- sweep ---------------------------------------------------------------
    auto* sweep = app.add_subcommand(
        "sweep", "Plan across a gamma grid and emit the latency/quality curve");
    std::string sweep_config, sweep_model, sweep_corpus, sweep_table, sweep_tag, sweep_out;
    std::vector<double> sweep_gammas;
    sweep->add_option("--config", sweep_config, "JSON params or manifest to start from");
    sweep->add_option("--model", sweep_model, "model checkpoint path");
    sweep->add_option("--corpus", sweep_corpus, "corpus path");
    sweep->add_option("--cost-table", sweep_table, "latency cost table path");
    sweep->add_option("--size-tag", sweep_tag, "model size tag for latency mapping");
    sweep->add_option("--gammas", sweep_gammas, "gamma grid")->delimiter(',');
    sweep->add_option("--out", sweep_out, "output directory");
    sweep->callback([&] {
        fpx::SweepParams p;
        start_from_config(p, sweep_config, "sweep");
        if (sweep->count("--model")) p.model = sweep_model;
        if (sweep->count("--corpus")) p.corpus = sweep_corpus;
        if (sweep->count("--cost-table")) p.cost_table = sweep_table;
        if (sweep->count("--size-tag")) p.size_tag = sweep_tag;
        if (sweep->count("--gammas")) p.gammas = sweep_gammas;
        if (sweep->count("--out")) p.out_dir = sweep_out;
        const auto rows = fpx::cmd_sweep(p);
        std::printf("wrote %s/sweep.csv (%zu rows)\n", p.out_dir.c_str(), rows.size());
    });

    // --- hft -------------------------------------------------------------------
    auto* hft = app.add_subcommand("hft", "Backtest the agent roster over a market day");
    std::string hft_config, hft_market, hft_agents, hft_sim_file, hft_out;
    double hft_threshold = 0.0, hft_cooling = 0.0, hft_cash = 0.0, hft_decay = 0.0;
    bool hft_directional = false;
    hft->add_option("--config", hft_config, "JSON params or manifest to start from");
    hft->add_option("--market", hft_market, "market day CSV path");
    hft->add_option("--agents", hft_agents, "agents config JSON path");
    hft->add_option("--sim-config", hft_sim_file, "simulator config JSON (threshold, decay, ...)");
    hft->add_option("--threshold", hft_threshold, "opportunity margin threshold");
    hft->add_option("--cooling", hft_cooling, "seconds between opportunities");
    hft->add_option("--cash", hft_cash, "starting cash per agent");
    hft->add_option("--t-decay", hft_decay, "capture decay horizon in ms");
    hft->add_flag("--directional", hft_directional, "hold positions instead of round trips");
    hft->add_option("--out", hft_out, "output directory");
    hft->callback([&] {
        fpx::HftCmdParams p;
        start_from_config(p, hft_config, "hft");
        if (!hft_sim_file.empty()) fpx::apply_json(p.sim, fpx::read_json_file(hft_sim_file));
        if (hft->count("--market")) p.market = hft_market;
        if (hft->count("--agents")) p.agents = hft_agents;
        if (hft->count("--threshold")) p.sim.threshold_b = hft_threshold;
        if (hft->count("--cooling")) p.sim.cooling_s = hft_cooling;
        if (hft->count("--cash")) p.sim.initial_cash = hft_cash;
        if (hft->count("--t-decay")) p.sim.t_decay_ms = hft_decay;
        if (hft->count("--directional")) p.sim.round_trip = false;
        if (hft->count("--out")) p.out_dir = hft_out;
        const fpx::DayReport rep = fpx::cmd_hft(p);
        std::printf("wrote %s/hft_report.csv (%zu agents, %zu opportunities)\n",
                    p.out_dir.c_str(), rep.agents.size(), rep.opportunities.size());
    });

    // --- arena -------------------------------------------------------------------
    auto* arena = app.add_subcommand("arena", "Run the duel ladder over the agent roster");
    std::string arena_config, arena_agents, arena_duel_file, arena_out;
    int arena_matches = 0;
    std::uint64_t arena_seed = 0;
    double arena_tick = 0.0;
    arena->add_option("--config", arena_config, "JSON params or manifest to start from");
    arena->add_option("--agents", arena_agents, "agents config JSON path");
    arena->add_option("--duel-config", arena_duel_file, "duel config JSON (tick, hp, ...)");
    arena->add_option("--tick", arena_tick, "action resolution tick in ms");
    arena->add_option("--matches", arena_matches, "matches per ordered agent pair");
    arena->add_option("--seed", arena_seed, "ladder master seed");
    arena->add_option("--out", arena_out, "output directory");
    arena->callback([&] {
        fpx::ArenaCmdParams p;
        start_from_config(p, arena_config, "arena");
        if (!arena_duel_file.empty()) {
            fpx::apply_json(p.duel, fpx::read_json_file(arena_duel_file));
        }
        if (arena->count("--agents")) p.agents = arena_agents;
        if (arena->count("--tick")) p.duel.tick_ms = arena_tick;
        if (arena->count("--matches")) p.matches_per_pair = arena_matches;
        if (arena->count("--seed")) p.seed = arena_seed;
        if (arena->count("--out")) p.out_dir = arena_out;
        const fpx::LadderResult lr = fpx::cmd_arena(p);
        std::printf("wrote %s/arena_ratings.csv and arena_matrix.csv (%d matches)\n",
                    p.out_dir.c_str(), lr.total_matches);
    });

    // --- profile -------------------------------------------------------------------
    auto* profile = app.add_subcommand("profile", "Print cost-table latency interpolations");
    std::string prof_config, prof_table, prof_tag, prof_out;
    std::vector<double> prof_fracs;
    profile->add_option("--config", prof_config, "JSON params or manifest to start from");
    profile->add_option("--cost-table", prof_table, "latency cost table path");
    profile->add_option("--size-tag", prof_tag, "model size tag");
    profile->add_option("--fractions", prof_fracs, "4-bit fraction grid")->delimiter(',');
    profile->add_option("--out", prof_out, "output directory");
    profile->callback([&] {
        fpx::ProfileParams p;
        start_from_config(p, prof_config, "profile");
        if (profile->count("--cost-table")) p.cost_table = prof_table;
        if (profile->count("--size-tag")) p.size_tag = prof_tag;
        if (profile->count("--fractions")) p.fractions = prof_fracs;
        if (profile->count("--out")) p.out_dir = prof_out;
        std::fputs(fpx::cmd_profile(p).c_str(), stdout);
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
