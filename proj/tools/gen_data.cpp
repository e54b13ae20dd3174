// Regenerates the checked-in data/ bundle: seeded model checkpoints, the
// calibration corpora, the default latency cost table, scripted and
// reference market days, and the demo agent rosters. Everything is a pure
// function of the literals below, so reruns are byte-identical.

#include <cstdio>
#include <string>

#include <json.hpp>

#include "fpx/cli.hpp"

using nlohmann::json;

namespace {

json plan_roster(const std::string& size_tag, const std::string& dir) {
    json agents = json::array();
    for (int i = 0; i <= 10; ++i) {
        agents.push_back({{"type", "plan"},
                          {"size_tag", size_tag},
                          {"gamma", i / 10.0},
                          {"seed", 11}});
    }
    return {{"quality_map", {{"p_max", 0.92}, {"alpha", 2.0}}},
            {"model", dir + "/model3.fpxm"},
            {"corpus", dir + "/corpus3.txt"},
            {"cost_table", dir + "/cost_table.json"},
            {"agents", agents}};
}

}  // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    try {
        fpx::ensure_dir(dir);

        fpx::save_checkpoint(fpx::init_model(42, 2, 32, 64, 64), dir + "/model2.fpxm");
        fpx::save_checkpoint(fpx::init_model(42, 3, 32, 64, 64), dir + "/model3.fpxm");
        fpx::save_corpus(fpx::generate_corpus(7, 8, 16, 64), dir + "/corpus2.txt");
        fpx::save_corpus(fpx::generate_corpus(7, 8, 24, 64), dir + "/corpus3.txt");

        fpx::write_text_file(dir + "/cost_table.json",
                             fpx::cost_table_to_json(fpx::default_cost_table()).dump(2) + "\n");

        // A fixed ladder of evenly spaced spreads (latency-dominance
        // control) and a long day of the same shape for yield curves.
        fpx::save_market_csv(fpx::make_scripted_day(100), dir + "/market_control.csv");
        fpx::save_market_csv(fpx::make_scripted_day(500), dir + "/market_reference.csv");

        // Reference trading scenario: capture decays fast enough that
        // model latency matters, slowly enough that mid-gamma plans keep
        // most of it.
        fpx::write_text_file(dir + "/hft_reference.json",
                             json{{"t_decay_ms", 820.0}}.dump(2) + "\n");

        fpx::DuelConfig duel;
        fpx::write_text_file(dir + "/duel_default.json", fpx::to_json(duel).dump(2) + "\n");

        fpx::write_text_file(dir + "/agents_hft_reference.json",
                             plan_roster("14B", dir).dump(2) + "\n");
        fpx::write_text_file(dir + "/agents_arena_reference.json",
                             plan_roster("3B", dir).dump(2) + "\n");

        const json demo = {
            {"quality_map", {{"p_max", 0.92}, {"alpha", 2.0}}},
            {"agents",
             {{{"type", "fixed"}, {"name", "fast"}, {"latency_ms", 200.0}, {"p", 0.9},
               {"seed", 3}},
              {{"type", "fixed"}, {"name", "slow"}, {"latency_ms", 400.0}, {"p", 0.9},
               {"seed", 4}}}}};
        fpx::write_text_file(dir + "/agents_demo.json", demo.dump(2) + "\n");
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    std::printf("wrote bundle into %s/\n", dir.c_str());
    return 0;
}
