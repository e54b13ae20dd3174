#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fpx/cli.hpp"

using namespace fpx;
using nlohmann::json;

namespace {

const std::string kData = FPX_DATA_DIR;
namespace fs = std::filesystem;

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh scratch directory per test case.
std::string scratch(const std::string& name) {
    const std::string dir = "cli_out/" + name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

template <typename Fn>
std::string message_of(Fn&& fn) {
    try {
        fn();
    } catch (const std::exception& e) {
        return e.what();
    }
    return "";
}

json demo_agents_json() {
    return json::parse(R"({
        "agents": [
            {"type": "fixed", "name": "fast", "latency_ms": 200.0, "p": 0.9, "seed": 3},
            {"type": "fixed", "name": "slow", "latency_ms": 400.0, "p": 0.9, "seed": 4}
        ]
    })");
}

}  // namespace

TEST_CASE("json file helpers surface the offending path") {
    const std::string dir = scratch("jsonio");
    CHECK_THROWS_AS(read_json_file(dir + "/missing.json"), std::runtime_error);
    CHECK(message_of([&] { read_json_file(dir + "/missing.json"); }).find("missing.json") !=
          std::string::npos);

    write_text_file(dir + "/bad.json", "{not json");
    CHECK(message_of([&] { read_json_file(dir + "/bad.json"); }).find("bad.json") !=
          std::string::npos);

    write_text_file(dir + "/ok.json", "{\"a\": 1}\n");
    CHECK(read_json_file(dir + "/ok.json").at("a").get<int>() == 1);

    CHECK_THROWS_AS(ensure_dir(""), std::invalid_argument);
}

TEST_CASE("agents config parses plan and fixed entries") {
    const json j = json::parse(R"({
        "quality_map": {"p_max": 0.8, "alpha": 1.5},
        "model": "m.fpxm",
        "corpus": "c.txt",
        "cost_table": "t.json",
        "agents": [
            {"type": "plan", "size_tag": "14B", "gamma": 0.4, "seed": 9},
            {"type": "plan", "size_tag": "3B", "gamma": 0.0, "name": "baseline"},
            {"type": "fixed", "name": "turtle", "latency_ms": 350.0, "p": 0.8,
             "fraction": 0.5, "seed": 2}
        ]
    })");
    const AgentsConfig cfg = agents_config_from_json(j);
    CHECK(cfg.qmap.p_max == 0.8);
    CHECK(cfg.qmap.alpha == 1.5);
    CHECK(cfg.model_path == "m.fpxm");
    CHECK(cfg.corpus_path == "c.txt");
    CHECK(cfg.cost_table_path == "t.json");
    REQUIRE(cfg.specs.size() == 3);

    CHECK(cfg.specs[0].type == "plan");
    CHECK(cfg.specs[0].size_tag == "14B");
    CHECK(cfg.specs[0].gamma == 0.4);
    CHECK(cfg.specs[0].seed == 9);
    CHECK(cfg.specs[0].name.empty());

    CHECK(cfg.specs[1].name == "baseline");
    CHECK(cfg.specs[1].seed == 1);  // default

    CHECK(cfg.specs[2].type == "fixed");
    CHECK(cfg.specs[2].latency_ms == 350.0);
    CHECK(cfg.specs[2].p == 0.8);
    CHECK(cfg.specs[2].fraction == 0.5);
    CHECK(cfg.specs[2].seed == 2);
}

TEST_CASE("agents config rejects malformed documents") {
    auto parse = [](const char* text) { return agents_config_from_json(json::parse(text)); };

    // Unknown keys anywhere are typos, not extensions.
    CHECK_THROWS_AS(parse(R"({"agents": [], "extra": 1})"), std::invalid_argument);
    CHECK(message_of([&] {
              parse(R"({"agents": [{"type": "fixed", "name": "x", "latency_ms": 1,
                                    "p": 0.5, "latencyms": 2}]})");
          }).find("latencyms") != std::string::npos);
    CHECK_THROWS_AS(parse(R"({"quality_map": {"pmax": 1}, "agents": [
        {"type": "fixed", "name": "x", "latency_ms": 1, "p": 0.5}]})"),
                    std::invalid_argument);

    // Required structure.
    CHECK_THROWS_AS(parse(R"({})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": []})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"name": "x"}]})"), std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"type": "magic", "name": "x"}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"type": "plan", "gamma": 0.5}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"type": "plan", "size_tag": "3B"}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"type": "fixed", "latency_ms": 1, "p": 0.5}]})"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse(R"({"agents": [{"type": "fixed", "name": "x", "p": 0.5}]})"),
                    std::invalid_argument);
}

TEST_CASE("load_agents_config names the file in errors") {
    const std::string dir = scratch("agents_err");
    write_text_file(dir + "/roster.json", R"({"agents": []})");
    const std::string msg = message_of([&] { load_agents_config(dir + "/roster.json"); });
    CHECK(msg.find("roster.json") != std::string::npos);
    CHECK(msg.find("empty agent list") != std::string::npos);
}

TEST_CASE("build_agents instantiates fixed rosters") {
    AgentsConfig cfg;
    AgentSpec a;
    a.type = "fixed";
    a.name = "turtle";
    a.latency_ms = 350.0;
    a.p = 0.8;
    a.fraction = 0.5;
    a.seed = 2;
    cfg.specs.push_back(a);
    const std::vector<AgentProfile> roster = build_agents(cfg);
    REQUIRE(roster.size() == 1);
    CHECK(roster[0].name == "turtle");
    CHECK(roster[0].latency.base_ms == 350.0);
    CHECK(roster[0].accuracy == 0.8);
    CHECK(roster[0].gamma == -1.0);  // no plan behind a fixed agent
}

TEST_CASE("build_agents derives plan agents from the bundle") {
    AgentsConfig cfg;
    cfg.model_path = kData + "/model2.fpxm";
    cfg.corpus_path = kData + "/corpus2.txt";
    cfg.cost_table_path = kData + "/cost_table.json";
    for (double g : {0.0, 0.5, 1.0}) {
        AgentSpec s;
        s.type = "plan";
        s.size_tag = "3B";
        s.gamma = g;
        s.seed = 11;
        cfg.specs.push_back(s);
    }
    cfg.specs[1].name = "middle";

    const std::vector<AgentProfile> roster = build_agents(cfg);
    REQUIRE(roster.size() == 3);
    CHECK(roster[0].name == "3B-g00");
    CHECK(roster[1].name == "middle");
    CHECK(roster[2].name == "3B-g100");

    // Latency follows the cost-table interpolation for an 8-layer model:
    // fp8 anchor 222 ms down to fp4 anchor 147 ms.
    CHECK(roster[0].latency.base_ms == 222.0);
    CHECK(roster[1].latency.base_ms == Catch::Approx(222.0 - 75.0 * 0.5));
    CHECK(roster[2].latency.base_ms == 147.0);

    // Accuracy declines as layers drop to 4-bit.
    CHECK(roster[0].accuracy > roster[1].accuracy);
    CHECK(roster[1].accuracy > roster[2].accuracy);
    CHECK(roster[0].accuracy <= QualityMap{}.p_max);
    CHECK(roster[2].accuracy > 0.0);

    CHECK(roster[0].gamma == 0.0);
    CHECK(roster[2].gamma == 1.0);
    CHECK(roster[0].size_tag == "3B");
}

TEST_CASE("build_agents requires bundle paths only for plan agents") {
    AgentsConfig cfg;
    AgentSpec s;
    s.type = "plan";
    s.size_tag = "3B";
    s.gamma = 0.5;
    cfg.specs.push_back(s);
    CHECK_THROWS_AS(build_agents(cfg), std::invalid_argument);

    cfg.specs[0].type = "fixed";
    cfg.specs[0].name = "x";
    cfg.specs[0].latency_ms = 10.0;
    cfg.specs[0].p = 0.5;
    CHECK(build_agents(cfg).size() == 1);  // no paths needed
}

TEST_CASE("command_config accepts bare objects and matching manifests") {
    const json bare = {{"model", "m"}, {"out_dir", "d"}};
    CHECK(command_config(bare, "calibrate") == bare);

    json manifest;
    manifest["subcommand"] = "sweep";
    manifest["config"] = {{"size_tag", "14B"}};
    CHECK(command_config(manifest, "sweep") == manifest["config"]);

    const std::string msg = message_of([&] { command_config(manifest, "hft"); });
    CHECK(msg.find("sweep") != std::string::npos);
    CHECK(msg.find("hft") != std::string::npos);
}

TEST_CASE("parameter overlays keep defaults and reject unknown keys") {
    SweepParams sweep;
    apply_json(sweep, json::parse(R"({"size_tag": "14B", "gammas": [0.0, 1.0]})"));
    CHECK(sweep.size_tag == "14B");
    CHECK(sweep.gammas == std::vector<double>{0.0, 1.0});
    CHECK(sweep.out_dir == "out");  // untouched default
    CHECK_THROWS_AS(apply_json(sweep, json::parse(R"({"gamma": 0.5})")), std::invalid_argument);

    CalibrateParams cal;
    apply_json(cal, json::parse(R"({"model": "m.fpxm"})"));
    CHECK(cal.model == "m.fpxm");
    CHECK(cal.corpus.empty());
    CHECK_THROWS_AS(apply_json(cal, json::parse(R"({"modle": "x"})")), std::invalid_argument);

    PlanParams plan;
    apply_json(plan, json::parse(R"({"gamma": 0.7})"));
    CHECK(plan.gamma == 0.7);
    CHECK_THROWS_AS(apply_json(plan, json::parse(R"({"gammas": [1]})")), std::invalid_argument);

    HftCmdParams hft;
    apply_json(hft, json::parse(R"({"market": "m.csv", "sim": {"t_decay_ms": 820.0}})"));
    CHECK(hft.market == "m.csv");
    CHECK(hft.sim.t_decay_ms == 820.0);
    CHECK(hft.sim.threshold_b == 0.02);  // untouched default
    CHECK_THROWS_AS(apply_json(hft, json::parse(R"({"sim": {"tdecay": 1}})")),
                    std::invalid_argument);

    ArenaCmdParams arena;
    apply_json(arena, json::parse(R"({"matches_per_pair": 8, "duel": {"tick_ms": 50.0}})"));
    CHECK(arena.matches_per_pair == 8);
    CHECK(arena.duel.tick_ms == 50.0);
    CHECK(arena.duel.hp_start == 10.0);
    CHECK_THROWS_AS(apply_json(arena, json::parse(R"({"duel": {"ticks": 1}})")),
                    std::invalid_argument);

    ProfileParams prof;
    apply_json(prof, json::parse(R"({"fractions": [0.5]})"));
    CHECK(prof.fractions == std::vector<double>{0.5});
    CHECK_THROWS_AS(apply_json(prof, json::parse(R"({"fraction": [0.5]})")),
                    std::invalid_argument);
}

TEST_CASE("cmd_calibrate writes artifacts and reruns byte-identically") {
    const std::string dir = scratch("calibrate");
    CalibrateParams p;
    p.model = kData + "/model2.fpxm";
    p.corpus = kData + "/corpus2.txt";
    p.out_dir = dir + "/run1";
    const CalibrationResult cal = cmd_calibrate(p);

    // Matches a direct pipeline invocation.
    const CalibrationResult direct =
        calibrate(load_checkpoint(p.model), load_corpus(p.corpus));
    REQUIRE(cal.layers.size() == direct.layers.size());
    for (std::size_t i = 0; i < cal.layers.size(); ++i) {
        CHECK(cal.layers[i].epsilon == direct.layers[i].epsilon);
    }

    // Manifest feedback reproduces the artifact byte for byte.
    CalibrateParams q;
    apply_json(q, command_config(read_json_file(dir + "/run1/manifest.json"), "calibrate"));
    CHECK(q.model == p.model);
    q.out_dir = dir + "/run2";
    cmd_calibrate(q);
    CHECK(slurp(dir + "/run1/calibration.json") == slurp(dir + "/run2/calibration.json"));

    CalibrateParams missing;
    missing.corpus = p.corpus;
    CHECK(message_of([&] { cmd_calibrate(missing); }).find("model path") != std::string::npos);
}

TEST_CASE("cmd_plan writes the assignment artifact") {
    const std::string dir = scratch("plan");
    PlanParams p;
    p.model = kData + "/model2.fpxm";
    p.corpus = kData + "/corpus2.txt";
    p.gamma = 0.5;
    p.out_dir = dir;
    const PrecisionPlan plan = cmd_plan(p);
    CHECK(plan.fp4_count() == round_count(0.5, 8));
    CHECK(plan.layer_count() == 8);

    const json art = read_json_file(dir + "/plan.json");
    CHECK(art.at("gamma").get<double>() == 0.5);
    CHECK(read_json_file(dir + "/manifest.json").at("subcommand") == "plan");

    PlanParams missing;
    missing.model = p.model;
    CHECK(message_of([&] { cmd_plan(missing); }).find("corpus path") != std::string::npos);
}

TEST_CASE("cmd_sweep emits the gamma ladder CSV") {
    const std::string dir = scratch("sweep");
    SweepParams p;
    p.model = kData + "/model3.fpxm";
    p.corpus = kData + "/corpus3.txt";
    p.cost_table = kData + "/cost_table.json";
    p.out_dir = dir + "/run1";
    const std::vector<SweepRow> rows = cmd_sweep(p);
    REQUIRE(rows.size() == 11);

    const std::string csv = slurp(dir + "/run1/sweep.csv");
    CHECK(csv.rfind("gamma,bitwidth_avg,latency_ms,quality_proxy\n", 0) == 0);
    // 12-layer model: endpoints hit the anchors, gamma 0.3 drops 4 layers.
    CHECK(csv.find("\n0.00,8.00,222.0000,") != std::string::npos);
    CHECK(csv.find("\n0.30,6.67,197.0000,") != std::string::npos);
    CHECK(csv.find("\n1.00,4.00,147.0000,") != std::string::npos);

    // Each row's latency agrees with the standalone estimator.
    const CostTable table = load_cost_table(p.cost_table);
    for (const SweepRow& r : rows) {
        CHECK(r.latency_ms == estimate(table, "3B", r.plan).total_ms);
        CHECK(r.plan.gamma == r.gamma);
    }
    // Quality decays from best to worst plan overall.
    CHECK(rows.front().quality_proxy < rows.back().quality_proxy);

    SweepParams q = p;
    q.out_dir = dir + "/run2";
    cmd_sweep(q);
    CHECK(csv == slurp(dir + "/run2/sweep.csv"));

    SweepParams missing;
    missing.model = p.model;
    missing.corpus = p.corpus;
    CHECK(message_of([&] { cmd_sweep(missing); }).find("cost table path") != std::string::npos);
}

TEST_CASE("cmd_hft writes the day report") {
    const std::string dir = scratch("hft");
    write_text_file(dir + "/roster.json", demo_agents_json().dump(2) + "\n");

    HftCmdParams p;
    p.market = kData + "/market_control.csv";
    p.agents = dir + "/roster.json";
    p.out_dir = dir + "/run1";
    const DayReport rep = cmd_hft(p);
    REQUIRE(rep.agents.size() == 2);
    CHECK(rep.opportunities.size() == 100);

    const std::string csv = slurp(dir + "/run1/hft_report.csv");
    CHECK(csv.rfind("name,size_tag,gamma,latency_ms,trades,yield_pct\n", 0) == 0);
    // Fixed agents carry no plan: empty size tag, -1 gamma sentinel.
    CHECK(csv.find("\nfast,,-1.00,200.0000,") != std::string::npos);
    CHECK(csv.find("\nslow,,-1.00,400.0000,") != std::string::npos);

    // Lower latency captures more of each margin.
    CHECK(rep.agents[0].yield_pct > rep.agents[1].yield_pct);

    HftCmdParams q = p;
    q.out_dir = dir + "/run2";
    cmd_hft(q);
    CHECK(csv == slurp(dir + "/run2/hft_report.csv"));

    HftCmdParams missing;
    missing.agents = p.agents;
    CHECK(message_of([&] { cmd_hft(missing); }).find("market CSV path") != std::string::npos);
}

TEST_CASE("cmd_arena writes ratings and the win matrix") {
    const std::string dir = scratch("arena");
    write_text_file(dir + "/roster.json", demo_agents_json().dump(2) + "\n");

    ArenaCmdParams p;
    p.agents = dir + "/roster.json";
    p.out_dir = dir + "/run1";
    p.matches_per_pair = 6;
    p.seed = 9;
    const LadderResult lr = cmd_arena(p);
    REQUIRE(lr.names == std::vector<std::string>{"fast", "slow"});
    CHECK(lr.total_matches == 12);

    const std::string ratings = slurp(dir + "/run1/arena_ratings.csv");
    CHECK(ratings.rfind("agent,rating,wins,losses,draws\n", 0) == 0);
    CHECK(ratings.find("\nfast,") != std::string::npos);

    // Ratings stay a closed pool.
    double sum = 0.0;
    for (const auto& [name, e] : lr.table.entries) sum += e.rating;
    CHECK(sum == Catch::Approx(2000.0).margin(1e-9));

    const std::string matrix = slurp(dir + "/run1/arena_matrix.csv");
    CHECK(matrix.rfind("agent,fast,slow\n", 0) == 0);
    CHECK(matrix.find("fast,-,") != std::string::npos);  // diagonal placeholder

    ArenaCmdParams q = p;
    q.out_dir = dir + "/run2";
    cmd_arena(q);
    CHECK(ratings == slurp(dir + "/run2/arena_ratings.csv"));
    CHECK(matrix == slurp(dir + "/run2/arena_matrix.csv"));

    ArenaCmdParams missing;
    CHECK(message_of([&] { cmd_arena(missing); }).find("agents config path") !=
          std::string::npos);
}

TEST_CASE("cmd_profile pins the interpolation endpoints") {
    const std::string dir = scratch("profile");
    ProfileParams p;
    p.cost_table = kData + "/cost_table.json";
    p.fractions = {0.0, 0.5, 1.0};
    p.out_dir = dir;
    const std::string csv = cmd_profile(p);
    CHECK(csv ==
          "size_tag,fp4_fraction,latency_ms\n"
          "3B,0.00,222.0000\n"
          "3B,0.50,184.5000\n"
          "3B,1.00,147.0000\n");
    CHECK(slurp(dir + "/profile.csv") == csv);

    ProfileParams missing;
    CHECK(message_of([&] { cmd_profile(missing); }).find("cost table path") !=
          std::string::npos);
}

TEST_CASE("manifests echo the resolved configuration") {
    const std::string dir = scratch("manifest");
    ProfileParams p;
    p.cost_table = kData + "/cost_table.json";
    p.size_tag = "7B";
    p.fractions = {0.25};
    p.out_dir = dir;
    cmd_profile(p);

    const json m = read_json_file(dir + "/manifest.json");
    CHECK(m.at("subcommand") == "profile");
    ProfileParams q;
    apply_json(q, command_config(m, "profile"));
    CHECK(to_json(q) == to_json(p));
    CHECK(to_json(q) == m.at("config"));
}
