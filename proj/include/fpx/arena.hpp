#pragma once

// Tick-resolution duel arena. Two agents trade strikes on a fixed action
// clock: a decision begun at one tick boundary lands at the first boundary
// at or after its issue time, so an agent slower than the tick acts less
// often and on older observations (which halves its damage by default).
// Ladders aggregate many seeded duels into ELO ratings and a win-rate
// matrix.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpx/agents.hpp"

namespace fpx {

struct DuelConfig {
    double tick_ms = 200.0;      // action resolution clock
    int rounds_to_win = 2;       // match is best-of (2*rounds_to_win - 1)
    int max_ticks = 300;         // per-round tick budget
    double hp_start = 10.0;
    double damage = 1.0;         // per clean landed strike
    double stale_penalty = 0.5;  // multiplier when the observation is older than one tick
};

inline void validate_duel_config(const DuelConfig& c) {
    if (!(c.tick_ms > 0.0)) throw std::invalid_argument("duel config: tick_ms must be > 0");
    if (!(c.hp_start > 0.0)) throw std::invalid_argument("duel config: hp_start must be > 0");
    if (c.rounds_to_win < 1) throw std::invalid_argument("duel config: rounds_to_win must be >= 1");
    if (c.max_ticks < 1) throw std::invalid_argument("duel config: max_ticks must be >= 1");
    if (!(c.damage >= 0.0)) throw std::invalid_argument("duel config: damage must be >= 0");
    if (!(c.stale_penalty >= 0.0 && c.stale_penalty <= 1.0)) {
        throw std::invalid_argument("duel config: stale_penalty must lie in [0,1]");
    }
}

// One landed action. Fighters are identified by slot (0/1), not name, so
// transcripts compare across renamed agents.
struct DuelEvent {
    int round = 0;
    int tick = 0;
    int fighter = 0;
    std::string verb;
    bool stale = false;
    double damage_dealt = 0.0;
    double foe_hp_after = 0.0;
};

struct RoundResult {
    int winner = -1;  // 0 / 1 / -1 for a drawn round
    int ticks = 0;    // boundary index at which the round ended
    std::array<double, 2> hp{0.0, 0.0};
};

struct MatchResult {
    int winner = -1;  // 0 / 1 / -1 for a drawn match
    std::array<int, 2> rounds_won{0, 0};
    std::vector<RoundResult> rounds;
    std::vector<DuelEvent> transcript;
};

// Canonical text form of a transcript, used for byte-level comparisons.
inline std::string transcript_text(const MatchResult& m) {
    std::string out;
    char buf[160];
    for (const DuelEvent& e : m.transcript) {
        std::snprintf(buf, sizeof buf, "r%d t%d f%d %s%s dmg=%.6g hp=%.6g\n", e.round, e.tick,
                      e.fighter, e.verb.c_str(), e.stale ? "*" : "", e.damage_dealt,
                      e.foe_hp_after);
        out += buf;
    }
    return out;
}

// Runs one match. Per tick boundary: pending actions whose issue time has
// arrived land first (both sides resolve simultaneously, so mutual KO is a
// drawn round), then every free agent observes the fresh state and begins
// its next decision. Landed strikes deal full damage when the observation
// they were computed from is at most one tick old, penalized damage
// otherwise; whiffs and no-ops land silently. A round ends at zero hp or
// after max_ticks (higher hp wins, equal hp draws). Fighters' policy
// streams are reseeded from the match seed, so a duel is a pure function
// of (agents, config, seed).
inline MatchResult run_duel(const AgentProfile& agent_a, const AgentProfile& agent_b,
                            const DuelConfig& cfg, std::uint64_t seed) {
    validate_duel_config(cfg);

    std::array<AgentProfile, 2> fighters{agent_a, agent_b};
    fighters[0].rng = Rng(mix_seed(seed, 0));
    fighters[1].rng = Rng(mix_seed(seed, 1));
    std::array<Context, 2> contexts;

    struct Pending {
        Action action;
        double obs_ts = 0.0;
    };

    MatchResult match;
    const int max_rounds = 2 * cfg.rounds_to_win - 1;
    const double eps = 1e-9;

    for (int round = 1; round <= max_rounds; ++round) {
        std::array<double, 2> hp{cfg.hp_start, cfg.hp_start};
        std::array<std::optional<Pending>, 2> pending;
        RoundResult rr;

        for (int tick = 0;; ++tick) {
            const double now = tick * cfg.tick_ms;

            // Land phase: pick up everything due, then resolve both sides
            // against the hp values as of this boundary.
            std::array<std::optional<Pending>, 2> landed;
            for (int i = 0; i < 2; ++i) {
                if (pending[i] && pending[i]->action.issued_at <= now + eps) {
                    landed[i] = *pending[i];
                    pending[i].reset();
                }
            }
            for (int i = 0; i < 2; ++i) {
                if (!landed[i]) continue;
                const bool stale = now - landed[i]->obs_ts > cfg.tick_ms + eps;
                const std::string& verb = landed[i]->action.payload.verb;
                double dealt = 0.0;
                if (verb == "strike") {
                    dealt = cfg.damage * (stale ? cfg.stale_penalty : 1.0);
                    hp[1 - i] -= dealt;
                }
                match.transcript.push_back(DuelEvent{round, tick, i, verb, stale, dealt,
                                                     std::max(hp[1 - i], 0.0)});
            }

            const bool ko_a = hp[0] <= 0.0;
            const bool ko_b = hp[1] <= 0.0;
            if (ko_a || ko_b || tick == cfg.max_ticks) {
                if (ko_a && ko_b) {
                    rr.winner = -1;
                } else if (ko_b) {
                    rr.winner = 0;
                } else if (ko_a) {
                    rr.winner = 1;
                } else if (hp[0] != hp[1]) {
                    rr.winner = hp[0] > hp[1] ? 0 : 1;
                } else {
                    rr.winner = -1;
                }
                rr.ticks = tick;
                rr.hp = hp;
                break;
            }

            // Decide phase: free agents see the post-landing state.
            for (int i = 0; i < 2; ++i) {
                if (pending[i]) continue;
                Observation obs;
                obs.kind = "duel_tick";
                obs.timestamp_ms = now;
                obs.values["own_hp"] = hp[i];
                obs.values["foe_hp"] = hp[1 - i];
                obs.values["tick"] = static_cast<double>(tick);
                obs.values["round"] = static_cast<double>(round);
                Action act = decide(fighters[i], obs, contexts[i]);
                pending[i] = Pending{std::move(act), now};
            }
        }

        match.rounds.push_back(rr);
        if (rr.winner >= 0) ++match.rounds_won[rr.winner];
        if (match.rounds_won[0] == cfg.rounds_to_win || match.rounds_won[1] == cfg.rounds_to_win) {
            break;
        }
    }

    if (match.rounds_won[0] != match.rounds_won[1]) {
        match.winner = match.rounds_won[0] > match.rounds_won[1] ? 0 : 1;
    }
    return match;
}

// ---------------------------------------------------------------------------
// Ratings
// ---------------------------------------------------------------------------

struct EloEntry {
    double rating = 1000.0;
    int wins = 0;
    int losses = 0;
    int draws = 0;
};

struct MatchRecord {
    std::string a;
    std::string b;
    double score_a = 0.0;  // 1 win, 0.5 draw, 0 loss (for a)
};

struct EloTable {
    std::map<std::string, EloEntry> entries;
    double k_factor = 32.0;
    std::vector<MatchRecord> log;

    void add(const std::string& name) { entries.emplace(name, EloEntry{}); }
};

// Standard logistic update. With one shared K the rating pool is
// conserved exactly: the two deltas cancel term for term.
inline void elo_update(EloTable& table, const std::string& a, const std::string& b,
                       double score_a) {
    if (!(score_a == 0.0 || score_a == 0.5 || score_a == 1.0)) {
        throw std::invalid_argument("elo_update: score must be 0, 0.5, or 1");
    }
    auto ia = table.entries.find(a);
    auto ib = table.entries.find(b);
    if (ia == table.entries.end() || ib == table.entries.end()) {
        throw std::invalid_argument("elo_update: unknown agent \"" +
                                    (ia == table.entries.end() ? a : b) + "\"");
    }
    EloEntry& ea = ia->second;
    EloEntry& eb = ib->second;
    const double expect_a = 1.0 / (1.0 + std::pow(10.0, (eb.rating - ea.rating) / 400.0));
    const double expect_b = 1.0 - expect_a;
    const double score_b = 1.0 - score_a;
    ea.rating += table.k_factor * (score_a - expect_a);
    eb.rating += table.k_factor * (score_b - expect_b);
    if (score_a == 1.0) {
        ++ea.wins;
        ++eb.losses;
    } else if (score_a == 0.0) {
        ++ea.losses;
        ++eb.wins;
    } else {
        ++ea.draws;
        ++eb.draws;
    }
    table.log.push_back(MatchRecord{a, b, score_a});
}

struct LadderResult {
    EloTable table;
    std::vector<std::string> names;               // input order
    std::vector<std::vector<double>> win_rate;    // [i][j]: i's score rate vs j, draws at 0.5
    int total_matches = 0;
};

// Full round robin over ordered pairs, matches_per_pair duels each, every
// duel seeded as mix(master, running match counter) so any match can be
// replayed in isolation.
inline LadderResult run_ladder(const std::vector<AgentProfile>& agents, int matches_per_pair,
                               const DuelConfig& cfg, std::uint64_t seed) {
    validate_duel_config(cfg);
    if (agents.size() < 2) throw std::invalid_argument("run_ladder: need at least two agents");
    if (matches_per_pair < 1) {
        throw std::invalid_argument("run_ladder: matches_per_pair must be >= 1");
    }

    LadderResult out;
    for (const AgentProfile& a : agents) {
        if (out.table.entries.count(a.name)) {
            throw std::invalid_argument("run_ladder: duplicate agent name \"" + a.name + "\"");
        }
        out.table.add(a.name);
        out.names.push_back(a.name);
    }

    const std::size_t n = agents.size();
    out.win_rate.assign(n, std::vector<double>(n, 0.0));
    std::vector<std::vector<int>> encounters(n, std::vector<int>(n, 0));

    std::uint64_t counter = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (i == j) continue;
            for (int m = 0; m < matches_per_pair; ++m) {
                const std::uint64_t match_seed = mix_seed(seed, counter++);
                const MatchResult r = run_duel(agents[i], agents[j], cfg, match_seed);
                const double score_i = r.winner == 0 ? 1.0 : r.winner == 1 ? 0.0 : 0.5;
                elo_update(out.table, agents[i].name, agents[j].name, score_i);
                out.win_rate[i][j] += score_i;
                out.win_rate[j][i] += 1.0 - score_i;
                ++encounters[i][j];
                ++encounters[j][i];
                ++out.total_matches;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            if (encounters[i][j] > 0) out.win_rate[i][j] /= encounters[i][j];
        }
    }
    return out;
}

}  // namespace fpx
