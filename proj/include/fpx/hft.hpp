#pragma once

// Deterministic per-second trading backtester. Each second carries a
// low/high pair; when the relative spread clears a threshold an
// opportunity opens, and the value an agent captures from it decays
// linearly with the agent's decision latency. Faster agents therefore
// monetize the same tape better — the whole point of trading latency
// against decision quality.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "fpx/agents.hpp"

namespace fpx {

struct MarketTick {
    std::int64_t ts = 0;  // epoch seconds, strictly increasing
    double low = 0.0;
    double high = 0.0;
    double volume = 0.0;
};

struct HftConfig {
    double threshold_b = 0.02;     // minimum (high-low)/low to open an opportunity
    double cooling_s = 60.0;       // suppression window between opportunities
    double initial_cash = 10000.0;
    double t_decay_ms = 1000.0;    // capture decays to zero at this latency
    bool round_trip = true;        // enter and exit within the opportunity
};

inline void validate_hft_config(const HftConfig& c) {
    if (!(c.threshold_b > 0.0)) throw std::invalid_argument("hft config: threshold_b must be > 0");
    if (!(c.cooling_s >= 0.0)) throw std::invalid_argument("hft config: cooling_s must be >= 0");
    if (!(c.t_decay_ms > 0.0)) throw std::invalid_argument("hft config: t_decay_ms must be > 0");
    if (!(c.initial_cash > 0.0)) throw std::invalid_argument("hft config: initial_cash must be > 0");
}

// ---------------------------------------------------------------------------
// Market data
// ---------------------------------------------------------------------------

// CSV format: header "ts,low,high" or "ts,low,high,volume", one tick per
// line. Violations are reported with their line numbers.
inline std::vector<MarketTick> parse_market_csv(std::istream& in, const std::string& origin) {
    std::vector<MarketTick> ticks;
    std::string line;
    std::size_t line_no = 0;

    if (!std::getline(in, line)) {
        throw std::runtime_error(origin + ": empty market file");
    }
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool has_volume = false;
    if (line == "ts,low,high") {
        has_volume = false;
    } else if (line == "ts,low,high,volume") {
        has_volume = true;
    } else {
        throw std::runtime_error(origin + ":1: expected header \"ts,low,high[,volume]\", got \"" +
                                 line + "\"");
    }

    std::vector<std::string> bad;
    std::int64_t prev_ts = 0;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;

        std::istringstream row(line);
        std::string field;
        MarketTick t;
        bool ok = true;
        try {
            if (!std::getline(row, field, ',')) throw std::invalid_argument("ts");
            t.ts = std::stoll(field);
            if (!std::getline(row, field, ',')) throw std::invalid_argument("low");
            t.low = std::stod(field);
            if (!std::getline(row, field, ',')) throw std::invalid_argument("high");
            t.high = std::stod(field);
            if (has_volume) {
                if (!std::getline(row, field, ',')) throw std::invalid_argument("volume");
                t.volume = std::stod(field);
            }
            if (std::getline(row, field, ',')) throw std::invalid_argument("extra field");
        } catch (const std::exception&) {
            ok = false;
        }
        if (ok && !(t.low > 0.0 && t.low <= t.high)) ok = false;
        if (ok && !first && t.ts <= prev_ts) ok = false;
        if (!ok) {
            bad.push_back(std::to_string(line_no));
            continue;
        }
        prev_ts = t.ts;
        first = false;
        ticks.push_back(t);
    }
    if (!bad.empty()) {
        std::string joined;
        for (std::size_t i = 0; i < bad.size(); ++i) {
            joined += (i ? ", " : "") + bad[i];
        }
        throw std::runtime_error(origin + ": invalid market rows at lines " + joined);
    }
    if (ticks.empty()) {
        throw std::runtime_error(origin + ": no ticks after header");
    }
    return ticks;
}

inline std::vector<MarketTick> ingest_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("ingest_csv: cannot open " + path);
    return parse_market_csv(in, path);
}

inline void save_market_csv(const std::vector<MarketTick>& ticks, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_market_csv: cannot open " + path);
    out << "ts,low,high\n";
    char buf[96];
    for (const MarketTick& t : ticks) {
        std::snprintf(buf, sizeof buf, "%lld,%.4f,%.4f\n", static_cast<long long>(t.ts), t.low,
                      t.high);
        out << buf;
    }
}

// Synthetic day: a slow random walk with a tight baseline spread and a
// spread spike roughly every `spike_every_s` seconds. Spike margins are
// drawn uniformly from [margin_lo, margin_hi], which should bracket the
// opportunity threshold in use.
struct MarketGenConfig {
    std::int64_t start_ts = 1722852000;  // arbitrary morning epoch
    int seconds = 28800;                 // one 8-hour session
    double base_price = 100.0;
    double baseline_spread = 0.002;
    int spike_every_s = 63;
    double margin_lo = 0.02;
    double margin_hi = 0.06;
};

inline std::vector<MarketTick> generate_market_day(std::uint64_t seed,
                                                   const MarketGenConfig& cfg) {
    if (cfg.seconds < 1) throw std::invalid_argument("market gen: seconds must be >= 1");
    Rng rng(seed);
    std::vector<MarketTick> ticks;
    ticks.reserve(static_cast<std::size_t>(cfg.seconds));
    double mid = cfg.base_price;
    int next_spike = cfg.spike_every_s;
    for (int s = 0; s < cfg.seconds; ++s) {
        mid *= 1.0 + rng.uniform(-0.0004, 0.0004);
        double spread = cfg.baseline_spread;
        if (s == next_spike) {
            spread = rng.uniform(cfg.margin_lo, cfg.margin_hi);
            next_spike += cfg.spike_every_s + static_cast<int>(rng.next_below(21)) - 10;
        }
        MarketTick t;
        t.ts = cfg.start_ts + s;
        t.low = mid;
        t.high = mid * (1.0 + spread);
        ticks.push_back(t);
    }
    return ticks;
}

// Exactly `count` qualifying spreads with fixed spacing and a cycling
// margin pattern; everything else flat. Used for latency-dominance
// controls where the opportunity list must be known in advance.
inline std::vector<MarketTick> make_scripted_day(int count, double margin_scale = 1.0,
                                                 int spacing_s = 60) {
    if (count < 1) throw std::invalid_argument("scripted day: count must be >= 1");
    const double margins[5] = {0.028, 0.036, 0.022, 0.044, 0.030};
    std::vector<MarketTick> ticks;
    const std::int64_t start = 1722852000;
    const int total = count * spacing_s + 1;
    for (int s = 0; s < total; ++s) {
        MarketTick t;
        t.ts = start + s;
        t.low = 100.0;
        t.high = 100.0;
        if (s % spacing_s == 0 && s / spacing_s < count) {
            t.high = 100.0 * (1.0 + margins[(s / spacing_s) % 5] * margin_scale);
        }
        ticks.push_back(t);
    }
    return ticks;
}

// ---------------------------------------------------------------------------
// Opportunities
// ---------------------------------------------------------------------------

struct Opportunity {
    std::size_t tick_index = 0;
    double margin = 0.0;      // (high - low) / low
    double opened_at_ms = 0.0;  // relative to the first tick of the day
};

inline std::vector<Opportunity> detect_opportunities(const std::vector<MarketTick>& ticks,
                                                     const HftConfig& cfg) {
    validate_hft_config(cfg);
    std::vector<Opportunity> opps;
    if (ticks.empty()) return opps;
    const std::int64_t day_start = ticks.front().ts;
    double last_emit_ts = -1e300;
    for (std::size_t i = 0; i < ticks.size(); ++i) {
        const double margin = (ticks[i].high - ticks[i].low) / ticks[i].low;
        if (margin < cfg.threshold_b) continue;
        if (static_cast<double>(ticks[i].ts) - last_emit_ts < cfg.cooling_s) continue;
        last_emit_ts = static_cast<double>(ticks[i].ts);
        opps.push_back(Opportunity{i, margin,
                                   static_cast<double>(ticks[i].ts - day_start) * 1000.0});
    }
    return opps;
}

// ---------------------------------------------------------------------------
// Execution
// ---------------------------------------------------------------------------

struct TradeFill {
    std::string agent;
    std::string side;          // "buy" (with the spread) or "sell" (against it)
    double fraction = 0.0;
    double invested = 0.0;
    double price = 0.0;        // entry price after latency slippage
    double delta_ms = 0.0;
    double captured_margin = 0.0;  // margin * max(0, 1 - delta/T); sign follows direction
    double pnl = 0.0;          // realized currency move (round-trip mode)
    bool flagged = false;      // clamped for insufficient cash
};

struct Portfolio {
    double cash = 0.0;
    double position = 0.0;     // shares (directional mode only)
    double cost_basis = 0.0;   // total currency paid for the open position
    double realized_pnl = 0.0;
    std::vector<TradeFill> fills;
};

inline double portfolio_value(const Portfolio& p, double mark_price) {
    return p.cash + p.position * mark_price;
}

// Resolves one opportunity. Agents are ranked by response time (ties by
// name); each latency Delta slips the entry toward the middle of the
// spread, so captured margin per unit is margin * max(0, 1 - Delta/T).
// Round-trip mode books entry and exit in one fill; directional mode
// holds the position. Wrong-direction actions ("sell" on the round trip)
// capture the negated margin.
inline std::vector<TradeFill> execute(const Opportunity& opp, const MarketTick& tick,
                                      std::vector<std::pair<AgentProfile*, Action>>& actions,
                                      const HftConfig& cfg,
                                      std::map<std::string, Portfolio>& books) {
    for (auto& [agent, action] : actions) {
        if (action.issued_at < opp.opened_at_ms - 1e-9) {
            throw std::invalid_argument("execute: action from \"" + agent->name +
                                        "\" issued before the opportunity opened");
        }
    }
    std::stable_sort(actions.begin(), actions.end(), [&](const auto& a, const auto& b) {
        const double da = a.second.issued_at - opp.opened_at_ms;
        const double db = b.second.issued_at - opp.opened_at_ms;
        if (da != db) return da < db;
        return a.first->name < b.first->name;
    });

    std::vector<TradeFill> fills;
    for (auto& [agent, action] : actions) {
        const std::string& verb = action.payload.verb;
        if (verb != "buy" && verb != "sell") continue;  // hold/noop leave no fill

        Portfolio& book = books[agent->name];
        const double delta = action.issued_at - opp.opened_at_ms;
        const double d = std::min(1.0, delta / cfg.t_decay_ms);
        const double span = tick.high - tick.low;
        const double entry = tick.low + span * d * 0.5;
        const double exit = tick.high - span * d * 0.5;
        const double capture_factor = std::max(0.0, 1.0 - delta / cfg.t_decay_ms);

        TradeFill fill;
        fill.agent = agent->name;
        fill.side = verb;
        fill.fraction = action.payload.fraction;
        fill.delta_ms = delta;

        if (cfg.round_trip) {
            double invested = action.payload.fraction * std::max(0.0, book.cash);
            if (invested > book.cash) {
                invested = std::max(0.0, book.cash);
                fill.flagged = true;
            }
            fill.invested = invested;
            fill.price = entry;
            fill.captured_margin =
                (verb == "buy" ? 1.0 : -1.0) * opp.margin * capture_factor;
            fill.pnl = invested * fill.captured_margin;
            book.cash += fill.pnl;
            book.realized_pnl += fill.pnl;
        } else if (verb == "buy") {
            double invested = action.payload.fraction * std::max(0.0, book.cash);
            if (invested > book.cash) {
                invested = std::max(0.0, book.cash);
                fill.flagged = true;
            }
            fill.invested = invested;
            fill.price = entry;
            fill.captured_margin = opp.margin * capture_factor;
            book.cash -= invested;
            book.position += invested / entry;
            book.cost_basis += invested;
        } else {  // directional sell: flatten whatever is held
            if (book.position <= 0.0) continue;
            const double proceeds = book.position * exit;
            fill.invested = book.cost_basis;
            fill.price = exit;
            fill.captured_margin = -opp.margin * capture_factor;
            fill.pnl = proceeds - book.cost_basis;
            book.cash += proceeds;
            book.realized_pnl += fill.pnl;
            book.position = 0.0;
            book.cost_basis = 0.0;
        }
        book.fills.push_back(fill);
        fills.push_back(fill);
    }
    return fills;
}

// ---------------------------------------------------------------------------
// Day loop
// ---------------------------------------------------------------------------

struct AgentDayResult {
    std::string name;
    std::string size_tag;
    double gamma = -1.0;
    double latency_ms = 0.0;
    int trades = 0;
    double yield_pct = 0.0;
    double final_value = 0.0;
    Portfolio book;
};

struct DayReport {
    std::vector<AgentDayResult> agents;  // in input agent order
    std::vector<Opportunity> opportunities;
    double final_mark = 0.0;
};

// Runs every agent over the day's opportunities. Agents observe the
// compact state (margin, available capital, last fill price, remaining
// session time), decide sequentially in declared order, and the fills
// settle per opportunity. Yield marks the final portfolio at the last
// tick's midpoint.
inline DayReport run_day(const std::vector<MarketTick>& ticks, std::vector<AgentProfile>& agents,
                         const HftConfig& cfg) {
    validate_hft_config(cfg);
    if (agents.empty()) throw std::invalid_argument("run_day: no agents");
    if (ticks.empty()) throw std::invalid_argument("run_day: no ticks");

    DayReport report;
    report.opportunities = detect_opportunities(ticks, cfg);

    std::map<std::string, Portfolio> books;
    std::vector<Context> contexts(agents.size());
    for (AgentProfile& a : agents) {
        if (books.count(a.name)) {
            throw std::invalid_argument("run_day: duplicate agent name \"" + a.name + "\"");
        }
        books[a.name].cash = cfg.initial_cash;
    }

    const std::int64_t day_end = ticks.back().ts;
    for (const Opportunity& opp : report.opportunities) {
        const MarketTick& tick = ticks[opp.tick_index];
        std::vector<std::pair<AgentProfile*, Action>> actions;
        actions.reserve(agents.size());
        for (std::size_t i = 0; i < agents.size(); ++i) {
            const Portfolio& book = books[agents[i].name];
            Observation obs;
            obs.kind = "hft_opportunity";
            obs.timestamp_ms = opp.opened_at_ms;
            obs.values["margin"] = opp.margin;
            obs.values["cash"] = book.cash;
            obs.values["time_remaining_s"] = static_cast<double>(day_end - tick.ts);
            obs.values["last_fill_price"] = book.fills.empty() ? 0.0 : book.fills.back().price;
            actions.emplace_back(&agents[i], decide(agents[i], obs, contexts[i]));
        }
        execute(opp, tick, actions, cfg, books);
    }

    const MarketTick& last = ticks.back();
    report.final_mark = 0.5 * (last.low + last.high);
    for (const AgentProfile& a : agents) {
        const Portfolio& book = books[a.name];
        AgentDayResult row;
        row.name = a.name;
        row.size_tag = a.size_tag;
        row.gamma = a.gamma;
        row.latency_ms = a.latency.base_ms + 0.5 * a.latency.jitter_ms;
        row.trades = static_cast<int>(book.fills.size());
        row.final_value = portfolio_value(book, report.final_mark);
        row.yield_pct = (row.final_value - cfg.initial_cash) / cfg.initial_cash * 100.0;
        row.book = book;
        report.agents.push_back(std::move(row));
    }
    return report;
}

}  // namespace fpx
