#pragma once

// The agent contract shared by both simulators: a decision policy plus an
// inference latency. Policies see a compact numeric observation and emit a
// verb + fraction payload; the simulator stamps wall-clock semantics onto
// the issued_at field. The latency/accuracy agent family is the
// controllable surrogate for a quantized model: its latency comes from the
// cost table and its accuracy from the plan's quality proxy.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fpx/latency.hpp"
#include "fpx/model.hpp"
#include "fpx/planner.hpp"
#include "fpx/tensor.hpp"

namespace fpx {

// Compact environment snapshot. `kind` routes policy behavior
// ("hft_opportunity", "duel_tick"); `values` carries the numeric state
// the environment chooses to expose.
struct Observation {
    std::string kind;
    double timestamp_ms = 0.0;
    std::map<std::string, double> values;
};

struct ActionPayload {
    std::string verb = "noop";
    double fraction = 0.0;

    bool operator==(const ActionPayload& o) const {
        return verb == o.verb && fraction == o.fraction;
    }
};

struct Action {
    ActionPayload payload;
    double issued_at = 0.0;  // observation timestamp + drawn latency
};

// Rolling observation/action history, appended by decide().
struct Context {
    std::vector<std::pair<Observation, Action>> history;
};

// Constant latency plus optional uniform jitter in [0, jitter_ms). A
// zero-jitter draw consumes no randomness, so constant-latency agents
// keep their policy streams aligned across latency settings.
struct LatencyDraw {
    double base_ms = 0.0;
    double jitter_ms = 0.0;

    double draw(Rng& rng) const {
        if (jitter_ms > 0.0) return base_ms + rng.uniform(0.0, jitter_ms);
        return base_ms;
    }
};

using Policy = std::function<ActionPayload(const Observation&, const Context&, Rng&)>;

struct AgentProfile {
    std::string name;
    Policy policy;
    LatencyDraw latency;
    Rng rng{0};

    // Report metadata; negative marks "not applicable".
    std::string size_tag;
    double gamma = -1.0;
    double accuracy = -1.0;

    AgentProfile() = default;
    AgentProfile(std::string name_, Policy policy_, LatencyDraw latency_, std::uint64_t seed)
        : name(std::move(name_)), policy(std::move(policy_)), latency(latency_), rng(seed) {
        if (latency.base_ms < 0.0 || latency.jitter_ms < 0.0) {
            throw std::invalid_argument("agent \"" + name + "\": latency draws must be >= 0");
        }
    }
};

// Runs the policy against the observation and stamps the issue time. A
// throwing policy degrades to an explicit no-op; agents never stall the
// simulation loop. Draw order is fixed: policy first, then jitter.
inline Action decide(AgentProfile& agent, const Observation& obs, Context& ctx) {
    ActionPayload payload;
    if (agent.policy) {
        try {
            payload = agent.policy(obs, ctx, agent.rng);
        } catch (const std::exception&) {
            payload = ActionPayload{};  // noop
        }
    }
    Action action{std::move(payload), obs.timestamp_ms + agent.latency.draw(agent.rng)};
    ctx.history.emplace_back(obs, action);
    return action;
}

// Maps a plan's quality proxy to an action accuracy: p = p_max *
// exp(-alpha * proxy). Monotone non-increasing in the proxy for any valid
// config; proxy 0 (an unquantized plan) gives exactly p_max.
struct QualityMap {
    double p_max = 0.92;
    double alpha = 2.0;

    double operator()(double proxy) const {
        if (!(p_max >= 0.0 && p_max <= 1.0)) {
            throw std::invalid_argument("quality map: p_max must lie in [0,1]");
        }
        if (!(alpha >= 0.0)) {
            throw std::invalid_argument("quality map: alpha must be >= 0");
        }
        if (!(proxy >= 0.0)) {
            throw std::invalid_argument("quality map: proxy must be >= 0");
        }
        return p_max * std::exp(-alpha * proxy);
    }
};

namespace detail {

// Shared policy of the latency/accuracy family: with probability p emit
// the environment's correct verb, otherwise the documented wrong one
// (losing-direction trade / whiffed strike). Unknown observation kinds
// produce a no-op so agents are safe to point at any environment.
inline ActionPayload quality_policy_step(const Observation& obs, double p, double fraction,
                                         Rng& rng) {
    const bool correct = rng.next_uniform() < p;
    ActionPayload out;
    if (obs.kind == "hft_opportunity") {
        out.verb = correct ? "buy" : "sell";
        out.fraction = fraction;
    } else if (obs.kind == "duel_tick") {
        out.verb = correct ? "strike" : "whiff";
    }
    return out;
}

}  // namespace detail

// Fixed (latency, accuracy) agent; the building block both simulators
// are tested with before plans enter the picture.
inline AgentProfile make_latency_quality_agent(const std::string& name, double latency_ms,
                                               double p, std::uint64_t seed,
                                               double fraction = 1.0) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw std::invalid_argument("agent \"" + name + "\": accuracy p must lie in [0,1]");
    }
    if (!(fraction >= 0.0 && fraction <= 1.0)) {
        throw std::invalid_argument("agent \"" + name + "\": fraction must lie in [0,1]");
    }
    AgentProfile agent(
        name,
        [p, fraction](const Observation& obs, const Context&, Rng& rng) {
            return detail::quality_policy_step(obs, p, fraction, rng);
        },
        LatencyDraw{latency_ms, 0.0}, seed);
    agent.accuracy = p;
    return agent;
}

// Bridges a precision plan to an agent: latency from the cost table's
// interpolation, accuracy from the plan's measured quality proxy through
// the quality map.
inline AgentProfile from_plan(const std::string& size_tag, const PrecisionPlan& plan,
                              const CostTable& table, const QualityMap& qmap,
                              double quality_proxy_value, std::uint64_t seed,
                              std::string name = "") {
    const LatencyEstimate lat = estimate(table, size_tag, plan);
    const double p = qmap(quality_proxy_value);
    if (name.empty()) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%s-g%02d", size_tag.c_str(),
                      int(std::lround(plan.gamma * 100)));
        name = buf;
    }
    AgentProfile agent = make_latency_quality_agent(name, lat.total_ms, p, seed);
    agent.size_tag = size_tag;
    agent.gamma = plan.gamma;
    return agent;
}

inline AgentProfile from_plan(const std::string& size_tag, const PrecisionPlan& plan,
                              const CostTable& table, const QualityMap& qmap,
                              const ToyTransformer& model, const Corpus& corpus,
                              std::uint64_t seed, std::string name = "") {
    const double proxy = quality_proxy(model, corpus, &plan.assignment);
    return from_plan(size_tag, plan, table, qmap, proxy, seed, std::move(name));
}

}  // namespace fpx
