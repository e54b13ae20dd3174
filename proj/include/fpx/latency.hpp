#pragma once

// Decode-latency model. Each model size carries three measured anchors
// (full, 8-bit, 4-bit decode latency in ms per action); a mixed-precision
// configuration with a fraction f of its layers at 4 bits interpolates
// linearly between the 8-bit and 4-bit anchors:
//
//   total = overhead + lat8 - f * (lat8 - lat4)
//
// No configuration at all (no plan) costs the full-precision anchor.

#include <cmath>
#include <fstream>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace fpx {

struct SizeCost {
    double fp16 = 0.0;
    double fp8 = 0.0;
    double fp4 = 0.0;
};

struct CostTable {
    std::map<std::string, SizeCost> sizes;
    double overhead_ms = 0.0;
};

inline void validate_cost_table(const CostTable& t) {
    if (t.sizes.empty()) {
        throw std::invalid_argument("cost table: no sizes defined");
    }
    if (!(t.overhead_ms >= 0.0)) {
        throw std::invalid_argument("cost table: overhead_ms must be >= 0");
    }
    for (const auto& [tag, c] : t.sizes) {
        if (!(c.fp4 > 0.0) || !(c.fp4 <= c.fp8) || !(c.fp8 <= c.fp16)) {
            throw std::invalid_argument("cost table: size \"" + tag +
                                        "\" must satisfy 0 < fp4 <= fp8 <= fp16");
        }
    }
}

// Measured single-batch decode latencies for the bundled size tags.
inline CostTable default_cost_table() {
    CostTable t;
    t.overhead_ms = 0.0;
    t.sizes["1.5B"] = SizeCost{203.0, 142.0, 83.0};
    t.sizes["3B"] = SizeCost{349.0, 222.0, 147.0};
    t.sizes["7B"] = SizeCost{619.0, 394.0, 248.0};
    t.sizes["14B"] = SizeCost{1302.0, 801.0, 492.0};
    return t;
}

inline const SizeCost& cost_for(const CostTable& t, const std::string& size_tag) {
    auto it = t.sizes.find(size_tag);
    if (it == t.sizes.end()) {
        throw std::invalid_argument("cost table: unknown size tag \"" + size_tag + "\"");
    }
    return it->second;
}

inline CostTable cost_table_from_json(const nlohmann::json& j) {
    CostTable t;
    if (!j.contains("sizes") || !j["sizes"].is_object()) {
        throw std::runtime_error("cost table: missing \"sizes\" object");
    }
    for (const auto& [tag, c] : j["sizes"].items()) {
        SizeCost sc;
        sc.fp16 = c.at("fp16").get<double>();
        sc.fp8 = c.at("fp8").get<double>();
        sc.fp4 = c.at("fp4").get<double>();
        t.sizes[tag] = sc;
    }
    t.overhead_ms = j.value("overhead_ms", 0.0);
    validate_cost_table(t);
    return t;
}

inline nlohmann::json cost_table_to_json(const CostTable& t) {
    nlohmann::json sizes = nlohmann::json::object();
    for (const auto& [tag, c] : t.sizes) {
        sizes[tag] = {{"fp16", c.fp16}, {"fp8", c.fp8}, {"fp4", c.fp4}};
    }
    return nlohmann::json{{"sizes", sizes}, {"overhead_ms", t.overhead_ms}};
}

inline CostTable load_cost_table(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_cost_table: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_cost_table: " + path + ": " + e.what());
    }
    return cost_table_from_json(j);
}

struct LatencyEstimate {
    double total_ms = 0.0;
    double base_ms = 0.0;      // anchor before the 4-bit saving
    double savings_ms = 0.0;   // f * (lat8 - lat4)
    double overhead_ms = 0.0;
    double fp4_fraction = 0.0;
};

// Latency for a mixed plan whose fraction `fp4_fraction` of layers runs
// at 4 bits. f = 0 reproduces the 8-bit anchor, f = 1 the 4-bit anchor.
inline LatencyEstimate estimate(const CostTable& t, const std::string& size_tag,
                                double fp4_fraction) {
    if (!(fp4_fraction >= 0.0 && fp4_fraction <= 1.0)) {
        throw std::invalid_argument("estimate: fp4 fraction must lie in [0, 1]");
    }
    const SizeCost& c = cost_for(t, size_tag);
    LatencyEstimate e;
    e.fp4_fraction = fp4_fraction;
    e.base_ms = c.fp8;
    e.savings_ms = fp4_fraction * (c.fp8 - c.fp4);
    e.overhead_ms = t.overhead_ms;
    e.total_ms = t.overhead_ms + c.fp8 - e.savings_ms;
    return e;
}

// Latency with no plan at all: the full-precision anchor.
inline LatencyEstimate estimate(const CostTable& t, const std::string& size_tag) {
    const SizeCost& c = cost_for(t, size_tag);
    LatencyEstimate e;
    e.base_ms = c.fp16;
    e.overhead_ms = t.overhead_ms;
    e.total_ms = t.overhead_ms + c.fp16;
    return e;
}

}  // namespace fpx
