#pragma once

// Mixed-precision planning: measure how much each linear layer suffers
// when its kernel drops to 4 bits, then, for a compression knob gamma,
// send the most tolerant floor(gamma * L + 0.5) layers to 4 bits and the
// rest to 8 bits. Selections are nested across gamma by construction.

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fpx/latency.hpp"
#include "fpx/model.hpp"
#include "fpx/quant.hpp"

namespace fpx {

struct LayerCalibration {
    LayerId layer;
    double epsilon = 0.0;  // relative output error of the 4-bit kernel
};

struct CalibrationResult {
    std::string model_fingerprint;
    std::vector<LayerCalibration> layers;  // canonical LayerId order
};

// Relative error of replaying recorded layer inputs through the 4-bit
// kernel, concatenated over all recorded calls:
//   eps = sqrt(sum ||A16 - A4||_F^2) / sqrt(sum ||A16||_F^2)
// The recorded B16 outputs are the reference; nothing upstream changes.
inline CalibrationResult calibrate(const ToyTransformer& m, const Corpus& corpus) {
    if (corpus.empty()) {
        throw std::invalid_argument("calibrate: empty corpus");
    }
    const std::vector<LayerId> ids = m.layer_ids();
    std::vector<double> diff_sq(ids.size(), 0.0);
    std::vector<double> ref_sq(ids.size(), 0.0);

    for (const auto& seq : corpus) {
        const ForwardResult res = forward(m, seq, nullptr);
        for (std::size_t li = 0; li < ids.size(); ++li) {
            const LayerRecord& rec = res.trace.at(ids[li]);
            const Matrix replay =
                quant_matmul(rec.input, m.weight_of(ids[li]), BitWidth::B4, BitWidth::B4);
            for (std::size_t i = 0; i < rec.output.size(); ++i) {
                const double r = rec.output.data()[i];
                const double d = static_cast<double>(replay.data()[i]) - r;
                diff_sq[li] += d * d;
                ref_sq[li] += r * r;
            }
        }
    }

    CalibrationResult out;
    out.model_fingerprint = model_fingerprint(m);
    out.layers.reserve(ids.size());
    for (std::size_t li = 0; li < ids.size(); ++li) {
        if (ref_sq[li] == 0.0) {
            throw std::runtime_error("calibrate: layer " + ids[li].str() +
                                     " produced all-zero reference outputs");
        }
        out.layers.push_back(LayerCalibration{ids[li], std::sqrt(diff_sq[li] / ref_sq[li])});
    }
    return out;
}

// Number of layers sent to 4 bits at compression gamma.
inline int round_count(double gamma, int layer_count) {
    if (!(gamma >= 0.0 && gamma <= 1.0)) {
        throw std::invalid_argument("round_count: gamma must lie in [0, 1]");
    }
    if (layer_count < 1) {
        throw std::invalid_argument("round_count: layer count must be positive");
    }
    return static_cast<int>(std::floor(gamma * static_cast<double>(layer_count) + 0.5));
}

struct PrecisionPlan {
    double gamma = 0.0;
    std::string model_fingerprint;
    BitAssignment assignment;                 // every calibrated layer, B4 or B8
    std::vector<LayerCalibration> calibration;  // canonical LayerId order

    int layer_count() const { return static_cast<int>(assignment.size()); }

    int fp4_count() const {
        int n = 0;
        for (const auto& [id, w] : assignment) {
            if (w == BitWidth::B4) ++n;
        }
        return n;
    }

    double fp4_fraction() const {
        if (assignment.empty()) return 0.0;
        return static_cast<double>(fp4_count()) / static_cast<double>(assignment.size());
    }

    // Mean weight width under the 4-or-8 assignment: 8 - 4 * f.
    double bitwidth_avg() const { return 8.0 - 4.0 * fp4_fraction(); }
};

// Sort ascending by (epsilon, LayerId) and take the first
// round_count(gamma, L) layers as the 4-bit set. The LayerId tie-break
// makes the selection unique, and prefixes of one sorted order nest.
inline PrecisionPlan assign(const CalibrationResult& calibration, double gamma) {
    if (calibration.layers.empty()) {
        throw std::invalid_argument("assign: empty calibration");
    }
    const int L = static_cast<int>(calibration.layers.size());
    const int k = round_count(gamma, L);

    std::vector<const LayerCalibration*> order;
    order.reserve(calibration.layers.size());
    for (const auto& lc : calibration.layers) order.push_back(&lc);
    std::sort(order.begin(), order.end(),
              [](const LayerCalibration* a, const LayerCalibration* b) {
                  if (a->epsilon != b->epsilon) return a->epsilon < b->epsilon;
                  return a->layer < b->layer;
              });

    PrecisionPlan plan;
    plan.gamma = gamma;
    plan.model_fingerprint = calibration.model_fingerprint;
    plan.calibration = calibration.layers;
    for (int i = 0; i < L; ++i) {
        plan.assignment[order[static_cast<std::size_t>(i)]->layer] =
            (i < k) ? BitWidth::B4 : BitWidth::B8;
    }
    return plan;
}

inline LatencyEstimate estimate(const CostTable& t, const std::string& size_tag,
                                const PrecisionPlan& plan) {
    return estimate(t, size_tag, plan.fp4_fraction());
}

// ---------------------------------------------------------------------------
// Plan / calibration serialization
// ---------------------------------------------------------------------------

inline nlohmann::json plan_to_json(const PrecisionPlan& plan) {
    nlohmann::json layers = nlohmann::json::array();
    // calibration and assignment hold the same ids; both are ordered by LayerId
    for (const auto& lc : plan.calibration) {
        auto it = plan.assignment.find(lc.layer);
        if (it == plan.assignment.end()) {
            throw std::invalid_argument("plan_to_json: layer " + lc.layer.str() +
                                        " has no width assignment");
        }
        layers.push_back({{"block", lc.layer.block},
                          {"kind", layer_kind_name(lc.layer.kind)},
                          {"bits", bits_of(it->second)},
                          {"epsilon", lc.epsilon}});
    }
    return nlohmann::json{{"gamma", plan.gamma},
                          {"model_fingerprint", plan.model_fingerprint},
                          {"layers", layers}};
}

inline PrecisionPlan plan_from_json(const nlohmann::json& j) {
    PrecisionPlan plan;
    plan.gamma = j.at("gamma").get<double>();
    plan.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    for (const auto& l : j.at("layers")) {
        LayerId id{l.at("block").get<int>(), layer_kind_from_name(l.at("kind").get<std::string>())};
        const int bits = l.at("bits").get<int>();
        BitWidth w;
        if (bits == 4) {
            w = BitWidth::B4;
        } else if (bits == 8) {
            w = BitWidth::B8;
        } else {
            throw std::runtime_error("plan: layer " + id.str() + " has unsupported bits " +
                                     std::to_string(bits));
        }
        if (plan.assignment.count(id)) {
            throw std::runtime_error("plan: duplicate layer " + id.str());
        }
        plan.assignment[id] = w;
        plan.calibration.push_back(LayerCalibration{id, l.at("epsilon").get<double>()});
    }
    if (plan.assignment.empty()) {
        throw std::runtime_error("plan: no layers");
    }
    std::sort(plan.calibration.begin(), plan.calibration.end(),
              [](const LayerCalibration& a, const LayerCalibration& b) { return a.layer < b.layer; });
    return plan;
}

inline void save_plan(const PrecisionPlan& plan, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_plan: cannot open " + path);
    out << plan_to_json(plan).dump(2) << "\n";
}

inline PrecisionPlan load_plan(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_plan: cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw std::runtime_error("load_plan: " + path + ": " + e.what());
    }
    return plan_from_json(j);
}

inline nlohmann::json calibration_to_json(const CalibrationResult& cal) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& lc : cal.layers) {
        layers.push_back({{"block", lc.layer.block},
                          {"kind", layer_kind_name(lc.layer.kind)},
                          {"epsilon", lc.epsilon}});
    }
    return nlohmann::json{{"model_fingerprint", cal.model_fingerprint}, {"layers", layers}};
}

inline CalibrationResult calibration_from_json(const nlohmann::json& j) {
    CalibrationResult cal;
    cal.model_fingerprint = j.at("model_fingerprint").get<std::string>();
    for (const auto& l : j.at("layers")) {
        cal.layers.push_back(LayerCalibration{
            LayerId{l.at("block").get<int>(), layer_kind_from_name(l.at("kind").get<std::string>())},
            l.at("epsilon").get<double>()});
    }
    if (cal.layers.empty()) throw std::runtime_error("calibration: no layers");
    std::sort(cal.layers.begin(), cal.layers.end(),
              [](const LayerCalibration& a, const LayerCalibration& b) { return a.layer < b.layer; });
    return cal;
}

// ---------------------------------------------------------------------------
// Sweep and Pareto grid
// ---------------------------------------------------------------------------

struct SweepRow {
    double gamma = 0.0;
    PrecisionPlan plan;
    double quality_proxy = 0.0;
    double latency_ms = 0.0;  // for the sweep's own size tag
};

// One calibration pass, then a plan + quality measurement per gamma.
inline std::vector<SweepRow> sweep(const ToyTransformer& m, const Corpus& corpus,
                                   const std::vector<double>& gammas, const CostTable& table,
                                   const std::string& size_tag) {
    if (gammas.empty()) {
        throw std::invalid_argument("sweep: no gamma values");
    }
    const CalibrationResult cal = calibrate(m, corpus);
    std::vector<SweepRow> rows;
    rows.reserve(gammas.size());
    for (double g : gammas) {
        SweepRow row;
        row.gamma = g;
        row.plan = assign(cal, g);
        row.quality_proxy = quality_proxy(m, corpus, &row.plan.assignment);
        row.latency_ms = estimate(table, size_tag, row.plan).total_ms;
        rows.push_back(std::move(row));
    }
    return rows;
}

struct ParetoPoint {
    std::string size_tag;
    double gamma = 0.0;
    double latency_ms = 0.0;
    double quality_proxy = 0.0;
    bool dominated = false;
};

// Full (size tag x gamma) grid with each point's latency recomputed for
// its size. A point is dominated when some other grid point is at least
// as good on both axes and strictly better on one (lower is better for
// both latency and the quality proxy).
inline std::vector<ParetoPoint> pareto_points(const CostTable& table,
                                              const std::vector<std::string>& size_tags,
                                              const std::vector<SweepRow>& rows) {
    if (size_tags.empty()) {
        throw std::invalid_argument("pareto_points: no size tags");
    }
    std::vector<ParetoPoint> grid;
    grid.reserve(size_tags.size() * rows.size());
    for (const auto& tag : size_tags) {
        for (const auto& row : rows) {
            ParetoPoint p;
            p.size_tag = tag;
            p.gamma = row.gamma;
            p.latency_ms = estimate(table, tag, row.plan).total_ms;
            p.quality_proxy = row.quality_proxy;
            grid.push_back(std::move(p));
        }
    }
    for (auto& p : grid) {
        for (const auto& q : grid) {
            const bool no_worse = q.latency_ms <= p.latency_ms && q.quality_proxy <= p.quality_proxy;
            const bool better = q.latency_ms < p.latency_ms || q.quality_proxy < p.quality_proxy;
            if (no_worse && better) {
                p.dominated = true;
                break;
            }
        }
    }
    return grid;
}

}  // namespace fpx
