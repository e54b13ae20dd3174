#pragma once

// Optional adapter that lets a live chat-completion endpoint play as an
// agent. Strictly opt-in: construction fails unless the config enables
// it, and every transport or parsing failure degrades to a no-op action
// with an error counter bump — a flaky endpoint can never crash or stall
// a simulation. Wall-clock time of the HTTP round trip becomes the
// action's latency, so real endpoints exhibit their real delay.

#include <cctype>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <stdexcept>
#include <string>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "fpx/agents.hpp"

namespace fpx {

struct EndpointConfig {
    bool enabled = false;
    std::string base_url;  // e.g. "http://127.0.0.1:8080"
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    int timeout_ms = 2000;
    int max_tokens = 32;
    std::string api_key_env = "FPX_API_KEY";
};

// Response-text grammar, one line anywhere in the reply:
//   ACTION: BUY 0.5     -> {verb "buy", fraction 0.5}
//   ACTION: SELL 0.25   -> {verb "sell", fraction 0.25}
//   ACTION: HOLD        -> {verb "hold"}
//   ACTION: STRIKE      -> {verb "strike"}
//   ACTION: WHIFF       -> {verb "whiff"}
//   ACTION: NOOP        -> {verb "noop"}
// Verbs are case-insensitive; a missing fraction on BUY/SELL means 1.0.
// Anything else is unparseable.
inline std::optional<ActionPayload> parse_action_text(const std::string& text) {
    const std::string tag = "ACTION:";
    const std::size_t at = text.find(tag);
    if (at == std::string::npos) return std::nullopt;

    std::size_t i = at + tag.size();
    auto skip_ws = [&] {
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t')) ++i;
    };
    skip_ws();
    std::string verb;
    while (i < text.size() && std::isalpha(static_cast<unsigned char>(text[i]))) {
        verb += static_cast<char>(std::tolower(static_cast<unsigned char>(text[i])));
        ++i;
    }
    if (verb != "buy" && verb != "sell" && verb != "hold" && verb != "strike" &&
        verb != "whiff" && verb != "noop") {
        return std::nullopt;
    }

    ActionPayload out;
    out.verb = verb;
    if (verb == "buy" || verb == "sell") {
        skip_ws();
        std::size_t j = i;
        while (j < text.size() &&
               (std::isdigit(static_cast<unsigned char>(text[j])) || text[j] == '.')) {
            ++j;
        }
        if (j > i) {
            try {
                out.fraction = std::stod(text.substr(i, j - i));
            } catch (const std::exception&) {
                return std::nullopt;
            }
            if (!(out.fraction >= 0.0 && out.fraction <= 1.0)) return std::nullopt;
        } else {
            out.fraction = 1.0;
        }
    }
    return out;
}

class LlmAdapter {
  public:
    explicit LlmAdapter(EndpointConfig cfg) : cfg_(std::move(cfg)) {
        if (!cfg_.enabled) {
            throw std::runtime_error(
                "llm adapter: endpoint integration is disabled; enable it explicitly in the "
                "endpoint config to use a live model");
        }
        if (cfg_.base_url.empty()) {
            throw std::runtime_error("llm adapter: base_url is required");
        }
    }

    const EndpointConfig& config() const { return cfg_; }
    int error_count() const { return errors_; }

    // One blocking chat round trip. The returned action's issued_at is
    // the observation timestamp plus the measured wall-clock milliseconds
    // of the HTTP call; failures of any kind yield a no-op action.
    Action decide(const Observation& obs, const std::string& prompt) {
        const auto t0 = std::chrono::steady_clock::now();
        ActionPayload payload;  // noop unless everything succeeds
        try {
            httplib::Client client(cfg_.base_url);
            client.set_connection_timeout(0, cfg_.timeout_ms * 1000);
            client.set_read_timeout(0, cfg_.timeout_ms * 1000);

            httplib::Headers headers;
            if (const char* key = std::getenv(cfg_.api_key_env.c_str())) {
                headers.emplace("Authorization", std::string("Bearer ") + key);
            }

            nlohmann::json body = {
                {"model", cfg_.model},
                {"messages", nlohmann::json::array({nlohmann::json{
                                 {"role", "user"}, {"content", prompt}}})},
                {"max_tokens", cfg_.max_tokens},
            };
            auto res = client.Post(cfg_.path, headers, body.dump(), "application/json");
            if (!res || res->status != 200) {
                ++errors_;
            } else {
                nlohmann::json reply = nlohmann::json::parse(res->body);
                const std::string text =
                    reply.at("choices").at(0).at("message").at("content").get<std::string>();
                if (auto parsed = parse_action_text(text)) {
                    payload = *parsed;
                } else {
                    ++errors_;
                }
            }
        } catch (const std::exception&) {
            ++errors_;
        }
        const double elapsed_ms =
            std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                .count();
        return Action{std::move(payload), obs.timestamp_ms + elapsed_ms};
    }

  private:
    EndpointConfig cfg_;
    int errors_ = 0;
};

}  // namespace fpx
