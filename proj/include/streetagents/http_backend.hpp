#pragma once

#include <chrono>
#include <cstdlib>
#include <deque>
#include <memory>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "streetagents/errors.hpp"
#include "streetagents/llm.hpp"

namespace streetagents {

struct RemoteBackendConfig {
    std::string base_url;                      // scheme://host[:port]
    std::string path = "/v1/chat/completions"; // chat-completion endpoint
    std::string model = "gpt-3.5-turbo";
    std::string api_key;       // read from an environment variable, never a flag
    int max_in_flight = 4;     // concurrent requests allowed
    int requests_per_minute = 60;
    int max_retries = 3;       // retries after the first attempt
    double backoff_seconds = 0.5; // doubled per retry
    int timeout_seconds = 120;
};

inline std::string api_key_from_env(const char* var = "STREETAGENTS_API_KEY") {
    const char* value = std::getenv(var);
    return value ? std::string(value) : std::string();
}

// Chat-completion client: POSTs {model, messages, temperature, max_tokens} and
// returns the first choice's message content. Transient failures (connect
// errors, 429, 5xx) are retried with exponential backoff; other 4xx fail
// immediately. A semaphore bounds in-flight requests and a sliding window
// enforces the per-minute cap, so one instance shared across a batch shares
// its rate budget.
class RemoteBackend : public Backend {
  public:
    explicit RemoteBackend(RemoteBackendConfig config)
        : config_(std::move(config)),
          in_flight_(std::max(1, config_.max_in_flight)) {
        if (config_.base_url.empty()) {
            throw ValidationError("remote backend requires an endpoint URL");
        }
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (config_.base_url.rfind("https://", 0) == 0) {
            throw ValidationError(
                "https endpoint requested but TLS support is not compiled in");
        }
#endif
    }

    std::string complete(const ChatExchange& exchange) override {
        exchange.validate();
        reserve_rate_slot();
        in_flight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{in_flight_};

        const std::string body = request_body(exchange);
        std::string last_error;
        for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
            if (attempt > 0) {
                const double delay =
                    config_.backoff_seconds * static_cast<double>(1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            httplib::Client client(config_.base_url);
            client.set_connection_timeout(config_.timeout_seconds);
            client.set_read_timeout(config_.timeout_seconds);
            httplib::Headers headers;
            if (!config_.api_key.empty()) {
                headers.emplace("Authorization", "Bearer " + config_.api_key);
            }
            auto res = client.Post(config_.path, headers, body, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status >= 400) {
                throw BackendError("remote backend rejected request: HTTP " +
                                   std::to_string(res->status) + " " + res->body);
            }
            return extract_content(res->body);
        }
        throw BackendError("remote backend failed after " +
                           std::to_string(config_.max_retries + 1) + " attempts (" +
                           last_error + ")");
    }

    std::string describe() const override {
        return "remote(" + config_.model + " @ " + config_.base_url + ")";
    }

  private:
    std::string request_body(const ChatExchange& exchange) const {
        nlohmann::ordered_json j;
        j["model"] = config_.model;
        j["messages"] = nlohmann::ordered_json::array();
        j["messages"].push_back({{"role", "system"}, {"content", exchange.system}});
        for (const auto& m : exchange.messages) {
            j["messages"].push_back({{"role", m.role}, {"content", m.text}});
        }
        j["temperature"] = exchange.temperature;
        j["max_tokens"] = exchange.max_reply_tokens;
        return j.dump();
    }

    static std::string extract_content(const std::string& body) {
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(body);
        } catch (const nlohmann::json::exception& e) {
            throw BackendError(std::string("malformed completion response: ") + e.what());
        }
        if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty() ||
            !j["choices"][0].contains("message") ||
            !j["choices"][0]["message"].contains("content") ||
            !j["choices"][0]["message"]["content"].is_string()) {
            throw BackendError("completion response lacks choices[0].message.content");
        }
        return j["choices"][0]["message"]["content"].get<std::string>();
    }

    void reserve_rate_slot() {
        using clock = std::chrono::steady_clock;
        if (config_.requests_per_minute <= 0) return;
        while (true) {
            clock::time_point wait_until;
            {
                std::lock_guard<std::mutex> lock(rate_mutex_);
                const auto now = clock::now();
                while (!request_times_.empty() &&
                       now - request_times_.front() >= std::chrono::minutes(1)) {
                    request_times_.pop_front();
                }
                if (static_cast<int>(request_times_.size()) <
                    config_.requests_per_minute) {
                    request_times_.push_back(now);
                    return;
                }
                wait_until = request_times_.front() + std::chrono::minutes(1);
            }
            std::this_thread::sleep_until(wait_until);
        }
    }

    RemoteBackendConfig config_;
    std::counting_semaphore<> in_flight_;
    std::mutex rate_mutex_;
    std::deque<std::chrono::steady_clock::time_point> request_times_;
};

} // namespace streetagents
