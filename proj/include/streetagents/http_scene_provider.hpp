#pragma once

#include <chrono>
#include <map>
#include <mutex>
#include <set>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "streetagents/errors.hpp"
#include "streetagents/vision.hpp"

namespace streetagents {

// Fetches SceneFeatures JSON over HTTP: GET {base}{path_prefix}{scene ref}.
// Responses are cached per ref, so repeated lookups of the same scene hit the
// network once even across threads.
class RemoteSceneProvider : public SceneProvider {
  public:
    RemoteSceneProvider(std::string base_url, std::string path_prefix = "/scenes/",
                        int max_retries = 3, double backoff_seconds = 0.5,
                        int timeout_seconds = 60)
        : base_(std::move(base_url)), prefix_(std::move(path_prefix)),
          max_retries_(max_retries), backoff_seconds_(backoff_seconds),
          timeout_seconds_(timeout_seconds) {
        if (base_.empty()) throw ValidationError("scene provider requires an endpoint URL");
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
        if (base_.rfind("https://", 0) == 0) {
            throw ValidationError(
                "https endpoint requested but TLS support is not compiled in");
        }
#endif
    }

    bool has(const std::string& ref) const override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (cache_.count(ref)) return true;
            if (missing_.count(ref)) return false;
        }
        try {
            fetch(ref);
            return true;
        } catch (const ProviderError&) {
            return false;
        }
    }

    SceneFeatures fetch(const std::string& ref) const override {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            if (auto it = cache_.find(ref); it != cache_.end()) return it->second;
            if (missing_.count(ref)) {
                throw ProviderError("scene '" + ref + "' not available from " + base_);
            }
        }
        std::string last_error;
        for (int attempt = 0; attempt <= max_retries_; ++attempt) {
            if (attempt > 0) {
                const double delay =
                    backoff_seconds_ * static_cast<double>(1 << (attempt - 1));
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            httplib::Client client(base_);
            client.set_connection_timeout(timeout_seconds_);
            client.set_read_timeout(timeout_seconds_);
            auto res = client.Get(prefix_ + ref);
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status == 404) {
                std::lock_guard<std::mutex> lock(mutex_);
                missing_.insert(ref);
                throw ProviderError("scene '" + ref + "' not available from " + base_);
            }
            if (res->status == 429 || res->status >= 500) {
                last_error = "HTTP " + std::to_string(res->status);
                continue;
            }
            if (res->status >= 400) {
                throw ProviderError("scene request for '" + ref + "' rejected: HTTP " +
                                    std::to_string(res->status));
            }
            SceneFeatures features;
            try {
                features = scene_features_from_json(nlohmann::json::parse(res->body));
                features.validate();
            } catch (const std::exception& e) {
                throw ProviderError("scene '" + ref + "' payload invalid: " + e.what());
            }
            std::lock_guard<std::mutex> lock(mutex_);
            return cache_.emplace(ref, std::move(features)).first->second;
        }
        throw ProviderError("scene fetch for '" + ref + "' failed after " +
                            std::to_string(max_retries_ + 1) + " attempts (" + last_error +
                            ")");
    }

  private:
    std::string base_;
    std::string prefix_;
    int max_retries_;
    double backoff_seconds_;
    int timeout_seconds_;
    mutable std::mutex mutex_;
    mutable std::map<std::string, SceneFeatures> cache_;
    mutable std::set<std::string> missing_;
};

} // namespace streetagents
