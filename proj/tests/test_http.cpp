#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <cstdlib>
#include <string>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "streetagents/http_backend.hpp"
#include "streetagents/http_scene_provider.hpp"

using namespace streetagents;

namespace {

// In-process HTTP server bound to an ephemeral localhost port.
struct TestServer {
    httplib::Server server;
    int port = 0;
    std::thread thread;

    void start() {
        port = server.bind_to_any_port("127.0.0.1");
        thread = std::thread([this] { server.listen_after_bind(); });
        server.wait_until_ready();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port); }
    ~TestServer() {
        server.stop();
        if (thread.joinable()) thread.join();
    }
};

std::string completion_body(const std::string& content) {
    nlohmann::json message{{"role", "assistant"}, {"content", content}};
    nlohmann::json j;
    j["choices"] = nlohmann::json::array({nlohmann::json{{"message", message}}});
    return j.dump();
}

ChatExchange probe_exchange() {
    ChatExchange ex;
    ex.system = "You are a test subject.";
    ex.messages.push_back({"user", "hello"});
    ex.temperature = 0.5;
    ex.max_reply_tokens = 64;
    return ex;
}

const std::string kSceneBody = R"({
  "segmentation": {"building": 0.5, "road": 0.3, "vegetation": 0.1, "sky": 0.1,
                   "person": 0.0, "vehicle": 0.0, "pole": 0.0, "fence": 0.0, "wall": 0.0},
  "categories": [{"label": "street", "confidence": 0.4}],
  "attributes": ["sunny"],
  "objects": {"person": 3}
})";

RemoteBackendConfig fast_config(const std::string& base) {
    RemoteBackendConfig config;
    config.base_url = base;
    config.max_retries = 2;
    config.backoff_seconds = 0.01;
    return config;
}

} // namespace

TEST_CASE("remote backend posts an OpenAI-shaped request", "[http]") {
    TestServer ts;
    std::string seen_body;
    std::string seen_auth = "(unset)";
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request& req, httplib::Response& res) {
                       seen_body = req.body;
                       seen_auth = req.get_header_value("Authorization");
                       res.set_content(completion_body("hi there"), "application/json");
                   });
    ts.start();

    auto config = fast_config(ts.base_url());
    config.api_key = "secret-key";
    RemoteBackend backend(config);
    CHECK(backend.complete(probe_exchange()) == "hi there");
    CHECK(seen_auth == "Bearer secret-key");
    CHECK(backend.describe() == "remote(gpt-3.5-turbo @ " + ts.base_url() + ")");

    const auto j = nlohmann::json::parse(seen_body);
    CHECK(j.at("model") == "gpt-3.5-turbo");
    REQUIRE(j.at("messages").size() == 2);
    CHECK(j["messages"][0].at("role") == "system");
    CHECK(j["messages"][0].at("content") == "You are a test subject.");
    CHECK(j["messages"][1].at("role") == "user");
    CHECK(j["messages"][1].at("content") == "hello");
    CHECK(j.at("temperature").get<double>() == 0.5);
    CHECK(j.at("max_tokens").get<int>() == 64);

    SECTION("no Authorization header without a key") {
        RemoteBackend anon(fast_config(ts.base_url()));
        CHECK(anon.complete(probe_exchange()) == "hi there");
        CHECK(seen_auth.empty());
    }
}

TEST_CASE("remote backend retries transient failures", "[http]") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       const int n = ++calls;
                       if (n == 1) {
                           res.status = 500;
                       } else if (n == 2) {
                           res.status = 429;
                       } else {
                           res.set_content(completion_body("recovered"),
                                           "application/json");
                       }
                   });
    ts.start();

    RemoteBackend backend(fast_config(ts.base_url()));
    CHECK(backend.complete(probe_exchange()) == "recovered");
    CHECK(calls == 3);
}

TEST_CASE("remote backend exhausts its retry budget", "[http]") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       ++calls;
                       res.status = 503;
                   });
    ts.start();

    RemoteBackend backend(fast_config(ts.base_url()));
    CHECK_THROWS_WITH(backend.complete(probe_exchange()),
                      Catch::Matchers::ContainsSubstring("failed after 3 attempts") &&
                          Catch::Matchers::ContainsSubstring("HTTP 503"));
    CHECK(calls == 3);
}

TEST_CASE("remote backend fails fast on client errors", "[http]") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       ++calls;
                       res.status = 400;
                       res.set_content("bad request", "text/plain");
                   });
    ts.start();

    RemoteBackend backend(fast_config(ts.base_url()));
    CHECK_THROWS_WITH(backend.complete(probe_exchange()),
                      Catch::Matchers::ContainsSubstring("rejected request: HTTP 400"));
    CHECK(calls == 1);
}

TEST_CASE("remote backend rejects malformed completions", "[http]") {
    TestServer ts;
    std::string payload;
    ts.server.Post("/v1/chat/completions",
                   [&](const httplib::Request&, httplib::Response& res) {
                       res.set_content(payload, "application/json");
                   });
    ts.start();
    RemoteBackend backend(fast_config(ts.base_url()));

    payload = "this is not json";
    CHECK_THROWS_WITH(backend.complete(probe_exchange()),
                      Catch::Matchers::ContainsSubstring("malformed completion response"));

    payload = R"({"choices": []})";
    CHECK_THROWS_WITH(
        backend.complete(probe_exchange()),
        Catch::Matchers::ContainsSubstring("lacks choices[0].message.content"));
}

TEST_CASE("remote backend construction is validated", "[http]") {
    CHECK_THROWS_AS(RemoteBackend(RemoteBackendConfig{}), ValidationError);
    RemoteBackendConfig tls;
    tls.base_url = "https://example.test";
    CHECK_THROWS_AS(RemoteBackend(tls), ValidationError); // built without TLS support
}

TEST_CASE("api keys come from the environment", "[http]") {
    ::setenv("STREETAGENTS_TEST_KEY", "from-env", 1);
    CHECK(api_key_from_env("STREETAGENTS_TEST_KEY") == "from-env");
    ::unsetenv("STREETAGENTS_TEST_KEY");
    CHECK(api_key_from_env("STREETAGENTS_TEST_KEY").empty());
}

TEST_CASE("remote scenes are fetched once and cached", "[http]") {
    TestServer ts;
    std::atomic<int> calls{0};
    ts.server.Get(R"(/scenes/(.+))",
                  [&](const httplib::Request& req, httplib::Response& res) {
                      ++calls;
                      if (req.matches[1].str() == "B/front") {
                          res.set_content(kSceneBody, "application/json");
                      } else {
                          res.status = 404;
                      }
                  });
    ts.start();

    RemoteSceneProvider provider(ts.base_url(), "/scenes/", 2, 0.01, 5);
    const auto first = provider.fetch("B/front");
    CHECK(first.object_counts.at("person") == 3);
    const auto second = provider.fetch("B/front");
    CHECK(second.categories.size() == 1);
    CHECK(calls == 1); // served from cache

    CHECK(provider.has("B/front"));
    CHECK(calls == 1);

    CHECK_FALSE(provider.has("Z/front"));
    const int after_miss = calls;
    CHECK_THROWS_WITH(provider.fetch("Z/front"),
                      Catch::Matchers::ContainsSubstring("not available"));
    CHECK(calls == after_miss); // negative result cached too
}

TEST_CASE("remote scene provider surfaces failures", "[http]") {
    TestServer ts;
    std::atomic<int> calls{0};
    std::atomic<int> status{500};
    std::string body;
    ts.server.Get(R"(/scenes/(.+))",
                  [&](const httplib::Request&, httplib::Response& res) {
                      ++calls;
                      res.status = status;
                      if (status == 200) res.set_content(body, "application/json");
                  });
    ts.start();

    SECTION("persistent 500s exhaust the retries") {
        RemoteSceneProvider provider(ts.base_url(), "/scenes/", 1, 0.01, 5);
        CHECK_THROWS_WITH(provider.fetch("B/front"),
                          Catch::Matchers::ContainsSubstring("failed after 2 attempts"));
        CHECK(calls == 2);
    }
    SECTION("other client errors fail fast") {
        status = 403;
        RemoteSceneProvider provider(ts.base_url(), "/scenes/", 2, 0.01, 5);
        CHECK_THROWS_WITH(provider.fetch("B/front"),
                          Catch::Matchers::ContainsSubstring("rejected: HTTP 403"));
        CHECK(calls == 1);
    }
    SECTION("invalid payloads are rejected") {
        status = 200;
        body = R"({"segmentation": {"building": 2.5}, "categories": [],
                   "attributes": [], "objects": {}})";
        RemoteSceneProvider provider(ts.base_url(), "/scenes/", 2, 0.01, 5);
        CHECK_THROWS_WITH(provider.fetch("B/front"),
                          Catch::Matchers::ContainsSubstring("payload invalid"));
    }
    SECTION("construction is validated") {
        CHECK_THROWS_AS(RemoteSceneProvider(""), ValidationError);
        CHECK_THROWS_AS(RemoteSceneProvider("https://example.test"), ValidationError);
    }
}
