// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#include <catch_amalgamated.hpp>

#include <deque>
#include <functional>

#include "deepbrowse/live_backends.hpp"

using namespace deepbrowse;
using namespace deepbrowse::live;

namespace {

const PromptLibrary& prompts() {
  static const PromptLibrary lib = PromptLibrary::load();
  return lib;
}

/// Serves canned responses and records every request.
class FakeHttp final : public HttpClient {
 public:
  std::function<HttpResponse(const HttpRequest&)> handler;
  std::vector<HttpRequest> seen;

  HttpResponse send(const HttpRequest& r) override {
    seen.push_back(r);
    return handler(r);
  }
};

class FieldEcho final : public LlmBackend {
 public:
  std::string complete(const LlmRequest& req) override {
    last = req;
    return "summary of goal " + req.fields.at("USER GOAL");
  }
  std::string identifier() const override { return "echo"; }
  LlmRequest last;
};

HttpResponse ok(const Json& body) { return {200, body.dump()}; }

const RetryPolicy kFast{3, std::chrono::milliseconds(0)};

}  // namespace

TEST_CASE("url_encode escapes reserved bytes", "[live]") {
  CHECK(url_encode("a b&c=d/é") == "a%20b%26c%3Dd%2F%C3%A9");
  CHECK(url_encode("Az09-_.~") == "Az09-_.~");
}

TEST_CASE("chat model sends OpenAI-style bodies and reads the first choice", "[live]") {
  auto http = std::make_shared<FakeHttp>();
  http->handler = [](const HttpRequest&) {
    return ok(Json{{"choices", Json::array({Json{{"message", Json{{"content", "hello"}}}}})}});
  };
  ChatModel model(http, {"https://llm.example/v1", "m1", "sk-1"}, kFast);
  PolicyRequest req;
  req.messages = {{"system", "sys", std::nullopt},
                  {"user", "question", std::string("https://img/x.jpg")},
                  {"assistant", "<think>t</think>", std::nullopt},
                  {"tool", "<tool_response>r</tool_response>", std::nullopt}};
  req.sampling.presence_penalty = 1.1;
  CHECK(model.respond(req) == "hello");
  REQUIRE(http->seen.size() == 1);
  const auto& r = http->seen[0];
  CHECK(r.method == "POST");
  CHECK(r.url == "https://llm.example/v1/chat/completions");
  CHECK(r.headers.at("Authorization") == "Bearer sk-1");
  const Json body = Json::parse(r.body);
  CHECK(body["model"] == "m1");
  CHECK(body["presence_penalty"] == 1.1);
  CHECK(body["messages"][1]["content"][1]["image_url"]["url"] == "https://img/x.jpg");
  CHECK(body["messages"][3]["role"] == "user");
}

TEST_CASE("chat model retries server errors and fails on client errors", "[live]") {
  auto http = std::make_shared<FakeHttp>();
  std::deque<int> statuses = {503, 429, 200};
  http->handler = [&](const HttpRequest&) {
    const int s = statuses.front();
    statuses.pop_front();
    if (s != 200) return HttpResponse{s, "busy"};
    return ok(Json{{"choices", Json::array({Json{{"message", Json{{"content", "fine"}}}}})}});
  };
  ChatModel model(http, {"https://llm.example/v1", "m1", ""}, kFast);
  CHECK(model.complete(LlmRequest{}) == "fine");
  CHECK(http->seen.size() == 3);
  CHECK_FALSE(http->seen[0].headers.contains("Authorization"));

  http->handler = [](const HttpRequest&) { return HttpResponse{400, "bad request"}; };
  try {
    model.complete(LlmRequest{});
    FAIL("expected BackendFailure");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::backend_failure);
  }
  http->handler = [](const HttpRequest&) { return ok(Json{{"id", "x"}}); };
  CHECK_THROWS_AS(model.complete(LlmRequest{}), Error);
}

TEST_CASE("web search rotates keys past exhausted ones", "[live]") {
  auto http = std::make_shared<FakeHttp>();
  http->handler = [](const HttpRequest& r) {
    if (r.url.find("key=k1") != std::string::npos) return HttpResponse{429, "quota"};
    Json items = Json::array();
    for (int i = 0; i < 7; ++i) {
      items.push_back(Json{{"link", "https://site/" + std::to_string(i)}, {"title", "T"}, {"snippet", "S"}});
    }
    return ok(Json{{"items", items}});
  };
  auto keys = std::make_shared<KeyPool>(std::vector<std::string>{"k1", "k2"}, 100);
  auto vision = std::make_shared<KeyPool>(std::vector<std::string>{"v"}, 100);
  WebToolsConfig cfg;
  cfg.search_engine_id = "cx1";
  WebToolBackend backend(http, cfg, keys, vision, std::make_shared<FieldEcho>(), prompts(), kFast);
  const auto results = backend.text_search("red bridge");
  CHECK(results.size() == 7);
  REQUIRE(http->seen.size() == 2);
  CHECK(http->seen[1].url.find("q=red%20bridge") != std::string::npos);
  CHECK(http->seen[1].url.find("cx=cx1") != std::string::npos);
  CHECK(keys->used(0) == 100);

  // The gateway trims to five results.
  ToolGateway gateway(std::make_shared<WebToolBackend>(http, cfg, keys, vision, std::make_shared<FieldEcho>(),
                                                       prompts(), kFast));
  CHECK(gateway.text_search("red bridge").items.size() == kMaxToolResults);

  http->handler = [](const HttpRequest&) { return HttpResponse{429, "quota"}; };
  try {
    backend.text_search("x");
    FAIL("expected RateLimited");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::rate_limited);
  }
}

TEST_CASE("reverse image search reads web detection pages", "[live]") {
  auto http = std::make_shared<FakeHttp>();
  http->handler = [](const HttpRequest& r) {
    const Json body = Json::parse(r.body);
    CHECK(body["requests"][0]["image"]["source"]["imageUri"] == "https://img/q.jpg");
    Json pages = Json::array({Json{{"url", "https://a/page"},
                                   {"pageTitle", "Page A"},
                                   {"fullMatchingImages", Json::array({Json{{"url", "https://a/img.jpg"}}})}},
                              Json{{"url", "https://b/page"}, {"pageTitle", "Page B"}}});
    return ok(Json{{"responses", Json::array({Json{{"webDetection", Json{{"pagesWithMatchingImages", pages}}}}})}});
  };
  WebToolBackend backend(http, {}, std::make_shared<KeyPool>(std::vector<std::string>{"s"}, 10),
                         std::make_shared<KeyPool>(std::vector<std::string>{"v"}, 10), std::make_shared<FieldEcho>(),
                         prompts(), kFast);
  const auto results = backend.image_search("https://img/q.jpg");
  REQUIRE(results.size() == 2);
  CHECK(results[0].image_url == "https://a/img.jpg");
  CHECK(results[0].page_link == "https://a/page");
  CHECK(results[0].page_title == "Page A");
  CHECK(results[1].image_url == "https://img/q.jpg");
}

TEST_CASE("visit reads the page and summarizes it for the goal", "[live]") {
  auto http = std::make_shared<FakeHttp>();
  http->handler = [](const HttpRequest& r) {
    if (r.url == "https://reader/https://ok.example/p") return HttpResponse{200, "Page body text."};
    return HttpResponse{404, "missing"};
  };
  auto echo = std::make_shared<FieldEcho>();
  WebToolsConfig cfg;
  cfg.reader_url = "https://reader/";
  auto backend = std::make_shared<WebToolBackend>(http, cfg, std::make_shared<KeyPool>(std::vector<std::string>{"s"}, 10),
                                                  std::make_shared<KeyPool>(std::vector<std::string>{"v"}, 10), echo,
                                                  prompts(), kFast);
  const auto v = backend->visit("https://ok.example/p", "find the year");
  CHECK(v.summary == "summary of goal find the year");
  CHECK(echo->last.kind == PromptKind::visit_summary);
  CHECK(echo->last.fields.at("WEB PAGE CONTENT") == "Page body text.");
  CHECK(echo->last.prompt.find("Page body text.") != std::string::npos);
  CHECK(echo->last.prompt.find("[USER GOAL]") == std::string::npos);

  try {
    backend->visit("https://gone.example/p", "goal");
    FAIL("expected FetchFailed");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::fetch_failed);
  }
  ToolGateway gateway(backend);
  const auto marked = gateway.visit("https://gone.example/p", "goal");
  CHECK(marked.failed);
}
