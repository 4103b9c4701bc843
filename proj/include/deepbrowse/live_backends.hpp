// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Network backends: web search, reverse image search, page reading with
// goal-directed summaries, and OpenAI-compatible chat models. All traffic goes
// through HttpClient so tests can substitute a fake transport.

#include <chrono>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/llm.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/tools.hpp"

namespace deepbrowse::live {

struct HttpRequest {
  std::string method = "GET";
  std::string url;
  std::map<std::string, std::string> headers;
  std::string body;
};

struct HttpResponse {
  int status = 0;
  std::string body;
};

class HttpClient {
 public:
  virtual ~HttpClient() = default;
  /// Throws Error(provider_error) when no response arrives at all.
  virtual HttpResponse send(const HttpRequest& request) = 0;
};

inline std::string url_encode(std::string_view s) {
  static constexpr char kHex[] = "0123456789ABCDEF";
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      out.push_back('%');
      out.push_back(kHex[c >> 4]);
      out.push_back(kHex[c & 15]);
    }
  }
  return out;
}

struct RetryPolicy {
  std::size_t attempts = 3;
  std::chrono::milliseconds backoff{500};
};

namespace detail {

inline Json parse_body(const HttpResponse& r, const std::string& what) {
  Json j = Json::parse(r.body, nullptr, false);
  if (j.is_discarded()) throw Error(Errc::provider_error, what + " returned non-JSON body");
  return j;
}

/// Sends with a pooled key. 429/403 exhaust the key and move to the next
/// one; 5xx and transport errors back off and retry.
template <typename Build>
HttpResponse send_keyed(HttpClient& http, KeyPool& keys, const RetryPolicy& retry, const std::string& what,
                        Build&& build) {
  std::string last;
  for (std::size_t attempt = 0; attempt < retry.attempts; ++attempt) {
    const std::string key = keys.acquire();
    HttpResponse r;
    try {
      r = http.send(build(key));
    } catch (const Error& e) {
      last = e.what();
      std::this_thread::sleep_for(retry.backoff * (1 << attempt));
      continue;
    }
    if (r.status == 429 || r.status == 403) {
      keys.mark_exhausted(key);
      last = what + " key rejected with HTTP " + std::to_string(r.status);
      --attempt;  // a rejected key does not consume a retry; the pool bounds the loop
      continue;
    }
    if (r.status >= 500) {
      last = what + " HTTP " + std::to_string(r.status);
      std::this_thread::sleep_for(retry.backoff * (1 << attempt));
      continue;
    }
    if (r.status != 200) throw Error(Errc::provider_error, what + " HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
    return r;
  }
  throw Error(Errc::provider_error, what + " failed after retries: " + last);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Chat models

struct ChatEndpoint {
  std::string base_url;  // e.g. https://api.openai.com/v1
  std::string model;
  std::string api_key;
  std::chrono::milliseconds timeout{600000};
};

/// OpenAI-compatible /chat/completions client. Serves as both a single-turn
/// LlmBackend and the rollout PolicyBackend.
class ChatModel final : public LlmBackend, public PolicyBackend {
 public:
  ChatModel(std::shared_ptr<HttpClient> http, ChatEndpoint endpoint, RetryPolicy retry = {})
      : http_(std::move(http)), ep_(std::move(endpoint)), retry_(retry) {}

  std::string complete(const LlmRequest& req) override {
    return chat({{"user", req.prompt, req.image_ref}}, req.sampling);
  }

  std::string respond(const PolicyRequest& req) override { return chat(req.messages, req.sampling); }

  std::string identifier() const override { return "chat:" + ep_.model; }

  Json build_body(const std::vector<ChatMessage>& messages, const SamplingParams& s) const {
    Json body = Json::object();
    body["model"] = ep_.model;
    Json msgs = Json::array();
    for (const auto& m : messages) {
      Json jm = Json::object();
      // Observations go back as user turns; the tags already mark them.
      jm["role"] = m.role == "tool" ? "user" : m.role;
      if (m.image_ref) {
        jm["content"] = Json::array({Json{{"type", "text"}, {"text", m.content}},
                                     Json{{"type", "image_url"}, {"image_url", Json{{"url", *m.image_ref}}}}});
      } else {
        jm["content"] = m.content;
      }
      msgs.push_back(std::move(jm));
    }
    body["messages"] = std::move(msgs);
    body["temperature"] = s.temperature;
    body["top_p"] = s.top_p;
    if (s.presence_penalty) body["presence_penalty"] = *s.presence_penalty;
    if (s.max_tokens) body["max_tokens"] = *s.max_tokens;
    return body;
  }

 private:
  std::string chat(const std::vector<ChatMessage>& messages, const SamplingParams& s) {
    HttpRequest req;
    req.method = "POST";
    req.url = ep_.base_url + "/chat/completions";
    req.headers["Content-Type"] = "application/json";
    if (!ep_.api_key.empty()) req.headers["Authorization"] = "Bearer " + ep_.api_key;
    req.body = build_body(messages, s).dump();
    std::string last;
    for (std::size_t attempt = 0; attempt < retry_.attempts; ++attempt) {
      HttpResponse r;
      try {
        r = http_->send(req);
      } catch (const Error& e) {
        last = e.what();
        std::this_thread::sleep_for(retry_.backoff * (1 << attempt));
        continue;
      }
      if (r.status == 429 || r.status >= 500) {
        last = "HTTP " + std::to_string(r.status);
        std::this_thread::sleep_for(retry_.backoff * (1 << attempt));
        continue;
      }
      if (r.status != 200) {
        throw Error(Errc::backend_failure, identifier() + " HTTP " + std::to_string(r.status) + ": " + r.body.substr(0, 200));
      }
      Json j = Json::parse(r.body, nullptr, false);
      if (j.is_discarded()) throw Error(Errc::backend_failure, identifier() + " returned non-JSON body");
      try {
        const auto& content = j.at("choices").at(0).at("message").at("content");
        return content.is_string() ? content.get<std::string>() : "";
      } catch (const nlohmann::json::exception&) {
        throw Error(Errc::backend_failure, identifier() + " response lacks choices[0].message.content");
      }
    }
    throw Error(Errc::backend_failure, identifier() + " unavailable: " + last);
  }

  std::shared_ptr<HttpClient> http_;
  ChatEndpoint ep_;
  RetryPolicy retry_;
};

// ---------------------------------------------------------------------------
// Web tools

struct WebToolsConfig {
  std::string search_url = "https://www.googleapis.com/customsearch/v1";
  std::string search_engine_id;  // cx
  std::string vision_url = "https://vision.googleapis.com/v1/images:annotate";
  std::string reader_url = "https://r.jina.ai/";
  std::string reader_key;
  std::size_t reader_max_chars = 60000;
};

/// Google Custom Search for text, Cloud Vision web detection for images, a
/// reader service for page text and an LLM for goal-directed summaries.
class WebToolBackend final : public ToolBackend {
 public:
  WebToolBackend(std::shared_ptr<HttpClient> http, WebToolsConfig config, std::shared_ptr<KeyPool> search_keys,
                 std::shared_ptr<KeyPool> vision_keys, std::shared_ptr<LlmBackend> summarizer,
                 const PromptLibrary& prompts, RetryPolicy retry = {})
      : http_(std::move(http)),
        cfg_(std::move(config)),
        search_keys_(std::move(search_keys)),
        vision_keys_(std::move(vision_keys)),
        summarizer_(std::move(summarizer)),
        prompts_(prompts),
        retry_(retry) {}

  std::vector<TextSearchResult> text_search(const std::string& query) override {
    auto r = detail::send_keyed(*http_, *search_keys_, retry_, "search", [&](const std::string& key) {
      HttpRequest req;
      req.url = cfg_.search_url + "?key=" + url_encode(key) + "&cx=" + url_encode(cfg_.search_engine_id) +
                "&num=" + std::to_string(kMaxToolResults) + "&q=" + url_encode(query);
      return req;
    });
    Json j = detail::parse_body(r, "search");
    std::vector<TextSearchResult> out;
    if (!j.contains("items")) return out;
    for (const auto& item : j["items"]) {
      out.push_back({item.value("link", ""), item.value("title", ""), item.value("snippet", "")});
    }
    return out;
  }

  std::vector<ImageSearchResult> image_search(const std::string& image_ref) override {
    auto r = detail::send_keyed(*http_, *vision_keys_, retry_, "vision", [&](const std::string& key) {
      HttpRequest req;
      req.method = "POST";
      req.url = cfg_.vision_url + "?key=" + url_encode(key);
      req.headers["Content-Type"] = "application/json";
      Json body = {{"requests", Json::array({Json{{"image", Json{{"source", Json{{"imageUri", image_ref}}}}},
                                                  {"features", Json::array({Json{{"type", "WEB_DETECTION"},
                                                                                 {"maxResults", 10}}})}}})}};
      req.body = body.dump();
      return req;
    });
    Json j = detail::parse_body(r, "vision");
    std::vector<ImageSearchResult> out;
    try {
      const auto& responses = j.at("responses");
      if (responses.empty() || !responses[0].contains("webDetection")) return out;
      const auto& wd = responses[0]["webDetection"];
      if (!wd.contains("pagesWithMatchingImages")) return out;
      for (const auto& page : wd["pagesWithMatchingImages"]) {
        std::string image;
        for (const char* k : {"fullMatchingImages", "partialMatchingImages"}) {
          if (image.empty() && page.contains(k) && !page[k].empty()) image = page[k][0].value("url", "");
        }
        out.push_back({image.empty() ? image_ref : image, page.value("url", ""), page.value("pageTitle", "")});
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::provider_error, std::string("vision response malformed: ") + e.what());
    }
    return out;
  }

  VisitResult visit(const std::string& url, const std::string& goal) override {
    HttpRequest req;
    req.url = cfg_.reader_url + url;
    if (!cfg_.reader_key.empty()) req.headers["Authorization"] = "Bearer " + cfg_.reader_key;
    HttpResponse r;
    try {
      r = http_->send(req);
    } catch (const Error& e) {
      throw Error(Errc::fetch_failed, e.what());
    }
    if (r.status != 200) throw Error(Errc::fetch_failed, "reader HTTP " + std::to_string(r.status));
    std::string page = utf8_truncate(std::move(r.body), cfg_.reader_max_chars);
    if (text::trim(page).empty()) throw Error(Errc::fetch_failed, "empty page");
    LlmRequest sreq;
    sreq.kind = PromptKind::visit_summary;
    sreq.fields = {{"WEB PAGE CONTENT", page}, {"USER GOAL", goal}};
    sreq.prompt = prompts_.render(PromptId::visit_summary, {{"[WEB PAGE CONTENT]", page}, {"[USER GOAL]", goal}});
    try {
      return VisitResult{url, goal, summarizer_->complete(sreq), false};
    } catch (const std::exception& e) {
      throw Error(Errc::summarizer_failed, e.what());
    }
  }

  std::string identifier() const override { return "live:google+vision+reader"; }

 private:
  std::shared_ptr<HttpClient> http_;
  WebToolsConfig cfg_;
  std::shared_ptr<KeyPool> search_keys_;
  std::shared_ptr<KeyPool> vision_keys_;
  std::shared_ptr<LlmBackend> summarizer_;
  const PromptLibrary& prompts_;
  RetryPolicy retry_;
};

}  // namespace deepbrowse::live
