// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

enum class BackendKind { live, simulated, recorded };

constexpr std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::live: return "live";
    case BackendKind::simulated: return "sim";
    case BackendKind::recorded: return "recorded";
  }
  return "sim";
}

inline BackendKind parse_backend_kind(std::string_view s) {
  if (s == "live") return BackendKind::live;
  if (s == "sim" || s == "simulated") return BackendKind::simulated;
  if (s == "recorded") return BackendKind::recorded;
  throw Error(Errc::bad_config, "unknown backend '" + std::string(s) + "'");
}

inline constexpr std::size_t kMaxToolResults = 5;
inline constexpr std::string_view kToolNames[] = {"text_search", "image_search", "visit"};

inline bool is_known_tool(std::string_view name) {
  for (auto n : kToolNames) {
    if (n == name) return true;
  }
  return false;
}

/// Loose URL check: scheme, "://", and a non-empty host without spaces.
inline bool is_valid_url(std::string_view url) {
  const auto scheme = url.find("://");
  if (scheme == std::string_view::npos || scheme == 0) return false;
  for (char c : url.substr(0, scheme)) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '+' || c == '-' || c == '.')) return false;
  }
  const auto rest = url.substr(scheme + 3);
  if (rest.empty() || rest.front() == '/') return false;
  for (char c : url) {
    if (text::is_space(c)) return false;
  }
  return true;
}

/// Truncates to at most `cap` bytes without splitting a UTF-8 sequence.
inline std::string utf8_truncate(std::string s, std::size_t cap) {
  if (s.size() <= cap) return s;
  std::size_t cut = cap;
  while (cut > 0 && (static_cast<unsigned char>(s[cut]) & 0xC0) == 0x80) --cut;
  s.resize(cut);
  return s;
}

/// What the gateway knows about the task that issued a tool call.
struct TaskContext {
  std::string task_id;
  std::optional<std::string> image_ref;
};

/// Provider-facing interface shared by the live, simulated and replay backends.
/// Implementations must be safe to call from many trajectories at once.
class ToolBackend {
 public:
  virtual ~ToolBackend() = default;
  virtual std::vector<TextSearchResult> text_search(const std::string& query) = 0;
  virtual std::vector<ImageSearchResult> image_search(const std::string& image_ref) = 0;
  virtual VisitResult visit(const std::string& url, const std::string& goal) = 0;
  virtual std::string identifier() const = 0;
};

// ---------------------------------------------------------------------------
// Key rotation

/// Round-robin credential pool with a per-key daily request budget.
class KeyPool {
 public:
  KeyPool(std::vector<std::string> keys, std::size_t daily_budget)
      : keys_(std::move(keys)), used_(keys_.size(), 0), budget_(daily_budget) {}

  /// Returns the next under-budget key and charges one request to it.
  std::string acquire() {
    std::lock_guard lock(mu_);
    for (std::size_t k = 0; k < keys_.size(); ++k) {
      const std::size_t idx = (cursor_ + k) % keys_.size();
      if (used_[idx] < budget_) {
        ++used_[idx];
        cursor_ = (idx + 1) % keys_.size();
        return keys_[idx];
      }
    }
    throw Error(Errc::rate_limited, "all " + std::to_string(keys_.size()) + " keys exhausted their daily budget");
  }

  /// Provider said this key is out of quota; stop selecting it until reset().
  void mark_exhausted(const std::string& key) {
    std::lock_guard lock(mu_);
    for (std::size_t i = 0; i < keys_.size(); ++i) {
      if (keys_[i] == key) used_[i] = budget_;
    }
  }

  void reset() {
    std::lock_guard lock(mu_);
    std::fill(used_.begin(), used_.end(), 0);
  }

  std::size_t size() const noexcept { return keys_.size(); }
  std::size_t used(std::size_t i) const {
    std::lock_guard lock(mu_);
    return used_.at(i);
  }

 private:
  mutable std::mutex mu_;
  std::vector<std::string> keys_;
  std::vector<std::size_t> used_;
  std::size_t budget_;
  std::size_t cursor_ = 0;
};

// ---------------------------------------------------------------------------
// Result encoding for the cache

inline Json to_json(const ToolResult& r) {
  Json j = Json::object();
  if (const auto* ts = std::get_if<TextSearchResults>(&r)) {
    j["kind"] = "text_search";
    j["items"] = Json::array();
    for (const auto& i : ts->items) j["items"].push_back({{"link", i.link}, {"title", i.title}, {"snippet", i.snippet}});
  } else if (const auto* is = std::get_if<ImageSearchResults>(&r)) {
    j["kind"] = "image_search";
    j["items"] = Json::array();
    for (const auto& i : is->items) {
      j["items"].push_back({{"image_url", i.image_url}, {"page_link", i.page_link}, {"page_title", i.page_title}});
    }
  } else if (const auto* v = std::get_if<VisitResult>(&r)) {
    j["kind"] = "visit";
    j["url"] = v->url;
    j["goal"] = v->goal;
    j["summary"] = v->summary;
    j["failed"] = v->failed;
  } else {
    const auto& f = std::get<ToolFailure>(r);
    j["kind"] = "failure";
    j["tool"] = f.tool;
    j["message"] = f.message;
  }
  return j;
}

inline ToolResult tool_result_from_json(const Json& j) {
  const auto kind = detail::require<std::string>(j, "kind");
  if (kind == "text_search") {
    TextSearchResults out;
    for (const auto& i : j.at("items")) {
      out.items.push_back({i.at("link").get<std::string>(), i.at("title").get<std::string>(),
                           i.at("snippet").get<std::string>()});
    }
    return out;
  }
  if (kind == "image_search") {
    ImageSearchResults out;
    for (const auto& i : j.at("items")) {
      out.items.push_back({i.at("image_url").get<std::string>(), i.at("page_link").get<std::string>(),
                           i.at("page_title").get<std::string>()});
    }
    return out;
  }
  if (kind == "visit") {
    return VisitResult{detail::require<std::string>(j, "url"), detail::require<std::string>(j, "goal"),
                       detail::require<std::string>(j, "summary"), detail::require<bool>(j, "failed")};
  }
  if (kind == "failure") {
    return ToolFailure{detail::require<std::string>(j, "tool"), detail::require<std::string>(j, "message")};
  }
  throw Error(Errc::malformed_line, "unknown tool result kind '" + kind + "'");
}

/// Cache key: sha256 over the tool name and its canonical (key-sorted) arguments.
inline std::string cache_key(std::string_view tool, const Json& arguments) {
  const nlohmann::json canonical = nlohmann::json::parse(arguments.dump());
  return text::sha256_hex(std::string(tool) + "\n" + canonical.dump());
}

// ---------------------------------------------------------------------------
// Caching and record/replay

enum class CacheMode { off, memory, record, replay };

/// Thread-safe response cache. In record mode every fresh result is also
/// written to `<dir>/<key>.json`; replay mode serves only those files.
class ToolCache {
 public:
  ToolCache(CacheMode mode, std::filesystem::path dir = {}) : mode_(mode), dir_(std::move(dir)) {
    if ((mode_ == CacheMode::record || mode_ == CacheMode::replay) && dir_.empty()) {
      throw Error(Errc::bad_config, "record/replay cache needs a directory");
    }
    if (mode_ == CacheMode::replay && !std::filesystem::is_directory(dir_)) {
      throw Error(Errc::io_error, "recording directory not found: " + dir_.string());
    }
  }

  CacheMode mode() const noexcept { return mode_; }

  std::optional<ToolResult> lookup(const std::string& key) {
    if (mode_ == CacheMode::off) return std::nullopt;
    {
      std::shared_lock lock(mu_);
      if (auto it = memory_.find(key); it != memory_.end()) return it->second;
    }
    if (mode_ == CacheMode::memory) return std::nullopt;
    const auto path = dir_ / (key + ".json");
    if (!std::filesystem::is_regular_file(path)) return std::nullopt;
    Json j = Json::parse(text::read_file(path), nullptr, false);
    if (j.is_discarded() || !j.contains("result")) throw Error(Errc::io_error, "corrupt recording " + path.string());
    ToolResult r = tool_result_from_json(j["result"]);
    std::unique_lock lock(mu_);
    memory_.emplace(key, r);
    return r;
  }

  void store(const std::string& key, std::string_view tool, const Json& arguments, const ToolResult& r) {
    if (mode_ == CacheMode::off || mode_ == CacheMode::replay) return;
    std::unique_lock lock(mu_);
    memory_.insert_or_assign(key, r);
    if (mode_ == CacheMode::record) {
      Json j = Json::object();
      j["tool"] = tool;
      j["arguments"] = arguments;
      j["result"] = to_json(r);
      text::write_file(dir_ / (key + ".json"), j.dump(2) + "\n");
    }
  }

 private:
  CacheMode mode_;
  std::filesystem::path dir_;
  std::shared_mutex mu_;
  std::unordered_map<std::string, ToolResult> memory_;
};

/// Backend that serves a recorded session and never touches the network.
class ReplayBackend final : public ToolBackend {
 public:
  explicit ReplayBackend(std::filesystem::path dir) : cache_(CacheMode::replay, std::move(dir)) {}

  std::vector<TextSearchResult> text_search(const std::string& query) override {
    return std::get<TextSearchResults>(fetch("text_search", Json{{"query", query}})).items;
  }
  std::vector<ImageSearchResult> image_search(const std::string& image_ref) override {
    return std::get<ImageSearchResults>(fetch("image_search", Json{{"image_ref", image_ref}})).items;
  }
  VisitResult visit(const std::string& url, const std::string& goal) override {
    return std::get<VisitResult>(fetch("visit", Json{{"url", url}, {"goal", goal}}));
  }
  std::string identifier() const override { return "recorded"; }

  ToolCache& cache() noexcept { return cache_; }

 private:
  ToolResult fetch(std::string_view tool, const Json& args) {
    auto hit = cache_.lookup(cache_key(tool, args));
    if (!hit) throw Error(Errc::provider_error, std::string(tool) + " call missing from recording: " + args.dump());
    return *hit;
  }

  ToolCache cache_;
};

// ---------------------------------------------------------------------------
// Gateway

struct GatewayOptions {
  std::size_t visit_summary_cap = 2000;
};

/// Validates tool calls, enforces result contracts and routes to a backend.
class ToolGateway {
 public:
  ToolGateway(std::shared_ptr<ToolBackend> backend, GatewayOptions options = {},
              std::shared_ptr<ToolCache> cache = nullptr)
      : backend_(std::move(backend)), options_(options), cache_(std::move(cache)) {
    if (!backend_) throw Error(Errc::bad_config, "tool gateway needs a backend");
  }

  TextSearchResults text_search(const std::string& query) {
    if (text::trim(query).empty()) throw Error(Errc::empty_query, "text_search query is empty");
    const Json args{{"query", query}};
    return std::get<TextSearchResults>(cached("text_search", args, [&]() -> ToolResult {
      auto items = backend_->text_search(query);
      if (items.size() > kMaxToolResults) items.resize(kMaxToolResults);
      for (const auto& r : items) {
        if (!is_valid_url(r.link)) throw Error(Errc::provider_error, "provider returned invalid link '" + r.link + "'");
      }
      return TextSearchResults{std::move(items)};
    }));
  }

  ImageSearchResults image_search(const TaskContext& ctx) {
    if (!ctx.image_ref) throw Error(Errc::no_task_image, "task " + ctx.task_id + " has no image");
    const Json args{{"image_ref", *ctx.image_ref}};
    return std::get<ImageSearchResults>(cached("image_search", args, [&]() -> ToolResult {
      ImageSearchResults out;
      std::unordered_set<std::string> pages;
      for (auto& r : backend_->image_search(*ctx.image_ref)) {
        if (out.items.size() == kMaxToolResults) break;
        if (!pages.insert(r.page_link).second) continue;
        out.items.push_back(std::move(r));
      }
      return out;
    }));
  }

  /// Fetch and summarizer failures come back as a marked VisitResult.
  VisitResult visit(const std::string& url, const std::string& goal) {
    if (!is_valid_url(url)) throw Error(Errc::bad_arguments, "visit url is not a valid URL: '" + url + "'");
    if (text::trim(goal).empty()) throw Error(Errc::bad_arguments, "visit goal is empty");
    const Json args{{"url", url}, {"goal", goal}};
    return std::get<VisitResult>(cached("visit", args, [&]() -> ToolResult {
      try {
        VisitResult v = backend_->visit(url, goal);
        if (text::trim(v.summary).empty()) {
          return VisitResult{url, goal, visit_failure_marker(url, "empty summary"), true};
        }
        v.summary = utf8_truncate(std::move(v.summary), options_.visit_summary_cap);
        return v;
      } catch (const Error& e) {
        if (e.code() != Errc::fetch_failed && e.code() != Errc::summarizer_failed) throw;
        return VisitResult{url, goal, visit_failure_marker(url, e.what()), true};
      }
    }));
  }

  /// Routes a parsed tool call after validating its arguments.
  ToolResult dispatch(const ToolInvocation& call, const TaskContext& ctx) {
    if (!is_known_tool(call.name)) throw Error(Errc::unknown_tool, "unknown tool '" + call.name + "'");
    const Json& args = call.arguments;
    auto string_arg = [&](const char* key) {
      auto it = args.find(key);
      if (it == args.end() || !it->is_string()) {
        throw Error(Errc::bad_arguments, call.name + " requires string argument '" + key + "'");
      }
      return it->get<std::string>();
    };
    if (call.name == "text_search") {
      auto query = string_arg("query");
      if (text::trim(query).empty()) throw Error(Errc::bad_arguments, "text_search query is empty");
      return text_search(query);
    }
    if (call.name == "image_search") return image_search(ctx);
    return visit(string_arg("url"), string_arg("goal"));
  }

  const ToolBackend& backend() const noexcept { return *backend_; }
  std::string identifier() const { return backend_->identifier(); }

 private:
  template <typename Fn>
  ToolResult cached(std::string_view tool, const Json& args, Fn&& compute) {
    if (!cache_) return compute();
    const auto key = cache_key(tool, args);
    if (auto hit = cache_->lookup(key)) return *hit;
    ToolResult r = compute();
    cache_->store(key, tool, args, r);
    return r;
  }

  std::shared_ptr<ToolBackend> backend_;
  GatewayOptions options_;
  std::shared_ptr<ToolCache> cache_;
};

}  // namespace deepbrowse
