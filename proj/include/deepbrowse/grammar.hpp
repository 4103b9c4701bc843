// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/prompts.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse {

// Accepted response language (after trimming outer whitespace):
//
//   response  = think , ws , ( tool_call | answer ) ;
//   think     = "<think>" , text , "</think>" ;
//   tool_call = "<tool_call>" , json_object , "</tool_call>" ;
//   answer    = "<answer>" , text , "</answer>" ;
//   text      = ? any bytes not containing one of the six tag literals ? ;
//
// json_object must carry a string "name" and may carry an object "arguments".

enum class ViolationKind {
  missing_think,
  multiple_think,
  missing_payload,
  both_payloads,
  unclosed_tag,
  bad_tag_order,
  multiple_tool_calls,
  invalid_tool_json,
  trailing_garbage,
};

constexpr std::string_view to_string(ViolationKind k) noexcept {
  switch (k) {
    case ViolationKind::missing_think: return "missing_think";
    case ViolationKind::multiple_think: return "multiple_think";
    case ViolationKind::missing_payload: return "missing_payload";
    case ViolationKind::both_payloads: return "both_payloads";
    case ViolationKind::unclosed_tag: return "unclosed_tag";
    case ViolationKind::bad_tag_order: return "bad_tag_order";
    case ViolationKind::multiple_tool_calls: return "multiple_tool_calls";
    case ViolationKind::invalid_tool_json: return "invalid_tool_json";
    case ViolationKind::trailing_garbage: return "trailing_garbage";
  }
  return "";
}

struct ByteSpan {
  std::size_t begin = 0;
  std::size_t end = 0;
  bool operator==(const ByteSpan&) const = default;
};

struct FormatViolation {
  ViolationKind kind;
  std::optional<ByteSpan> span;
  bool operator==(const FormatViolation&) const = default;
};

struct ParsedResponse {
  std::string thought;
  AgentAction payload;
  bool operator==(const ParsedResponse&) const = default;
};

using ParseOutcome = std::variant<ParsedResponse, FormatViolation>;

namespace grammar_detail {

enum class Tag { think_open, think_close, tool_open, tool_close, answer_open, answer_close };

inline constexpr std::array<std::pair<Tag, std::string_view>, 6> kTags = {{
    {Tag::think_open, "<think>"},
    {Tag::think_close, "</think>"},
    {Tag::tool_open, "<tool_call>"},
    {Tag::tool_close, "</tool_call>"},
    {Tag::answer_open, "<answer>"},
    {Tag::answer_close, "</answer>"},
}};

struct Found {
  std::size_t pos;
  std::size_t len;
  Tag tag;
};

inline std::optional<Found> next_tag(std::string_view s, std::size_t from, std::size_t end) {
  for (std::size_t i = s.find('<', from); i != std::string_view::npos && i < end; i = s.find('<', i + 1)) {
    for (const auto& [tag, lit] : kTags) {
      if (i + lit.size() <= end && s.compare(i, lit.size(), lit) == 0) return Found{i, lit.size(), tag};
    }
  }
  return std::nullopt;
}

inline bool is_think(Tag t) { return t == Tag::think_open || t == Tag::think_close; }

inline bool blank(std::string_view s, std::size_t a, std::size_t b) { return text::trim(s.substr(a, b - a)).empty(); }

inline FormatViolation violation(ViolationKind k, std::size_t a, std::size_t b) { return {k, ByteSpan{a, b}}; }

}  // namespace grammar_detail

/// Validates a tool_call body; returns the invocation or nullopt.
inline std::optional<ToolInvocation> parse_tool_json(std::string_view body) {
  Json j = Json::parse(body.begin(), body.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) return std::nullopt;
  auto name = j.find("name");
  if (name == j.end() || !name->is_string()) return std::nullopt;
  ToolInvocation call{name->get<std::string>(), Json::object()};
  if (auto args = j.find("arguments"); args != j.end()) {
    if (!args->is_object()) return std::nullopt;
    call.arguments = *args;
  }
  return call;
}

/// Strict single-pass scanner. Never throws; the violation reported is the
/// first rule broken reading left to right.
inline ParseOutcome parse_response(std::string_view raw) {
  using grammar_detail::Tag;
  using grammar_detail::violation;
  using VK = ViolationKind;

  std::size_t b = 0;
  std::size_t e = raw.size();
  while (b < e && text::is_space(raw[b])) ++b;
  while (e > b && text::is_space(raw[e - 1])) --e;

  auto first = grammar_detail::next_tag(raw, b, e);
  if (!first || first->tag != Tag::think_open) {
    for (auto t = first; t; t = grammar_detail::next_tag(raw, t->pos + t->len, e)) {
      if (t->tag == Tag::think_open) return violation(VK::bad_tag_order, b, t->pos);
    }
    return violation(VK::missing_think, b, e);
  }
  if (first->pos != b) return violation(VK::bad_tag_order, b, first->pos);

  const std::size_t thought_begin = first->pos + first->len;
  auto close = grammar_detail::next_tag(raw, thought_begin, e);
  if (!close) return violation(VK::unclosed_tag, first->pos, e);
  if (close->tag == Tag::think_open) return violation(VK::multiple_think, close->pos, close->pos + close->len);
  if (close->tag != Tag::think_close) return violation(VK::bad_tag_order, close->pos, close->pos + close->len);
  std::string thought(raw.substr(thought_begin, close->pos - thought_begin));

  const std::size_t after_think = close->pos + close->len;
  auto open = grammar_detail::next_tag(raw, after_think, e);
  if (!open) return violation(VK::missing_payload, after_think, e);
  if (!grammar_detail::blank(raw, after_think, open->pos)) return violation(VK::bad_tag_order, after_think, open->pos);
  if (grammar_detail::is_think(open->tag)) return violation(VK::multiple_think, open->pos, open->pos + open->len);
  if (open->tag == Tag::tool_close || open->tag == Tag::answer_close) {
    return violation(VK::bad_tag_order, open->pos, open->pos + open->len);
  }

  const bool tool = open->tag == Tag::tool_open;
  const Tag want_close = tool ? Tag::tool_close : Tag::answer_close;
  const std::size_t body_begin = open->pos + open->len;
  auto end_tag = grammar_detail::next_tag(raw, body_begin, e);
  if (!end_tag) return violation(VK::unclosed_tag, open->pos, e);
  const ByteSpan at{end_tag->pos, end_tag->pos + end_tag->len};
  if (grammar_detail::is_think(end_tag->tag)) return {FormatViolation{VK::multiple_think, at}};
  if (end_tag->tag == open->tag) return {FormatViolation{tool ? VK::multiple_tool_calls : VK::unclosed_tag, at}};
  if (end_tag->tag != want_close) {
    const bool other_open = end_tag->tag == (tool ? Tag::answer_open : Tag::tool_open);
    return {FormatViolation{other_open ? VK::both_payloads : VK::unclosed_tag, at}};
  }
  const std::string_view body = raw.substr(body_begin, end_tag->pos - body_begin);

  AgentAction action;
  if (tool) {
    auto call = parse_tool_json(body);
    if (!call) return violation(VK::invalid_tool_json, body_begin, end_tag->pos);
    action = std::move(*call);
  } else {
    action = FinalAnswer{std::string(text::trim(body))};
  }

  const std::size_t after_payload = end_tag->pos + end_tag->len;
  if (after_payload < e) {
    auto extra = grammar_detail::next_tag(raw, after_payload, e);
    const std::size_t stop = extra ? extra->pos : e;
    if (!grammar_detail::blank(raw, after_payload, stop) || !extra) {
      return violation(VK::trailing_garbage, after_payload, e);
    }
    const ByteSpan x{extra->pos, extra->pos + extra->len};
    if (grammar_detail::is_think(extra->tag)) return {FormatViolation{VK::multiple_think, x}};
    const bool extra_tool = extra->tag == Tag::tool_open || extra->tag == Tag::tool_close;
    if (extra_tool != tool) return {FormatViolation{VK::both_payloads, x}};
    return {FormatViolation{tool ? VK::multiple_tool_calls : VK::trailing_garbage, x}};
  }
  return ParsedResponse{std::move(thought), std::move(action)};
}

/// Compact JSON for a tool_call body. '<' only occurs inside JSON strings, so
/// escaping it keeps tag literals out of the rendered block.
inline std::string render_tool_json(const ToolInvocation& call) {
  Json j = Json::object();
  j["name"] = call.name;
  j["arguments"] = call.arguments;
  return text::replace_all(dump_line(j), "<", "\\u003c");
}

/// Canonical assistant turn; used for engine history and SFT export alike.
inline std::string render_assistant(std::string_view thought, const AgentAction& action) {
  std::string out = "<think>";
  out += thought;
  out += "</think>\n";
  if (const auto* call = std::get_if<ToolInvocation>(&action)) {
    out += "<tool_call>\n" + render_tool_json(*call) + "\n</tool_call>";
  } else {
    out += "<answer>" + std::get<FinalAnswer>(action).text + "</answer>";
  }
  return out;
}

inline std::string render_assistant(const ParsedResponse& p) { return render_assistant(p.thought, p.payload); }

inline std::string render_system_prompt(const PromptLibrary& lib, std::string_view current_date,
                                        const std::vector<std::string>& tool_specs) {
  if (tool_specs.empty()) throw Error(Errc::empty_toolset, "system prompt needs at least one tool spec");
  std::string specs;
  for (std::size_t i = 0; i < tool_specs.size(); ++i) {
    if (i) specs += '\n';
    specs += tool_specs[i];
  }
  return lib.render(PromptId::system, {{"{TOOL_SPECS}", specs}, {"{CURRENT_DATE}", std::string(current_date)}});
}

inline std::string render_system_prompt(const PromptLibrary& lib, std::string_view current_date) {
  return render_system_prompt(lib, current_date, lib.tool_specs());
}

// ---------------------------------------------------------------------------
// Tool results and their observation blocks

struct TextSearchResult {
  std::string link;
  std::string title;
  std::string snippet;
  bool operator==(const TextSearchResult&) const = default;
};

struct ImageSearchResult {
  std::string image_url;
  std::string page_link;
  std::string page_title;
  bool operator==(const ImageSearchResult&) const = default;
};

struct VisitResult {
  std::string url;
  std::string goal;
  std::string summary;
  bool failed = false;
  bool operator==(const VisitResult&) const = default;
};

struct TextSearchResults {
  std::vector<TextSearchResult> items;
  bool operator==(const TextSearchResults&) const = default;
};

struct ImageSearchResults {
  std::vector<ImageSearchResult> items;
  bool operator==(const ImageSearchResults&) const = default;
};

/// A tool-level failure surfaced to the agent as observation text.
struct ToolFailure {
  std::string tool;
  std::string message;
  bool operator==(const ToolFailure&) const = default;
};

using ToolResult = std::variant<TextSearchResults, ImageSearchResults, VisitResult, ToolFailure>;

inline constexpr std::string_view kNoResults = "No results found.";

inline std::string visit_failure_marker(std::string_view url, std::string_view reason) {
  return "[Visit Failed] The content of " + std::string(url) + " could not be retrieved: " + std::string(reason);
}

inline std::string render_tool_response(const ToolResult& result) {
  std::string body;
  auto numbered = [&body](std::size_t i, const std::string& line) {
    if (i) body += '\n';
    body += std::to_string(i + 1) + ". " + line;
  };
  if (const auto* ts = std::get_if<TextSearchResults>(&result)) {
    for (std::size_t i = 0; i < ts->items.size(); ++i) {
      const auto& r = ts->items[i];
      numbered(i, "[Link] " + r.link + " [Title] " + r.title + " [Snippet] " + r.snippet);
    }
    if (ts->items.empty()) body = kNoResults;
  } else if (const auto* is = std::get_if<ImageSearchResults>(&result)) {
    for (std::size_t i = 0; i < is->items.size(); ++i) {
      const auto& r = is->items[i];
      numbered(i, "[Image Link] " + r.image_url + " [Page Link] " + r.page_link + " [Page Title] " + r.page_title);
    }
    if (is->items.empty()) body = kNoResults;
  } else if (const auto* v = std::get_if<VisitResult>(&result)) {
    body = v->summary.empty() ? std::string(kNoResults) : v->summary;
  } else {
    const auto& f = std::get<ToolFailure>(result);
    body = "[Tool Error] " + f.tool + ": " + f.message;
  }
  body = text::replace_all(std::move(body), "</tool_response>", "<\\/tool_response>");
  return "<tool_response>\n" + body + "\n</tool_response>";
}

}  // namespace deepbrowse
