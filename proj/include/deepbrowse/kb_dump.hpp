// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// Knowledge base read from a local JSONL export, one entity per line:
//   {"entity_id", "label", "sitelinks", "statements", "page_content", "image"?}
// Producing the export from a Wikidata/Wikipedia dump is left to an offline
// job; this adapter only serves it.

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "deepbrowse/synthesis.hpp"

namespace deepbrowse {

class JsonlKbAdapter final : public KbAdapter {
 public:
  explicit JsonlKbAdapter(const std::filesystem::path& path) : source_(path.filename().string()) {
    std::vector<JsonlLine> lines;
    try {
      lines = read_jsonl_lines(path);
    } catch (const Error& e) {
      throw Error(Errc::kb_unavailable, e.what());
    }
    for (const auto& line : lines) {
      Json j = Json::parse(line.text, nullptr, false);
      if (j.is_discarded() || !j.is_object()) {
        throw Error(Errc::kb_unavailable, path.string() + ":" + std::to_string(line.number) + ": not a JSON object");
      }
      try {
        Row r;
        r.seed.entity_id = j.at("entity_id").get<std::string>();
        r.seed.label = j.at("label").get<std::string>();
        r.seed.sitelinks = j.at("sitelinks").get<std::size_t>();
        r.seed.statements = j.at("statements").get<std::size_t>();
        r.seed.page_content = j.value("page_content", "");
        if (auto it = j.find("image"); it != j.end() && it->is_string()) r.image = it->get<std::string>();
        by_label_[text::match_key(r.seed.label)] = rows_.size();
        rows_.push_back(std::move(r));
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::kb_unavailable, path.string() + ":" + std::to_string(line.number) + ": " + e.what());
      }
    }
  }

  std::vector<SeedEntity> query_seeds(std::size_t max_sitelinks, std::size_t min_statements,
                                      std::size_t limit) override {
    std::vector<SeedEntity> out;
    for (const auto& r : rows_) {
      if (out.size() == limit) break;
      if (r.seed.sitelinks <= max_sitelinks && r.seed.statements >= min_statements) out.push_back(r.seed);
    }
    return out;
  }

  std::optional<KbPage> page(std::string_view label) override {
    const Row* r = find(label);
    if (!r) return std::nullopt;
    return KbPage{r->seed.entity_id, r->seed.label, r->seed.page_content};
  }

  std::optional<std::string> image_for(std::string_view label) override {
    const Row* r = find(label);
    return r ? r->image : std::nullopt;
  }

  std::string identifier() const override { return "kb-dump:" + source_; }

 private:
  struct Row {
    SeedEntity seed;
    std::optional<std::string> image;
  };

  const Row* find(std::string_view label) const {
    auto it = by_label_.find(text::match_key(label));
    return it == by_label_.end() ? nullptr : &rows_[it->second];
  }

  std::string source_;
  std::vector<Row> rows_;
  std::map<std::string, std::size_t> by_label_;
};

}  // namespace deepbrowse
