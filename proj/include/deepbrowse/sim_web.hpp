// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "deepbrowse/error.hpp"
#include "deepbrowse/grammar.hpp"
#include "deepbrowse/rng.hpp"
#include "deepbrowse/text.hpp"
#include "deepbrowse/tools.hpp"
#include "deepbrowse/trajectory.hpp"

namespace deepbrowse::sim {

// Vocabulary. Every content token occurs in exactly one phrase, so no phrase's
// token set is contained in another's and goal matching is unambiguous.

struct Relation {
  std::string_view forward;  // "X <forward> Y" on X's page
  std::string_view inverse;  // "Y <inverse> X" on Y's page
};

inline const std::vector<Relation>& relations() {
  static const std::vector<Relation> kRelations = {
      {"was commissioned by", "placed the commission for"},
      {"borders the district of", "lies beside"},
      {"was founded by", "established"},
      {"was restored by", "carried out the restoration of"},
      {"is archived at", "keeps the archive of"},
      {"was designed by", "drew the plans for"},
      {"is sponsored by", "provides funding to"},
      {"was named after", "gave its name to"},
      {"is governed by", "holds authority over"},
      {"was surveyed by", "conducted a survey of"},
      {"is managed by", "oversees the operations of"},
      {"was painted by", "created a painting of"},
      {"hosts the headquarters of", "is headquartered in"},
      {"was excavated by", "led the excavation of"},
      {"is insured by", "underwrites"},
      {"was photographed by", "took the earliest photograph of"},
      {"is supplied by", "delivers materials to"},
      {"was mapped by", "produced the first map of"},
      {"is maintained by", "performs upkeep on"},
      {"was donated to", "received a donation from"},
      {"is patrolled by", "guards"},
      {"was catalogued by", "compiled the catalogue entry for"},
      {"was renovated by", "oversaw the renovation of"},
      {"is studied by", "publishes research on"},
  };
  return kRelations;
}

struct Attribute {
  std::string_view name;
  std::string_view unit;  // suffix unit, or code prefix when is_code
  bool is_code = false;
};

inline const std::vector<Attribute>& attributes() {
  static const std::vector<Attribute> kAttributes = {
      {"elevation", "metres"},         {"population", "residents"},   {"area", "hectares"},
      {"length", "kilometres"},        {"depth", "fathoms"},          {"width", "yards"},
      {"height", "centimetres"},       {"mass", "kilograms"},         {"capacity", "seats"},
      {"volume", "litres"},            {"registry code", "RG", true}, {"inventory number", "INV", true},
      {"annual attendance", "visitors"}, {"staff count", "employees"}, {"archive shelfmark", "SM", true},
      {"grid reference", "GR", true},  {"budget", "credits"},         {"circumference", "paces"},
      {"perimeter", "rods"},           {"frequency", "hertz"},        {"wavelength", "nanometres"},
      {"temperature", "kelvin"},       {"pressure", "pascals"},       {"voltage", "volts"},
      {"altitude", "feet"},            {"latitude index", "LX", true}, {"membership", "members"},
      {"collection size", "items"},    {"print run", "copies"},       {"distance", "leagues"},
      {"duration", "minutes"},         {"license number", "LIC", true},
  };
  return kAttributes;
}

inline std::optional<std::size_t> relation_index(std::string_view phrase, bool inverse) {
  const auto& rels = relations();
  for (std::size_t i = 0; i < rels.size(); ++i) {
    if ((inverse ? rels[i].inverse : rels[i].forward) == phrase) return i;
  }
  return std::nullopt;
}

inline std::optional<std::size_t> attribute_index(std::string_view name) {
  const auto& attrs = attributes();
  for (std::size_t i = 0; i < attrs.size(); ++i) {
    if (attrs[i].name == name) return i;
  }
  return std::nullopt;
}

/// Every predicate phrase (attributes, forward and inverse relations).
inline std::vector<std::string> all_predicates() {
  std::vector<std::string> out;
  for (const auto& a : attributes()) out.emplace_back(a.name);
  for (const auto& r : relations()) {
    out.emplace_back(r.forward);
    out.emplace_back(r.inverse);
  }
  return out;
}

inline std::string page_url(std::string_view entity_id) { return "https://sim.web/wiki/" + std::string(entity_id); }
inline std::string image_url(std::string_view descriptor) {
  return "https://sim.web/images/" + std::string(descriptor) + ".jpg";
}

inline constexpr std::string_view kPagePrefix = "https://sim.web/wiki/";
inline constexpr std::string_view kImagePrefix = "https://sim.web/images/";

// ---------------------------------------------------------------------------

struct WorldParams {
  std::uint64_t seed = 7;
  std::size_t n_entities = 200;
  double rarity_fraction = 0.5;
  std::size_t rare_max_sitelinks = 10;
  std::size_t rare_min_statements = 20;
  std::size_t rare_max_statements = 30;
  std::size_t common_max_sitelinks = 150;
  std::size_t common_min_statements = 6;
  std::size_t common_max_statements = 14;
  std::size_t min_out_edges = 2;
  std::size_t max_out_edges = 4;
  double image_fraction = 0.85;
  double simple_image_fraction = 0.1;

  void validate() const {
    auto bad = [](const std::string& why) { throw Error(Errc::bad_distribution, why); };
    if (n_entities < 1) bad("n_entities must be at least 1");
    if (!(rarity_fraction >= 0.0 && rarity_fraction <= 1.0)) bad("rarity_fraction must lie in [0, 1]");
    if (!(image_fraction >= 0.0 && image_fraction <= 1.0)) bad("image_fraction must lie in [0, 1]");
    if (!(simple_image_fraction >= 0.0 && simple_image_fraction <= 1.0)) bad("simple_image_fraction must lie in [0, 1]");
    if (rare_min_statements > rare_max_statements) bad("rare statement range is empty");
    if (common_min_statements > common_max_statements || common_min_statements < 1) bad("common statement range is empty");
    if (common_max_sitelinks <= rare_max_sitelinks) bad("common sitelinks must exceed the rare maximum");
    if (min_out_edges < 1 || min_out_edges > max_out_edges) bad("out-edge range is empty");
    if (rare_min_statements > attributes().size() + 1 + 2 * relations().size()) bad("rare_min_statements unreachable");
    if (n_entities > 50000) bad("n_entities too large for the label space");
  }

  Json to_json() const {
    return Json{{"seed", seed},
                {"n_entities", n_entities},
                {"rarity_fraction", rarity_fraction},
                {"rare_max_sitelinks", rare_max_sitelinks},
                {"rare_min_statements", rare_min_statements},
                {"rare_max_statements", rare_max_statements},
                {"common_max_sitelinks", common_max_sitelinks},
                {"common_min_statements", common_min_statements},
                {"common_max_statements", common_max_statements},
                {"min_out_edges", min_out_edges},
                {"max_out_edges", max_out_edges},
                {"image_fraction", image_fraction},
                {"simple_image_fraction", simple_image_fraction}};
  }

  static WorldParams from_json(const Json& j) {
    WorldParams p;
    auto get = [&j](const char* key, auto& field) {
      if (auto it = j.find(key); it != j.end()) {
        try {
          field = it->get<std::decay_t<decltype(field)>>();
        } catch (const nlohmann::json::exception&) {
          throw Error(Errc::bad_config, std::string("world parameter '") + key + "' has the wrong type");
        }
      }
    };
    get("seed", p.seed);
    get("n_entities", p.n_entities);
    get("rarity_fraction", p.rarity_fraction);
    get("rare_max_sitelinks", p.rare_max_sitelinks);
    get("rare_min_statements", p.rare_min_statements);
    get("rare_max_statements", p.rare_max_statements);
    get("common_max_sitelinks", p.common_max_sitelinks);
    get("common_min_statements", p.common_min_statements);
    get("common_max_statements", p.common_max_statements);
    get("min_out_edges", p.min_out_edges);
    get("max_out_edges", p.max_out_edges);
    get("image_fraction", p.image_fraction);
    get("simple_image_fraction", p.simple_image_fraction);
    return p;
  }
};

enum class StatementKind { literal, forward, inverse };

constexpr std::string_view to_string(StatementKind k) noexcept {
  switch (k) {
    case StatementKind::literal: return "literal";
    case StatementKind::forward: return "forward";
    case StatementKind::inverse: return "inverse";
  }
  return "literal";
}

struct Statement {
  StatementKind kind = StatementKind::literal;
  std::string predicate;
  std::string object;  // literal value, or an entity_id for relations
  bool operator==(const Statement&) const = default;
};

struct SimEntity {
  std::string entity_id;
  std::string label;
  std::size_t sitelinks = 0;
  std::size_t rank = 0;
  std::size_t declared_statements = 0;
  std::vector<Statement> statements;
  std::optional<std::string> image_descriptor;
  bool simple_image = false;
  // Derived on load.
  std::string page_text;
  std::vector<std::string> out_links;

  std::string url() const { return page_url(entity_id); }
  std::optional<std::string> image() const {
    if (!image_descriptor) return std::nullopt;
    return image_url(*image_descriptor);
  }
};

namespace detail {

inline std::string pseudo_word(Rng& rng) {
  static constexpr std::string_view kConsonants = "bdfgklmnprstvz";
  static constexpr std::string_view kVowels = "aeiou";
  std::string w;
  for (int i = 0; i < 3; ++i) {
    w.push_back(kConsonants[rng.below(kConsonants.size())]);
    w.push_back(kVowels[rng.below(kVowels.size())]);
  }
  return w;
}

inline std::string capitalize(std::string w) {
  if (!w.empty()) w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
  return w;
}

inline std::string format_entity_id(std::size_t i) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "E%05zu", i);
  return buf;
}

inline std::string hex_token(Rng& rng, int digits) {
  static constexpr char kHex[] = "0123456789abcdef";
  std::string s;
  for (int i = 0; i < digits; ++i) s.push_back(kHex[rng.below(16)]);
  return s;
}

}  // namespace detail

/// Immutable synthetic web. All query methods are const and thread-safe.
class SimWorld {
 public:
  static SimWorld generate(const WorldParams& params) {
    params.validate();
    Rng rng(params.seed);
    const std::size_t n = params.n_entities;
    SimWorld w;
    w.params_ = params;
    w.entities_.resize(n);

    // Labels: two capitalized pseudo-words, each word used once world-wide.
    std::set<std::string, std::less<>> reserved;
    for (const auto& p : all_predicates()) {
      for (auto& t : text::words(p)) reserved.insert(t);
    }
    for (const auto& a : attributes()) {
      for (auto& t : text::words(a.unit)) reserved.insert(t);
    }
    for (const auto& s : text::stopwords()) reserved.insert(s);
    for (std::size_t i = 0; i < n; ++i) {
      auto& e = w.entities_[i];
      e.entity_id = detail::format_entity_id(i);
      std::string words[2];
      for (auto& word : words) {
        do {
          word = detail::pseudo_word(rng);
        } while (!reserved.insert(word).second);
      }
      e.label = detail::capitalize(words[0]) + " " + detail::capitalize(words[1]);
    }

    // Rarity: exactly round(f * n) entities pass the seed gate.
    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i) idx[i] = i;
    rng.shuffle(idx);
    const auto n_rare = static_cast<std::size_t>(std::llround(params.rarity_fraction * static_cast<double>(n)));
    std::vector<bool> rare(n, false);
    for (std::size_t i = 0; i < n_rare; ++i) rare[idx[i]] = true;

    // Images.
    for (auto& e : w.entities_) {
      if (rng.chance(params.image_fraction)) {
        e.image_descriptor = "img-" + detail::hex_token(rng, 10);
        e.simple_image = rng.chance(params.simple_image_fraction);
      }
    }

    // Rank order; relations only point from lower to higher rank.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    rng.shuffle(order);
    for (std::size_t r = 0; r < n; ++r) w.entities_[order[r]].rank = r;

    const std::size_t n_rel = relations().size();
    std::vector<std::vector<Statement>> forward(n), inverse(n);
    std::vector<std::set<std::size_t>> used_out(n), used_in(n);
    for (std::size_t r = 0; r + 1 < n; ++r) {
      const std::size_t x = order[r];
      std::vector<std::size_t> targets;
      for (std::size_t r2 = r + 1; r2 < n; ++r2) {
        if (w.entities_[order[r2]].image_descriptor) {
          targets.push_back(order[r2]);
          break;
        }
      }
      const auto want = static_cast<std::size_t>(
          rng.between(static_cast<std::int64_t>(params.min_out_edges), static_cast<std::int64_t>(params.max_out_edges)));
      for (std::size_t attempt = 0; attempt < 4 * want && targets.size() < want; ++attempt) {
        const std::size_t y = order[r + 1 + rng.below(n - r - 1)];
        if (std::find(targets.begin(), targets.end(), y) == targets.end()) targets.push_back(y);
      }
      for (std::size_t y : targets) {
        std::vector<std::size_t> free;
        for (std::size_t p = 0; p < n_rel; ++p) {
          if (!used_out[x].contains(p) && !used_in[y].contains(p)) free.push_back(p);
        }
        if (free.empty()) continue;
        const std::size_t p = rng.pick(free);
        used_out[x].insert(p);
        used_in[y].insert(p);
        forward[x].push_back({StatementKind::forward, std::string(relations()[p].forward), w.entities_[y].entity_id});
        inverse[y].push_back({StatementKind::inverse, std::string(relations()[p].inverse), w.entities_[x].entity_id});
      }
    }

    // Statements: one literal first (the seed fact), relations, literal top-up.
    std::unordered_set<std::uint64_t> used_numbers;
    auto literal = [&](std::size_t attr) {
      std::uint64_t v;
      do {
        v = 10000 + rng.below(90000);
      } while (!used_numbers.insert(v).second);
      const auto& a = attributes()[attr];
      std::string value = a.is_code ? std::string(a.unit) + "-" + std::to_string(v)
                                    : std::to_string(v) + " " + std::string(a.unit);
      return Statement{StatementKind::literal, std::string(a.name), std::move(value)};
    };
    for (std::size_t i = 0; i < n; ++i) {
      auto& e = w.entities_[i];
      const std::size_t rel = forward[i].size() + inverse[i].size();
      std::size_t target;
      if (rare[i]) {
        target = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(params.rare_min_statements),
                                                      static_cast<std::int64_t>(params.rare_max_statements)));
        e.sitelinks = static_cast<std::size_t>(rng.between(0, static_cast<std::int64_t>(params.rare_max_sitelinks)));
      } else {
        target = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(params.common_min_statements),
                                                      static_cast<std::int64_t>(params.common_max_statements)));
        e.sitelinks = static_cast<std::size_t>(rng.between(static_cast<std::int64_t>(params.rare_max_sitelinks) + 1,
                                                           static_cast<std::int64_t>(params.common_max_sitelinks)));
      }
      const std::size_t n_literals = std::min(attributes().size(), std::max<std::size_t>(1, target > rel ? target - rel : 1));
      std::vector<std::size_t> attrs(attributes().size());
      for (std::size_t a = 0; a < attrs.size(); ++a) attrs[a] = a;
      rng.shuffle(attrs);
      e.statements.push_back(literal(attrs[0]));
      for (auto& s : forward[i]) e.statements.push_back(std::move(s));
      for (auto& s : inverse[i]) e.statements.push_back(std::move(s));
      for (std::size_t a = 1; a < n_literals; ++a) e.statements.push_back(literal(attrs[a]));
      e.declared_statements = e.statements.size();
    }
    w.build_indices();
    return w;
  }

  Json to_json() const {
    Json j = Json::object();
    j["schema_version"] = kSchemaVersion;
    j["params"] = params_.to_json();
    Json ents = Json::array();
    for (const auto& e : entities_) {
      Json je = Json::object();
      je["entity_id"] = e.entity_id;
      je["label"] = e.label;
      je["sitelinks"] = e.sitelinks;
      je["rank"] = e.rank;
      je["statement_count"] = e.declared_statements;
      if (e.image_descriptor) {
        je["image_descriptor"] = *e.image_descriptor;
        je["simple_image"] = e.simple_image;
      }
      Json st = Json::array();
      for (const auto& s : e.statements) {
        st.push_back(Json{{"kind", to_string(s.kind)}, {"predicate", s.predicate}, {"object", s.object}});
      }
      je["statements"] = std::move(st);
      ents.push_back(std::move(je));
    }
    j["entities"] = std::move(ents);
    return j;
  }

  static SimWorld from_json(const Json& j) {
    SimWorld w;
    try {
      if (j.value("schema_version", kSchemaVersion) != kSchemaVersion) {
        throw Error(Errc::schema_version_mismatch, "unsupported world schema_version");
      }
      w.params_ = WorldParams::from_json(j.at("params"));
      for (const auto& je : j.at("entities")) {
        SimEntity e;
        e.entity_id = je.at("entity_id").get<std::string>();
        e.label = je.at("label").get<std::string>();
        e.sitelinks = je.at("sitelinks").get<std::size_t>();
        e.rank = je.at("rank").get<std::size_t>();
        e.declared_statements = je.at("statement_count").get<std::size_t>();
        if (auto it = je.find("image_descriptor"); it != je.end()) {
          e.image_descriptor = it->get<std::string>();
          e.simple_image = je.value("simple_image", false);
        }
        for (const auto& s : je.at("statements")) {
          const auto kind = s.at("kind").get<std::string>();
          Statement st;
          if (kind == "literal") {
            st.kind = StatementKind::literal;
          } else if (kind == "forward") {
            st.kind = StatementKind::forward;
          } else if (kind == "inverse") {
            st.kind = StatementKind::inverse;
          } else {
            throw Error(Errc::schema_version_mismatch, "unknown statement kind '" + kind + "'");
          }
          st.predicate = s.at("predicate").get<std::string>();
          st.object = s.at("object").get<std::string>();
          e.statements.push_back(std::move(st));
        }
        w.entities_.push_back(std::move(e));
      }
    } catch (const nlohmann::json::exception& ex) {
      throw Error(Errc::malformed_line, std::string("world file: ") + ex.what());
    }
    w.build_indices();
    return w;
  }

  static SimWorld load(const std::filesystem::path& path) {
    Json j = Json::parse(text::read_file(path), nullptr, false);
    if (j.is_discarded()) throw Error(Errc::malformed_line, "world file is not JSON: " + path.string());
    return from_json(j);
  }

  void save(const std::filesystem::path& path) const { text::write_file(path, to_json().dump(1) + "\n"); }

  const WorldParams& params() const noexcept { return params_; }
  const std::vector<SimEntity>& entities() const noexcept { return entities_; }

  const SimEntity* find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &entities_[it->second];
  }
  const SimEntity* find_by_label(std::string_view label) const {
    auto it = by_label_.find(std::string(label));
    return it == by_label_.end() ? nullptr : &entities_[it->second];
  }
  const SimEntity* find_by_url(std::string_view url) const {
    if (!text::starts_with(url, kPagePrefix)) return nullptr;
    return find(url.substr(kPagePrefix.size()));
  }
  const SimEntity* find_by_image(std::string_view ref) const {
    auto it = by_image_.find(std::string(ref));
    return it == by_image_.end() ? nullptr : &entities_[it->second];
  }

  /// Labels occurring in `text`, ordered by first position.
  std::vector<const SimEntity*> labels_in(std::string_view s) const {
    std::vector<std::pair<std::size_t, const SimEntity*>> hits;
    for (const auto& e : entities_) {
      if (auto pos = s.find(e.label); pos != std::string_view::npos) hits.emplace_back(pos, &e);
    }
    std::sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<const SimEntity*> out;
    for (auto& h : hits) out.push_back(h.second);
    return out;
  }

  std::string fact_line(const SimEntity& e, const Statement& s) const {
    if (s.kind == StatementKind::literal) return "The " + s.predicate + " of " + e.label + " is " + s.object + ".";
    const SimEntity* o = find(s.object);
    return e.label + " " + s.predicate + " " + o->label + " (" + o->url() + ").";
  }

  bool passes_gate(const SimEntity& e, std::size_t max_sitelinks, std::size_t min_statements) const {
    return e.sitelinks <= max_sitelinks && e.statements.size() >= min_statements;
  }

  // -- search backends --------------------------------------------------------

  std::vector<TextSearchResult> text_search(std::string_view query) const {
    std::unordered_map<std::size_t, std::size_t> score;
    for (const auto& tok : text::content_tokens(query)) {
      auto it = token_index_.find(tok);
      if (it == token_index_.end()) continue;
      for (const auto& [entity, weight] : it->second) score[entity] += weight;
    }
    std::vector<std::pair<std::size_t, std::size_t>> ranked(score.begin(), score.end());
    std::sort(ranked.begin(), ranked.end(), [this](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return entities_[a.first].entity_id < entities_[b.first].entity_id;
    });
    std::vector<TextSearchResult> out;
    for (std::size_t i = 0; i < ranked.size() && out.size() < kMaxToolResults; ++i) {
      const auto& e = entities_[ranked[i].first];
      out.push_back({e.url(), e.label, snippet(e)});
    }
    return out;
  }

  std::vector<ImageSearchResult> image_search(std::string_view ref) const {
    const SimEntity* owner = find_by_image(ref);
    if (!owner) return {};
    std::vector<ImageSearchResult> out{{*owner->image(), owner->url(), owner->label}};
    std::vector<std::size_t> pool;
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      if (entities_[i].image_descriptor && &entities_[i] != owner) pool.push_back(i);
    }
    Rng rng(text::fnv1a(ref, params_.seed));
    rng.shuffle(pool);
    for (std::size_t i = 0; i < pool.size() && out.size() < kMaxToolResults; ++i) {
      const auto& d = entities_[pool[i]];
      out.push_back({*d.image(), d.url(), d.label});
    }
    return out;
  }

  /// Fact lines whose predicate shares the most content tokens with the goal.
  VisitResult visit(std::string_view url, std::string_view goal) const {
    const SimEntity* e = find_by_url(url);
    if (!e) throw Error(Errc::fetch_failed, "no page at " + std::string(url));
    const auto goal_tokens = text::content_tokens(goal);
    std::size_t best = 0;
    std::vector<std::size_t> lines;
    for (std::size_t i = 0; i < e->statements.size(); ++i) {
      const auto& pt = predicate_tokens(e->statements[i].predicate);
      std::size_t overlap = 0;
      for (const auto& t : pt) overlap += std::binary_search(goal_tokens.begin(), goal_tokens.end(), t) ? 1 : 0;
      if (overlap == 0 || overlap < best) continue;
      if (overlap > best) {
        best = overlap;
        lines.clear();
      }
      lines.push_back(i);
    }
    std::string summary;
    for (std::size_t i : lines) {
      if (!summary.empty()) summary += '\n';
      summary += fact_line(*e, e->statements[i]);
    }
    if (summary.empty()) summary = "The page about " + e->label + " contains no information relevant to this goal.";
    return VisitResult{std::string(url), std::string(goal), summary, false};
  }

 private:
  std::string snippet(const SimEntity& e) const {
    std::string s;
    for (std::size_t i = 0; i < e.statements.size() && i < 2; ++i) {
      if (!s.empty()) s += ' ';
      s += fact_line(e, e.statements[i]);
    }
    if (s.size() > 160) s = utf8_truncate(std::move(s), 157) + "...";
    return s;
  }

  const std::vector<std::string>& predicate_tokens(const std::string& predicate) const {
    auto it = predicate_tokens_.find(predicate);
    if (it != predicate_tokens_.end()) return it->second;
    static const std::vector<std::string> kEmpty;
    return kEmpty;
  }

  void build_indices() {
    by_id_.clear();
    by_label_.clear();
    by_image_.clear();
    token_index_.clear();
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      const auto& e = entities_[i];
      if (!by_id_.emplace(e.entity_id, i).second) throw Error(Errc::bad_distribution, "duplicate id " + e.entity_id);
      if (!by_label_.emplace(e.label, i).second) throw Error(Errc::bad_distribution, "duplicate label " + e.label);
      if (e.image_descriptor) by_image_.emplace(*e.image(), i);
    }
    for (auto& e : entities_) {
      if (e.statements.size() != e.declared_statements) {
        throw Error(Errc::bad_distribution, e.entity_id + " statement count differs from the declared count");
      }
      e.out_links.clear();
      for (const auto& s : e.statements) {
        if (!predicate_tokens_.contains(s.predicate)) predicate_tokens_[s.predicate] = text::content_tokens(s.predicate);
        if (s.kind == StatementKind::literal) continue;
        if (!by_id_.contains(s.object)) throw Error(Errc::bad_distribution, e.entity_id + " links to unknown " + s.object);
        e.out_links.push_back(s.object);
      }
    }
    for (std::size_t i = 0; i < entities_.size(); ++i) {
      auto& e = entities_[i];
      e.page_text = "# " + e.label;
      for (const auto& s : e.statements) e.page_text += "\n" + fact_line(e, s);
      std::map<std::string, std::size_t> weight;
      for (auto& t : text::content_tokens(e.page_text)) weight[t] = 1;
      for (auto& t : text::content_tokens(e.label)) weight[t] = 2;
      for (const auto& [tok, wgt] : weight) token_index_[tok].emplace_back(i, wgt);
    }
  }

  WorldParams params_;
  std::vector<SimEntity> entities_;
  std::unordered_map<std::string, std::size_t> by_id_;
  std::unordered_map<std::string, std::size_t> by_label_;
  std::unordered_map<std::string, std::size_t> by_image_;
  std::unordered_map<std::string, std::vector<std::pair<std::size_t, std::size_t>>> token_index_;
  std::unordered_map<std::string, std::vector<std::string>> predicate_tokens_;
};

/// Tool backend over an immutable world.
class SimToolBackend final : public ToolBackend {
 public:
  explicit SimToolBackend(std::shared_ptr<const SimWorld> world) : world_(std::move(world)) {}

  std::vector<TextSearchResult> text_search(const std::string& query) override { return world_->text_search(query); }
  std::vector<ImageSearchResult> image_search(const std::string& ref) override { return world_->image_search(ref); }
  VisitResult visit(const std::string& url, const std::string& goal) override { return world_->visit(url, goal); }
  std::string identifier() const override { return "sim:seed=" + std::to_string(world_->params().seed); }

  const SimWorld& world() const noexcept { return *world_; }

 private:
  std::shared_ptr<const SimWorld> world_;
};

}  // namespace deepbrowse::sim
