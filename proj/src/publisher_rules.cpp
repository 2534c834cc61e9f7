#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "prepubdiff/error.hpp"
#include "prepubdiff/section_extraction.hpp"

namespace prepubdiff::extract {

namespace {

constexpr std::string_view kBuiltinProfiles = R"json({
  "profiles": [
    {
      "name": "jats",
      "roots": ["article"],
      "title": ["article-meta/title-group/article-title", "title-group/article-title", "article-title"],
      "abstract": ["article-meta/abstract", "abstract"],
      "body": ["article/body", "body"],
      "exclude": ["back", "ref-list", "fn-group", "abstract[@abstract-type=graphical]",
                  "abstract[@abstract-type=teaser]", "journal-meta", "contrib-group", "aff",
                  "author-notes", "permissions"],
      "blocks": ["p", "sec", "title", "label", "caption", "fig", "table-wrap", "table", "tr",
                 "td", "th", "list", "list-item", "disp-formula", "disp-quote", "def-list",
                 "def-item", "boxed-text", "statement", "abstract", "body", "trans-abstract"],
      "math": ["mml:math", "math", "tex-math"]
    },
    {
      "name": "elsevier",
      "roots": ["full-text-retrieval-response"],
      "title": ["coredata/dc:title", "ce:title"],
      "abstract": ["ce:abstract[@class=author]", "ce:abstract", "coredata/dc:description"],
      "body": ["ce:sections", "body"],
      "exclude": ["ce:abstract/ce:section-title", "ce:bibliography", "tail", "ce:author-group",
                  "ce:keywords", "ce:abstract[@class=graphical]", "ce:abstract[@class=highlights]",
                  "ce:footnote", "objects", "xocs:meta", "scopus-id", "link"],
      "blocks": ["ce:para", "ce:simple-para", "ce:section", "ce:section-title", "ce:label",
                 "ce:caption", "ce:figure", "ce:table", "row", "entry", "ce:list", "ce:list-item",
                 "ce:abstract-sec", "ce:display", "ce:formula", "ce:sections", "ce:abstract"],
      "math": ["mml:math", "math"]
    },
    {
      "name": "generic",
      "roots": ["*"],
      "title": ["title-group/article-title", "article-title", "ce:title", "dc:title", "titleStmt/title", "title"],
      "abstract": ["abstract", "ce:abstract", "dc:description"],
      "body": ["body", "ce:sections"],
      "exclude": ["back", "ref-list", "ce:bibliography", "listBibl", "div[@type=references]", "tail",
                  "ce:abstract/ce:section-title"],
      "blocks": ["p", "sec", "title", "head", "div", "label", "caption", "fig", "figure", "figDesc",
                 "table", "tr", "td", "th", "row", "cell", "entry", "list", "list-item", "item",
                 "ce:para", "ce:simple-para", "ce:section", "ce:section-title", "ce:caption"],
      "math": ["mml:math", "math", "tex-math"]
    }
  ]
})json";

[[noreturn]] void bad_rules(const std::string& what) {
  throw Error(fmt::format("invalid publisher rule table: {}", what));
}

std::vector<Selector> selectors(const nlohmann::json& profile, const char* key) {
  std::vector<Selector> out;
  if (!profile.contains(key)) return out;
  const auto& list = profile.at(key);
  if (!list.is_array()) bad_rules(fmt::format("\"{}\" must be an array", key));
  for (const auto& s : list) {
    if (!s.is_string()) bad_rules(fmt::format("\"{}\" entries must be strings", key));
    out.push_back(Selector::parse(s.get<std::string>()));
  }
  return out;
}

bool name_matches(std::string_view pattern, const xml::Node& node) {
  if (pattern == "*") return true;
  if (pattern.find(':') != std::string_view::npos) return node.name == pattern;
  return node.local_name() == pattern;
}

}  // namespace

Selector Selector::parse(std::string_view text) {
  Selector sel;
  sel.text_ = std::string(text);
  std::size_t pos = 0;
  auto fail = [&](const char* why) {
    throw Error(fmt::format("bad selector \"{}\": {}", text, why));
  };
  while (pos <= text.size()) {
    Step step;
    const auto name_end = text.find_first_of("[/", pos);
    step.name = std::string(text.substr(pos, name_end == std::string_view::npos ? text.size() - pos : name_end - pos));
    if (step.name.empty()) fail("empty step");
    pos = name_end == std::string_view::npos ? text.size() : name_end;
    while (pos < text.size() && text[pos] == '[') {
      const auto close = text.find(']', pos);
      if (close == std::string_view::npos) fail("unterminated predicate");
      auto pred = text.substr(pos + 1, close - pos - 1);
      if (!pred.starts_with('@')) fail("predicate must start with @");
      const auto eq = pred.find('=');
      if (eq == std::string_view::npos) fail("predicate needs '='");
      auto key = pred.substr(1, eq - 1);
      auto value = pred.substr(eq + 1);
      if (value.size() >= 2 && (value.front() == '\'' || value.front() == '"') && value.back() == value.front())
        value = value.substr(1, value.size() - 2);
      if (key.empty()) fail("empty attribute name");
      step.attributes.emplace_back(std::string(key), std::string(value));
      pos = close + 1;
    }
    sel.steps_.push_back(std::move(step));
    if (pos >= text.size()) break;
    if (text[pos] != '/') fail("expected '/'");
    ++pos;
    if (pos == text.size()) fail("trailing '/'");
  }
  return sel;
}

bool Selector::matches(std::span<const xml::Node* const> path) const {
  if (steps_.empty() || steps_.size() > path.size()) return false;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& step = steps_[steps_.size() - 1 - i];
    const xml::Node& node = *path[path.size() - 1 - i];
    if (!name_matches(step.name, node)) return false;
    for (const auto& [key, value] : step.attributes) {
      auto actual = node.attribute(key);
      if (!actual || *actual != value) return false;
    }
  }
  return true;
}

PublisherRules PublisherRules::from_json(std::string_view json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text.begin(), json_text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("publisher rules are not valid JSON: {}", e.what()), e.byte);
  }
  if (!doc.is_object() || !doc.contains("profiles") || !doc.at("profiles").is_array())
    bad_rules("expected {\"profiles\": [...]}");
  PublisherRules rules;
  for (const auto& p : doc.at("profiles")) {
    if (!p.is_object() || !p.contains("name") || !p.at("name").is_string()) bad_rules("profile without name");
    Profile profile;
    profile.name = p.at("name").get<std::string>();
    if (!p.contains("roots") || !p.at("roots").is_array()) bad_rules(profile.name + ": missing roots");
    for (const auto& r : p.at("roots")) {
      if (!r.is_string()) bad_rules(profile.name + ": roots must be strings");
      profile.roots.push_back(r.get<std::string>());
    }
    profile.rules.title = selectors(p, "title");
    profile.rules.abstract = selectors(p, "abstract");
    profile.rules.body = selectors(p, "body");
    profile.rules.exclude = selectors(p, "exclude");
    profile.rules.blocks = selectors(p, "blocks");
    profile.rules.math = selectors(p, "math");
    rules.profiles_.push_back(std::move(profile));
  }
  return rules;
}

PublisherRules PublisherRules::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read publisher rules {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

const PublisherRules& PublisherRules::builtin() {
  static const PublisherRules rules = from_json(kBuiltinProfiles);
  return rules;
}

void PublisherRules::prepend(const PublisherRules& other) {
  profiles_.insert(profiles_.begin(), other.profiles_.begin(), other.profiles_.end());
}

const Profile& PublisherRules::select(const xml::Node& root) const {
  const Profile* fallback = nullptr;
  for (const auto& p : profiles_) {
    for (const auto& r : p.roots) {
      if (r == "*") {
        if (!fallback) fallback = &p;
      } else if (name_matches(r, root)) {
        return p;
      }
    }
  }
  if (fallback) return *fallback;
  return builtin().profiles_.back();
}

const SectionRules& tei_rules() {
  static const SectionRules rules = [] {
    SectionRules r;
    auto sel = [](std::initializer_list<std::string_view> items) {
      std::vector<Selector> out;
      for (auto s : items) out.push_back(Selector::parse(s));
      return out;
    };
    r.title = sel({"titleStmt/title[@level=a][@type=main]", "titleStmt/title[@type=main]", "titleStmt/title"});
    r.abstract = sel({"profileDesc/abstract", "abstract"});
    r.body = sel({"text/body", "body"});
    r.exclude = sel({"listBibl", "div[@type=references]", "div[@type=annex]/listBibl"});
    r.blocks = sel({"p", "div", "head", "figure", "figDesc", "table", "row", "cell", "list", "item",
                    "formula", "note", "s", "label", "abstract", "body"});
    r.math = sel({"mml:math", "math"});
    return r;
  }();
  return rules;
}

}  // namespace prepubdiff::extract
