#include "prepubdiff/section_extraction.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "prepubdiff/error.hpp"
#include "prepubdiff/utf8.hpp"

namespace prepubdiff::extract {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Normalization

namespace {

// Appends the ASCII replacement for typographic punctuation; false if `cp`
// has no mapping.
bool map_punctuation(char32_t cp, std::u32string& out) {
  switch (cp) {
    case 0x2010: case 0x2011: case 0x2012: case 0x2013: case 0x2014: case 0x2015: case 0x2212:
      out.push_back(U'-');
      return true;
    case 0x2018: case 0x2019: case 0x201A: case 0x201B: case 0x2032:
      out.push_back(U'\'');
      return true;
    case 0x201C: case 0x201D: case 0x201E: case 0x201F: case 0x2033:
      out.push_back(U'"');
      return true;
    case 0x2026: out += U"..."; return true;
    case 0xFB00: out += U"ff"; return true;
    case 0xFB01: out += U"fi"; return true;
    case 0xFB02: out += U"fl"; return true;
    case 0xFB03: out += U"ffi"; return true;
    case 0xFB04: out += U"ffl"; return true;
    case 0xFB05: case 0xFB06: out += U"st"; return true;
    default: return false;
  }
}

std::string trimmed(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const fs::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(fmt::format("cannot write {}", path.string()));
  out << content;
}

}  // namespace

std::string normalize_section_text(std::string_view text, const NormalizeOptions& options) {
  const std::u32string in = utf8::decode(text);
  std::u32string mapped;
  mapped.reserve(in.size());
  for (char32_t cp : in)
    if (!options.punctuation || !map_punctuation(cp, mapped)) mapped.push_back(cp);

  std::string out;
  out.reserve(text.size());
  bool pending_space = false;
  for (char32_t cp : mapped) {
    if (utf8::is_space(cp)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    utf8::append(out, cp);
  }
  return out;
}

// ---------------------------------------------------------------------------
// OAI-PMH Dublin Core

std::string arxiv_id_from_oai_identifier(std::string_view identifier) {
  std::string id = trimmed(identifier);
  if (id.starts_with("oai:")) {
    const auto colon = id.find(':', 4);
    if (colon != std::string::npos) id.erase(0, colon + 1);
  }
  return id;
}

ArticleMetadata parse_oai_record(const xml::Node& root) {
  const xml::Node* record = root.local_name() == "record" ? &root : root.find("record");
  if (!record) throw RecordRejected("no <record> element");
  const xml::Node* header = record->child("header");
  if (!header) throw RecordRejected("record has no <header>");
  if (auto status = header->attribute("status"); status && *status == "deleted")
    throw RecordRejected("deleted record");
  const xml::Node* identifier = header->child("identifier");
  ArticleMetadata a;
  if (identifier) a.arxiv_id = arxiv_id_from_oai_identifier(identifier->text_content());
  if (a.arxiv_id.empty()) throw RecordRejected("record has no identifier");

  const xml::Node* metadata = record->child("metadata");
  const xml::Node* dc = metadata ? metadata->find("dc") : nullptr;
  if (!dc) throw RecordRejected(fmt::format("{}: no oai_dc metadata", a.arxiv_id));

  if (const auto* title = dc->child("title")) a.title_raw = title->text_content();
  if (const auto* description = dc->child("description")) a.abstract_raw = description->text_content();

  for (const auto* id : dc->children_named("identifier")) {
    const std::string value = trimmed(id->text_content());
    std::string lowered;
    for (char c : value) lowered.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    const bool doi_like = lowered.starts_with("doi:") || lowered.find("doi.org/") != std::string::npos ||
                          (lowered.starts_with("10.") && lowered.find('/') != std::string::npos);
    if (!doi_like) continue;
    if (auto doi = normalize_doi(value); !doi.empty()) {
      a.doi = std::move(doi);
      break;
    }
  }

  for (const auto* spec : header->children_named("setSpec"))
    if (auto s = trimmed(spec->text_content()); !s.empty()) a.categories.push_back(std::move(s));
  if (a.categories.empty())
    for (const auto* subject : dc->children_named("subject"))
      if (auto s = trimmed(subject->text_content()); !s.empty()) a.categories.push_back(std::move(s));

  std::vector<Date> dates;
  for (const auto* d : dc->children_named("date"))
    if (auto parsed = parse_date(d->text_content())) dates.push_back(*parsed);
  if (dates.empty()) {
    if (const auto* stamp = header->child("datestamp"))
      if (auto parsed = parse_date(stamp->text_content())) dates.push_back(*parsed);
  }
  if (dates.empty()) throw RecordRejected(fmt::format("{}: no usable version dates", a.arxiv_id));
  std::stable_sort(dates.begin(), dates.end());
  for (std::size_t i = 0; i < dates.size(); ++i)
    a.versions.push_back(VersionInfo{static_cast<int>(i + 1), dates[i]});
  return a;
}

ArticleMetadata parse_oai_record(const RawDocument& doc) {
  if (doc.format != DocFormat::OaiDc)
    throw Error(fmt::format("{}: declared format is not OAI-PMH Dublin Core", doc.locator));
  return parse_oai_record(xml::parse(doc.bytes));
}

// ---------------------------------------------------------------------------
// Rule-driven section extraction

namespace {

bool any_match(const std::vector<Selector>& selectors, std::span<const xml::Node* const> path) {
  return std::any_of(selectors.begin(), selectors.end(),
                     [&](const Selector& s) { return s.matches(path); });
}

class Extractor {
public:
  explicit Extractor(const SectionRules& rules) : rules_(rules) {}

  /// Path from the root to the first element matched by the highest-priority
  /// selector that matches anything; empty when nothing matches.
  std::vector<const xml::Node*> find_first(const xml::Node& root, const std::vector<Selector>& selectors) {
    for (const auto& selector : selectors) {
      path_.assign(1, &root);
      if (search(root, selector)) return path_;
    }
    return {};
  }

  std::string collect(std::vector<const xml::Node*> path) {
    std::string out;
    path_ = std::move(path);
    collect_into(*path_.back(), out);
    return out;
  }

  bool math_dropped() const noexcept { return math_dropped_; }

private:
  bool search(const xml::Node& node, const Selector& selector) {
    if (selector.matches(path_)) return true;
    for (const auto& child : node.children) {
      if (!child.is_element()) continue;
      path_.push_back(&child);
      if (!any_match(rules_.exclude, path_) && search(child, selector)) return true;
      path_.pop_back();
    }
    return false;
  }

  void collect_into(const xml::Node& node, std::string& out) {
    for (const auto& child : node.children) {
      if (child.is_text()) {
        out += child.text;
        continue;
      }
      path_.push_back(&child);
      if (!any_match(rules_.exclude, path_)) {
        if (any_match(rules_.math, path_)) {
          append_math(child, out);
        } else {
          const bool block = any_match(rules_.blocks, path_);
          if (block) out.push_back(' ');
          collect_into(child, out);
          if (block) out.push_back(' ');
        }
      }
      path_.pop_back();
    }
  }

  void append_math(const xml::Node& math, std::string& out) {
    std::string text;
    if (auto alt = math.attribute("alttext")) text = normalize_section_text(*alt);
    if (text.empty()) text = normalize_section_text(math.text_content());
    if (text.empty()) {
      math_dropped_ = true;
      return;
    }
    out += text;
  }

  const SectionRules& rules_;
  std::vector<const xml::Node*> path_;
  bool math_dropped_ = false;
};

constexpr ExtractionFlag missing_flag(Section s) {
  switch (s) {
    case Section::Title: return ExtractionFlag::TitleMissing;
    case Section::Abstract: return ExtractionFlag::AbstractMissing;
    case Section::Body: return ExtractionFlag::BodyMissing;
  }
  return ExtractionFlag::BodyMissing;
}

const std::vector<Selector>& selectors_for(const SectionRules& rules, Section s) {
  switch (s) {
    case Section::Title: return rules.title;
    case Section::Abstract: return rules.abstract;
    case Section::Body: return rules.body;
  }
  return rules.body;
}

}  // namespace

SectionSet extract_with_rules(const xml::Node& root, const SectionRules& rules, SectionSource source) {
  SectionSet out;
  out.source = source;
  Extractor extractor(rules);
  for (Section s : kSections) {
    if (auto path = extractor.find_first(root, selectors_for(rules, s)); !path.empty()) {
      auto text = normalize_section_text(extractor.collect(std::move(path)));
      if (!text.empty()) out.get(s) = std::move(text);
    }
    if (!out.get(s)) out.flags.insert(missing_flag(s));
  }
  if (extractor.math_dropped()) out.flags.insert(ExtractionFlag::MathDropped);
  return out;
}

SectionSet parse_publisher_xml(const RawDocument& doc, const PublisherRules& rules) {
  if (doc.format != DocFormat::PublisherXml)
    throw Error(fmt::format("{}: declared format is not publisher XML", doc.locator));
  const xml::Node root = xml::parse(doc.bytes);
  return extract_with_rules(root, rules.select(root).rules, SectionSource::PublisherXml);
}

SectionSet parse_tei(const RawDocument& doc) {
  if (doc.format != DocFormat::SegmentedTei)
    throw Error(fmt::format("{}: declared format is not TEI", doc.locator));
  const xml::Node root = xml::parse(doc.bytes);
  SectionSet out = extract_with_rules(root, tei_rules(), SectionSource::SegmentedTei);
  if (!out.title || !out.abstract || !out.body) out.flags.insert(ExtractionFlag::SegmenterFailure);
  return out;
}

SectionSet read_plain_sections(const fs::path& dir) {
  SectionSet out;
  out.source = SectionSource::PlainSections;
  for (Section s : kSections) {
    const auto file = dir / fmt::format("{}.txt", to_string(s));
    if (fs::is_regular_file(file)) {
      auto text = normalize_section_text(read_file(file));
      if (!text.empty()) out.get(s) = std::move(text);
    }
    if (!out.get(s)) out.flags.insert(missing_flag(s));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

void write_sections(const fs::path& dir, const SectionSet& sections) {
  fs::create_directories(dir);
  for (Section s : kSections) {
    const auto file = dir / fmt::format("{}.txt", to_string(s));
    if (const auto& text = sections.get(s)) write_file(file, *text);
    else fs::remove(file);
  }
  nlohmann::ordered_json meta{{"source", std::string(to_string(sections.source))},
                              {"flags", nlohmann::ordered_json::array()}};
  for (ExtractionFlag f : sections.flags) meta["flags"].push_back(std::string(to_string(f)));
  write_file(dir / "extraction.json", meta.dump(2) + "\n");
}

SectionSet read_sections(const fs::path& dir) {
  const auto meta_file = dir / "extraction.json";
  if (!fs::is_regular_file(meta_file)) throw MissingArtifact(meta_file.string(), "extract");
  SectionSet out;
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_file(meta_file));
    const auto source = parse_source(meta.at("source").get<std::string>());
    if (!source) throw Error("unknown source");
    out.source = *source;
    for (const auto& f : meta.at("flags"))
      if (auto flag = parse_flag(f.get<std::string>())) out.flags.insert(*flag);
  } catch (const nlohmann::json::exception& e) {
    throw Error(fmt::format("{}: {}", meta_file.string(), e.what()));
  }
  for (Section s : kSections) {
    const auto file = dir / fmt::format("{}.txt", to_string(s));
    if (!fs::is_regular_file(file)) continue;
    auto text = read_file(file);
    if (!trimmed(text).empty()) out.get(s) = std::move(text);
  }
  return out;
}

}  // namespace prepubdiff::extract
