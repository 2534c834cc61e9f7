#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prepubdiff/corpus_model.hpp"
#include "prepubdiff/xml_tree.hpp"

namespace prepubdiff::extract {

/// Input families. The declared format is fixed at ingestion; parsers never
/// guess across families. Pdf documents are not parsed here: they go to an
/// external segmenter whose TEI output is parsed instead.
enum class DocFormat { OaiDc, PublisherXml, SegmentedTei, PlainSections, Pdf };

struct RawDocument {
  std::string bytes;
  DocFormat format = DocFormat::PublisherXml;
  std::string locator;
};

struct NormalizeOptions {
  /// Map dashes, typographic quotes and ligatures to ASCII.
  bool punctuation = false;
};

/// Collapses whitespace runs to one space and trims; optionally normalizes
/// punctuation first. Idempotent.
std::string normalize_section_text(std::string_view text, const NormalizeOptions& options = {});

// ---------------------------------------------------------------------------
// Rule tables

/// One element test per step, steps joined by '/', matched against the element
/// and its direct ancestors: "title-group/article-title",
/// "div[@type=references]". A prefixed name ("ce:title") matches the qualified
/// name; an unprefixed one matches the local name; "*" matches any element.
class Selector {
public:
  static Selector parse(std::string_view text);
  /// `path` runs from the document root to the element being tested.
  bool matches(std::span<const xml::Node* const> path) const;
  const std::string& text() const noexcept { return text_; }

private:
  struct Step {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attributes;
  };
  std::vector<Step> steps_;
  std::string text_;
};

struct SectionRules {
  std::vector<Selector> title;     // first selector with a match wins
  std::vector<Selector> abstract;
  std::vector<Selector> body;
  std::vector<Selector> exclude;   // subtrees never selected nor collected
  std::vector<Selector> blocks;    // elements whose boundaries separate words
  std::vector<Selector> math;      // replaced by alttext or text content, else dropped
};

struct Profile {
  std::string name;
  std::vector<std::string> roots;  // root element names this profile claims; "*" = fallback
  SectionRules rules;
};

/// Publisher XML recognition table. Built-in profiles cover JATS and the
/// Elsevier full-text API; more can be loaded from JSON without code changes.
class PublisherRules {
public:
  static const PublisherRules& builtin();
  /// {"profiles": [{"name", "roots", "title", "abstract", "body", "exclude", "blocks", "math"}]}
  static PublisherRules from_json(std::string_view json_text);
  static PublisherRules load(const std::filesystem::path& path);

  /// Profiles from `other` take precedence over the current ones.
  void prepend(const PublisherRules& other);
  const Profile& select(const xml::Node& root) const;
  const std::vector<Profile>& profiles() const noexcept { return profiles_; }

private:
  std::vector<Profile> profiles_;
};

/// Rules for TEI as emitted by scholarly PDF segmenters.
const SectionRules& tei_rules();

// ---------------------------------------------------------------------------
// Parsers

/// Parses one OAI-PMH record (a <record> element, possibly wrapped in a
/// response envelope) carrying oai_dc metadata. Throws ParseError on malformed
/// XML and RecordRejected for deleted records or records without identifier.
ArticleMetadata parse_oai_record(const RawDocument& doc);
ArticleMetadata parse_oai_record(const xml::Node& record);

/// Strips "oai:<repository>:" from an OAI identifier.
std::string arxiv_id_from_oai_identifier(std::string_view identifier);

SectionSet parse_publisher_xml(const RawDocument& doc,
                               const PublisherRules& rules = PublisherRules::builtin());
SectionSet parse_tei(const RawDocument& doc);

/// Reads {dir}/title.txt, abstract.txt and body.txt; missing or blank files
/// are absent sections.
SectionSet read_plain_sections(const std::filesystem::path& dir);

/// Applies a rule set to a parsed tree.
SectionSet extract_with_rules(const xml::Node& root, const SectionRules& rules, SectionSource source);

// ---------------------------------------------------------------------------
// Persistence: {dir}/{title,abstract,body}.txt plus {dir}/extraction.json

void write_sections(const std::filesystem::path& dir, const SectionSet& sections);
SectionSet read_sections(const std::filesystem::path& dir);

}  // namespace prepubdiff::extract
