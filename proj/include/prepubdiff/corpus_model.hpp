#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace prepubdiff {

// Calendar dates at day precision. Timestamps are truncated on parse.
using Date = std::chrono::year_month_day;

/// Accepts "YYYY-MM-DD" optionally followed by a time part ("T..." or " ...").
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);
/// Signed number of days from `from` to `to`.
std::int64_t days_between(const Date& from, const Date& to);

/// Lowercases and strips resolver prefixes ("https://doi.org/", "doi:", ...).
/// Returns an empty string when nothing DOI-like remains.
std::string normalize_doi(std::string_view doi);

struct VersionInfo {
  int number = 1;
  Date upload_date{};

  bool operator==(const VersionInfo&) const = default;
};

struct ArticleMetadata {
  std::string arxiv_id;
  std::optional<std::string> doi;
  std::string title_raw;
  std::optional<std::string> abstract_raw;
  std::vector<std::string> categories;
  std::vector<VersionInfo> versions;  // ascending by number

  const VersionInfo& first_version() const { return versions.front(); }
  const VersionInfo& latest_version() const { return versions.back(); }

  bool operator==(const ArticleMetadata&) const = default;
};

enum class PublishedFormat { Xml, Pdf };

struct MatchedPair {
  std::string arxiv_id;
  std::string doi;
  std::vector<VersionInfo> preprint_versions;
  std::optional<std::string> publisher;
  std::optional<Date> publication_date;
  PublishedFormat format = PublishedFormat::Xml;
  std::map<int, std::string> preprint_files;  // version number -> workspace-relative path
  std::string published_file;

  bool operator==(const MatchedPair&) const = default;
};

/// Identifier used for per-pair artifacts; the arXiv id with '/' replaced.
std::string pair_id(std::string_view arxiv_id);

/// A DOI claimed by more than one pre-print; never paired.
struct AmbiguousDoi {
  std::string doi;
  std::vector<std::string> arxiv_ids;

  bool operator==(const AmbiguousDoi&) const = default;
};

struct CorpusCounters {
  std::uint64_t records_harvested = 0;
  std::uint64_t records_with_doi = 0;
  std::uint64_t downloads_attempted = 0;
  std::uint64_t downloads_failed = 0;
  std::uint64_t xml_count = 0;
  std::uint64_t pdf_count = 0;

  bool operator==(const CorpusCounters&) const = default;
};

struct CorpusManifest {
  std::string created;  // ISO-8601 UTC timestamp
  CorpusCounters counters;
  std::vector<ArticleMetadata> articles;
  std::vector<MatchedPair> pairs;
  std::vector<AmbiguousDoi> ambiguous;

  const ArticleMetadata* find_article(std::string_view arxiv_id) const;
  bool operator==(const CorpusManifest&) const = default;
};

inline constexpr int kManifestSchemaVersion = 1;

/// Empty iff every manifest invariant holds. Each entry names the record and rule.
std::vector<std::string> validate_manifest(const CorpusManifest& manifest);

std::string serialize_manifest(const CorpusManifest& manifest);
/// Throws ParseError (with byte offset) on malformed or schema-violating JSON.
CorpusManifest parse_manifest(std::string_view json_text);

/// One article as a single-line JSON object (the manifest's article schema).
std::string serialize_article(const ArticleMetadata& article);
ArticleMetadata parse_article(std::string_view json_text);

CorpusManifest load_manifest(const std::filesystem::path& path);
/// Writes through a temporary file and rename.
void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest);

std::string utc_timestamp_now();

// ---------------------------------------------------------------------------
// Sections and scores

enum class Section { Title, Abstract, Body };
enum class Metric { EditRatio, LengthSimilarity, Sorensen, Jaccard, Cosine };
enum class VersionPolicy { Latest, First };
enum class SectionSource { PublisherXml, SegmentedTei, PlainSections };

enum class ExtractionFlag {
  TitleMissing,
  AbstractMissing,
  BodyMissing,
  SegmenterFailure,
  MathDropped,
};

inline constexpr Section kSections[] = {Section::Title, Section::Abstract, Section::Body};
inline constexpr Metric kMetrics[] = {Metric::EditRatio, Metric::LengthSimilarity,
                                      Metric::Sorensen, Metric::Jaccard, Metric::Cosine};

std::string_view to_string(Section s);
std::string_view to_string(Metric m);
std::string_view to_string(VersionPolicy p);
std::string_view to_string(SectionSource s);
std::string_view to_string(ExtractionFlag f);
std::string_view to_string(PublishedFormat f);

std::optional<Section> parse_section(std::string_view s);
std::optional<Metric> parse_metric(std::string_view s);
std::optional<VersionPolicy> parse_policy(std::string_view s);
std::optional<SectionSource> parse_source(std::string_view s);
std::optional<ExtractionFlag> parse_flag(std::string_view s);

/// Extracted sections of one document instance. Absent sections are nullopt;
/// present sections are never blank.
struct SectionSet {
  std::optional<std::string> title;
  std::optional<std::string> abstract;
  std::optional<std::string> body;
  SectionSource source = SectionSource::PlainSections;
  std::set<ExtractionFlag> flags;

  const std::optional<std::string>& get(Section s) const;
  std::optional<std::string>& get(Section s);
  bool operator==(const SectionSet&) const = default;
};

struct ScoreRecord {
  std::string pair_id;
  Section section = Section::Title;
  Metric metric = Metric::EditRatio;
  double score = 0.0;
  VersionPolicy version_policy = VersionPolicy::Latest;

  bool operator==(const ScoreRecord&) const = default;
};

}  // namespace prepubdiff
