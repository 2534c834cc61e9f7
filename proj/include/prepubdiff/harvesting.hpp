#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "prepubdiff/corpus_model.hpp"
#include "prepubdiff/http.hpp"
#include "prepubdiff/section_extraction.hpp"

namespace prepubdiff::harvest {

inline constexpr std::string_view kDefaultOaiEndpoint = "https://export.arxiv.org/oai2";
inline constexpr std::string_view kDefaultRegistryEndpoint = "https://api.crossref.org";

// ---------------------------------------------------------------------------
// OAI-PMH

struct HarvestCheckpoint {
  std::string endpoint;
  std::optional<std::string> from;
  std::optional<std::string> set;
  std::optional<std::string> resumption_token;  // next page to request
  std::uint64_t records_received = 0;
  std::uint64_t pages = 0;
  bool completed = false;

  bool operator==(const HarvestCheckpoint&) const = default;
};

std::string serialize_checkpoint(const HarvestCheckpoint& checkpoint);
HarvestCheckpoint parse_checkpoint(std::string_view json_text);
std::optional<HarvestCheckpoint> load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const std::filesystem::path& path, const HarvestCheckpoint& checkpoint);

struct SkippedRecord {
  std::string identifier;  // may be empty when the header itself is unusable
  std::string reason;
};

struct OaiPage {
  std::vector<ArticleMetadata> records;
  std::vector<SkippedRecord> skipped;
  std::optional<std::string> resumption_token;  // absent or empty token ends the list
};

/// Parses one ListRecords response. An OAI "noRecordsMatch" error is an empty
/// final page; any other OAI error throws Error. Malformed records are skipped.
OaiPage parse_list_records(std::string_view xml_text);

struct HarvestOptions {
  std::string endpoint{kDefaultOaiEndpoint};
  std::optional<std::string> from;  // YYYY-MM-DD
  std::optional<std::string> set;
  std::optional<std::uint64_t> max_pages;  // stop early, leaving a resumable checkpoint
};

class OaiHarvester {
public:
  using RecordSink = std::function<void(const ArticleMetadata&)>;
  using CheckpointSink = std::function<void(const HarvestCheckpoint&)>;
  using SkipSink = std::function<void(const SkippedRecord&)>;

  explicit OaiHarvester(net::PoliteClient& client) : client_(client) {}

  /// Requests pages until the token runs out or max_pages is reached. Records
  /// of a page are delivered before that page's checkpoint. When `resume` is
  /// given its token (and endpoint) take over from the options. HTTP failure
  /// propagates as net::HttpFailure after the last good checkpoint.
  HarvestCheckpoint run(const HarvestOptions& options, const std::optional<HarvestCheckpoint>& resume,
                        const RecordSink& on_record, const CheckpointSink& on_checkpoint,
                        const SkipSink& on_skip = {});

  /// Identify verb; returns the repository name.
  std::string identify(const std::string& endpoint);

private:
  net::PoliteClient& client_;
};

std::string list_records_url(const HarvestOptions& options, const std::optional<std::string>& token);

// ---------------------------------------------------------------------------
// DOI filter

struct DoiPartition {
  std::vector<ArticleMetadata> with_doi;
  std::vector<ArticleMetadata> without_doi;

  std::size_t total() const noexcept { return with_doi.size() + without_doi.size(); }
  /// Percentage of records carrying a DOI; 0 for no records.
  double percent_with_doi() const noexcept;
  /// "452,017 of 1,015,440 article records (44.5%) contained a DOI"
  std::string summary() const;
};

DoiPartition filter_with_doi(std::vector<ArticleMetadata> records);

/// "1,015,440"
std::string group_thousands(std::uint64_t n);
/// One decimal, trailing ".0" dropped: 44.5 -> "44.5", 90.0 -> "90".
std::string format_percent(double percent);

// ---------------------------------------------------------------------------
// DOI registry

enum class ContentHint { Xml, Pdf, Unknown };
std::string_view to_string(ContentHint hint);

struct FulltextLink {
  std::string doi;
  std::string url;
  ContentHint hint = ContentHint::Unknown;
  std::optional<std::string> license;

  bool operator==(const FulltextLink&) const = default;
};

struct RegistryLink {
  std::string url;
  std::string content_type;
  std::string intended_application;
};

struct WorkRecord {
  std::string doi;
  std::optional<std::string> publisher;
  std::optional<Date> publication_date;
  bool has_print_and_online = false;  // both dates advertised; `issued` was used
  std::optional<std::string> license;
  std::vector<RegistryLink> links;
};

/// Reads the "message" object of a works/{doi} response. Throws ParseError.
WorkRecord parse_work_json(std::string_view json_text, std::string_view doi);

/// First absolute link whose intended application is text mining.
std::optional<FulltextLink> select_fulltext_link(const WorkRecord& work);

ContentHint content_hint_from_media_type(std::string_view media_type);

class RegistryClient {
public:
  RegistryClient(net::PoliteClient& client, std::string base_url = std::string(kDefaultRegistryEndpoint))
      : client_(client), base_(std::move(base_url)) {}

  /// nullopt when the registry does not know the DOI.
  std::optional<WorkRecord> work(const std::string& doi);
  std::optional<FulltextLink> resolve_fulltext(const std::string& doi);

private:
  net::PoliteClient& client_;
  std::string base_;
};

// ---------------------------------------------------------------------------
// Downloads

enum class PayloadKind { Xml, Pdf, Unknown };

/// Media type first, then magic bytes; magic bytes win on disagreement and a
/// warning is appended.
PayloadKind classify_payload(std::string_view media_type, std::string_view bytes,
                             std::vector<std::string>* warnings = nullptr);

struct DownloadOutcome {
  std::string doi;
  std::optional<extract::RawDocument> document;  // PublisherXml or Pdf
  std::string failure;                           // set when document is absent
  std::vector<std::string> warnings;

  bool ok() const noexcept { return document.has_value(); }
};

DownloadOutcome download_fulltext(net::PoliteClient& client, const FulltextLink& link);

// ---------------------------------------------------------------------------
// Pairing

/// The result of one published-side download, keyed by DOI.
struct DownloadRecord {
  std::string doi;
  bool succeeded = false;
  PublishedFormat format = PublishedFormat::Xml;
  std::string published_file;
  std::string failure;
};

/// DOIs claimed by more than one pre-print, sorted by DOI.
std::vector<AmbiguousDoi> find_ambiguous_dois(const std::vector<ArticleMetadata>& articles);

struct PairingResult {
  std::vector<MatchedPair> pairs;       // sorted by DOI
  std::vector<AmbiguousDoi> ambiguous;  // excluded from pairs and counters
  std::uint64_t attempted = 0;
  std::uint64_t failed = 0;
  std::uint64_t xml = 0;
  std::uint64_t pdf = 0;
};

/// Pure function of its inputs: the order of `downloads` does not matter.
/// Downloads for DOIs no article carries are ignored.
PairingResult build_pairs(const std::vector<ArticleMetadata>& articles, const std::vector<DownloadRecord>& downloads,
                          const std::map<std::string, WorkRecord>& works);

}  // namespace prepubdiff::harvest
