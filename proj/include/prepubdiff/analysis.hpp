#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prepubdiff/corpus_model.hpp"
#include "prepubdiff/section_extraction.hpp"
#include "prepubdiff/text_metrics.hpp"

namespace prepubdiff::analysis {

// ---------------------------------------------------------------------------
// Version selection and scoring

struct VersionChoice {
  int number = 1;
  std::string file;  // workspace-relative locator of that version
};

/// Latest picks the highest version number, First picks version 1. Throws
/// RecordRejected when the pair has no versions or the chosen file is missing.
VersionChoice select_version(const MatchedPair& pair, VersionPolicy policy);

struct CompareOptions {
  VersionPolicy policy = VersionPolicy::Latest;
  extract::NormalizeOptions normalize;
  const metrics::StopwordList* stopwords = nullptr;  // null = built-in English list
  metrics::Stemming stemming = metrics::Stemming::On;
};

struct SkippedSection {
  std::string pair_id;
  Section section = Section::Title;
  std::string reason;

  bool operator==(const SkippedSection&) const = default;
};

struct PairComparison {
  std::vector<ScoreRecord> scores;  // section-major, metric order of kMetrics
  std::vector<SkippedSection> skipped;
  std::vector<std::string> warnings;
};

/// Scores every section present on both sides with all five metrics. A cosine
/// EmptyVectorError drops that one score and adds a warning.
PairComparison compare_pair(std::string_view pair_id, const SectionSet& preprint, const SectionSet& published,
                            const CompareOptions& options = {});

/// Sorts by (pair_id, section, metric) so downstream folds are order-independent.
void sort_scores(std::vector<ScoreRecord>& scores);

// ---------------------------------------------------------------------------
// Histograms

inline constexpr int kBinCount = 10;

/// 1-based bin of a score: bin k covers [1-0.1k, 1.1-0.1k), bin 1 also takes
/// 1.0. Throws Error for scores outside [0, 1] or NaN.
int bin_index(double score);
double bin_lower(int bin);
double bin_upper(int bin);

struct Bin {
  double lower = 0.0;
  double upper = 0.0;
  std::uint64_t count = 0;
  double proportion = 0.0;
};

struct BinnedHistogram {
  Metric metric = Metric::EditRatio;
  Section section = Section::Title;
  VersionPolicy policy = VersionPolicy::Latest;
  std::array<Bin, kBinCount> bins{};
  std::uint64_t total = 0;
};

/// One histogram per metric x section (always the full 15-cell grid, empty
/// cells included) for the given policy. Records of another policy are an error.
std::vector<BinnedHistogram> bin_scores(std::span<const ScoreRecord> scores, VersionPolicy policy);

// ---------------------------------------------------------------------------
// Deltas between two runs

struct DeltaCell {
  Metric metric = Metric::EditRatio;
  Section section = Section::Title;
  int bin = 1;
  std::int64_t count_delta = 0;
  std::optional<double> proportional_delta;  // percent; nullopt = undefined
};

struct DeltaReport {
  std::vector<DeltaCell> cells;
};

/// count delta = new - old; proportional delta = 100 (p_new - p_old) / p_old,
/// undefined when only p_old is zero, 0 when both are. Throws Error naming
/// the cells present in only one run.
DeltaReport delta_report(std::span<const BinnedHistogram> old_run, std::span<const BinnedHistogram> new_run);

/// "%.2f" without negative zero: -9.61, 2.37, 0.00.
std::string format_signed_percent(double value);

// ---------------------------------------------------------------------------
// Publication order

enum class OrderClass { PreprintFirst, PublisherFirst, SameDay };
std::string_view to_string(OrderClass c);

struct OrderStat {
  std::string pair_id;
  OrderClass classification = OrderClass::SameDay;
  std::int64_t day_difference = 0;  // publication date minus pre-print date

  bool operator==(const OrderStat&) const = default;
};

OrderStat classify_order(std::string_view pair_id, const Date& preprint_date, const Date& publication_date);

/// Inclusive upper bounds of all but the last day range, strictly ascending;
/// the last range is open-ended.
struct DayBins {
  std::vector<std::int64_t> upper_bounds{30, 90, 180, 365, 730};

  /// "30,90,180" -> {30, 90, 180}. Throws Error unless non-negative and strictly ascending.
  static DayBins parse(std::string_view csv);
  void validate() const;
  std::size_t size() const noexcept { return upper_bounds.size() + 1; }
  std::size_t index(std::int64_t days) const;
  /// "0-30", "31-90", ..., ">730"
  std::string label(std::size_t i) const;
};

struct OrderHistogram {
  std::vector<std::string> labels;
  std::vector<std::uint64_t> preprint_first;
  std::vector<std::uint64_t> publisher_first;
  std::uint64_t same_day = 0;
  std::uint64_t excluded = 0;  // pairs lacking a date

  std::uint64_t classified() const noexcept;
  std::uint64_t preprint_first_total() const noexcept;
  std::uint64_t publisher_first_total() const noexcept;
  /// Percent of classified pairs (same-day included) that appeared as pre-prints first.
  double preprint_first_percent() const noexcept;
  std::string summary() const;
};

OrderHistogram order_histogram(std::span<const OrderStat> stats, const DayBins& bins, std::uint64_t excluded = 0);

/// Order statistics for every pair carrying a publication date; the pre-print
/// date is that of the version the policy selects. `excluded` receives the
/// number of pairs without a usable date.
std::vector<OrderStat> order_stats(const CorpusManifest& manifest, VersionPolicy policy, std::uint64_t* excluded);

// ---------------------------------------------------------------------------
// Categories

struct CategoryCount {
  std::string category;
  std::uint64_t count = 0;

  bool operator==(const CategoryCount&) const = default;
};

inline constexpr std::string_view kUncategorized = "uncategorized";

/// Counts the first-listed category of each record; descending by count, ties by name.
std::vector<CategoryCount> category_distribution(std::span<const ArticleMetadata> records);

// ---------------------------------------------------------------------------
// CSV

void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> scores);
std::vector<ScoreRecord> read_scores_csv(std::string_view text);

void write_histogram_csv(std::ostream& out, std::span<const BinnedHistogram> histograms);
std::vector<BinnedHistogram> read_histogram_csv(std::string_view text);

void write_delta_csv(std::ostream& out, const DeltaReport& report);
void write_order_csv(std::ostream& out, std::span<const OrderStat> stats);
void write_order_histogram_csv(std::ostream& out, const OrderHistogram& histogram);
void write_categories_csv(std::ostream& out, std::span<const CategoryCount> counts);
void write_skipped_csv(std::ostream& out, std::span<const SkippedSection> skipped);

// ---------------------------------------------------------------------------
// Charts (SVG; layout not stable across versions, the CSVs are)

std::string histogram_svg(const BinnedHistogram& histogram);
std::string delta_svg(const DeltaReport& report, Metric metric);
std::string order_svg(const OrderHistogram& histogram);

}  // namespace prepubdiff::analysis
