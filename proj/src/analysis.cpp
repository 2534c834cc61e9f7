#include "prepubdiff/analysis.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <ostream>
#include <set>
#include <tuple>

#include <fmt/format.h>

#include "prepubdiff/error.hpp"
#include "prepubdiff/utf8.hpp"

namespace prepubdiff::analysis {

// ---------------------------------------------------------------------------
// Version selection and scoring

VersionChoice select_version(const MatchedPair& pair, VersionPolicy policy) {
  if (pair.preprint_versions.empty()) throw RecordRejected(fmt::format("pair {}: no pre-print versions", pair.arxiv_id));
  int number = 1;
  if (policy == VersionPolicy::Latest) {
    for (const auto& v : pair.preprint_versions) number = std::max(number, v.number);
  }
  auto it = pair.preprint_files.find(number);
  if (it == pair.preprint_files.end() || it->second.empty())
    throw RecordRejected(fmt::format("pair {}: file for version {} missing", pair.arxiv_id, number));
  return {number, it->second};
}

PairComparison compare_pair(std::string_view pair_id, const SectionSet& preprint, const SectionSet& published,
                            const CompareOptions& options) {
  PairComparison out;
  const auto& stopwords = options.stopwords ? *options.stopwords : metrics::StopwordList::english();
  for (Section section : kSections) {
    const auto& a = preprint.get(section);
    const auto& b = published.get(section);
    if (!a || !b) {
      const char* side = !a && !b ? "both sides" : !a ? "pre-print" : "published";
      out.skipped.push_back({std::string(pair_id), section, fmt::format("{} missing on {}", to_string(section), side)});
      continue;
    }
    const std::string x = extract::normalize_section_text(*a, options.normalize);
    const std::string y = extract::normalize_section_text(*b, options.normalize);
    const std::u32string ux = utf8::decode(x);
    const std::u32string uy = utf8::decode(y);

    auto emit = [&](Metric m, double score) {
      out.scores.push_back({std::string(pair_id), section, m, score, options.policy});
    };
    emit(Metric::EditRatio, metrics::edit_ratio(ux, uy));
    emit(Metric::LengthSimilarity, metrics::length_similarity(ux.size(), uy.size()));
    const auto cx = metrics::char_set(x);
    const auto cy = metrics::char_set(y);
    emit(Metric::Sorensen, metrics::sorensen(cx, cy));
    emit(Metric::Jaccard, metrics::jaccard(cx, cy));
    try {
      emit(Metric::Cosine, metrics::cosine_similarity(metrics::normalize_terms(x, stopwords, options.stemming),
                                                      metrics::normalize_terms(y, stopwords, options.stemming)));
    } catch (const metrics::EmptyVectorError& e) {
      out.warnings.push_back(fmt::format("{} {}: cosine omitted: {}", pair_id, to_string(section), e.what()));
    }
  }
  return out;
}

void sort_scores(std::vector<ScoreRecord>& scores) {
  std::sort(scores.begin(), scores.end(), [](const ScoreRecord& l, const ScoreRecord& r) {
    return std::tie(l.pair_id, l.section, l.metric, l.version_policy) <
           std::tie(r.pair_id, r.section, r.metric, r.version_policy);
  });
}

// ---------------------------------------------------------------------------
// Histograms

int bin_index(double score) {
  if (!(score >= 0.0 && score <= 1.0)) throw Error(fmt::format("score {} outside [0, 1]", score));
  for (int k = 1; k < kBinCount; ++k)
    if (score >= (kBinCount - k) / 10.0) return k;
  return kBinCount;
}

double bin_lower(int bin) { return (kBinCount - bin) / 10.0; }
double bin_upper(int bin) { return (kBinCount + 1 - bin) / 10.0; }

namespace {

std::size_t grid_index(Metric m, Section s) {
  return static_cast<std::size_t>(m) * std::size(kSections) + static_cast<std::size_t>(s);
}

BinnedHistogram empty_histogram(Metric m, Section s, VersionPolicy p) {
  BinnedHistogram h;
  h.metric = m;
  h.section = s;
  h.policy = p;
  for (int k = 1; k <= kBinCount; ++k) {
    h.bins[k - 1].lower = bin_lower(k);
    h.bins[k - 1].upper = bin_upper(k);
  }
  return h;
}

void fill_proportions(BinnedHistogram& h) {
  for (auto& b : h.bins)
    b.proportion = h.total == 0 ? 0.0 : static_cast<double>(b.count) / static_cast<double>(h.total);
}

}  // namespace

std::vector<BinnedHistogram> bin_scores(std::span<const ScoreRecord> scores, VersionPolicy policy) {
  std::vector<BinnedHistogram> grid;
  for (Metric m : kMetrics)
    for (Section s : kSections) grid.push_back(empty_histogram(m, s, policy));
  for (const auto& r : scores) {
    if (r.version_policy != policy)
      throw Error(fmt::format("score for {} has policy {}, expected {}", r.pair_id, to_string(r.version_policy),
                              to_string(policy)));
    auto& h = grid[grid_index(r.metric, r.section)];
    h.bins[bin_index(r.score) - 1].count += 1;
    h.total += 1;
  }
  for (auto& h : grid) fill_proportions(h);
  return grid;
}

// ---------------------------------------------------------------------------
// Deltas

std::string format_signed_percent(double value) {
  std::string s = fmt::format("{:.2f}", value);
  if (s == "-0.00") s = "0.00";
  return s;
}

DeltaReport delta_report(std::span<const BinnedHistogram> old_run, std::span<const BinnedHistogram> new_run) {
  using Key = std::pair<Metric, Section>;
  std::map<Key, const BinnedHistogram*> old_cells, new_cells;
  for (const auto& h : old_run) old_cells[{h.metric, h.section}] = &h;
  for (const auto& h : new_run) new_cells[{h.metric, h.section}] = &h;

  std::vector<std::string> missing;
  for (const auto& [k, h] : old_cells)
    if (!new_cells.contains(k)) missing.push_back(fmt::format("{}/{} missing from new run", to_string(k.first), to_string(k.second)));
  for (const auto& [k, h] : new_cells)
    if (!old_cells.contains(k)) missing.push_back(fmt::format("{}/{} missing from old run", to_string(k.first), to_string(k.second)));
  if (!missing.empty()) throw Error(fmt::format("histogram grids differ: {}", fmt::join(missing, "; ")));

  DeltaReport report;
  for (const auto& [key, o] : old_cells) {
    const BinnedHistogram& n = *new_cells.at(key);
    for (int k = 1; k <= kBinCount; ++k) {
      const auto& ob = o->bins[k - 1];
      const auto& nb = n.bins[k - 1];
      DeltaCell c;
      c.metric = key.first;
      c.section = key.second;
      c.bin = k;
      c.count_delta = static_cast<std::int64_t>(nb.count) - static_cast<std::int64_t>(ob.count);
      const double p_old = o->total == 0 ? 0.0 : static_cast<double>(ob.count) / static_cast<double>(o->total);
      const double p_new = n.total == 0 ? 0.0 : static_cast<double>(nb.count) / static_cast<double>(n.total);
      if (p_old > 0.0) c.proportional_delta = 100.0 * (p_new - p_old) / p_old;
      else if (p_new == 0.0) c.proportional_delta = 0.0;
      report.cells.push_back(c);
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Publication order

std::string_view to_string(OrderClass c) {
  switch (c) {
    case OrderClass::PreprintFirst: return "preprint_first";
    case OrderClass::PublisherFirst: return "publisher_first";
    case OrderClass::SameDay: break;
  }
  return "same_day";
}

OrderStat classify_order(std::string_view pair_id, const Date& preprint_date, const Date& publication_date) {
  const std::int64_t d = days_between(preprint_date, publication_date);
  OrderStat s;
  s.pair_id = std::string(pair_id);
  s.classification = d > 0 ? OrderClass::PreprintFirst : d < 0 ? OrderClass::PublisherFirst : OrderClass::SameDay;
  s.day_difference = d;
  return s;
}

DayBins DayBins::parse(std::string_view csv) {
  DayBins bins;
  bins.upper_bounds.clear();
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    auto comma = csv.find(',', pos);
    auto item = csv.substr(pos, comma == std::string_view::npos ? std::string_view::npos : comma - pos);
    while (!item.empty() && item.front() == ' ') item.remove_prefix(1);
    while (!item.empty() && item.back() == ' ') item.remove_suffix(1);
    std::int64_t v = 0;
    auto [end, ec] = std::from_chars(item.data(), item.data() + item.size(), v);
    if (item.empty() || ec != std::errc{} || end != item.data() + item.size())
      throw Error(fmt::format("day bins: \"{}\" is not an integer", item));
    bins.upper_bounds.push_back(v);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  bins.validate();
  return bins;
}

void DayBins::validate() const {
  if (upper_bounds.empty()) throw Error("day bins: at least one boundary required");
  if (upper_bounds.front() < 0) throw Error("day bins: boundaries must be non-negative");
  for (std::size_t i = 1; i < upper_bounds.size(); ++i)
    if (upper_bounds[i] <= upper_bounds[i - 1]) throw Error("day bins: boundaries must be strictly ascending");
}

std::size_t DayBins::index(std::int64_t days) const {
  for (std::size_t i = 0; i < upper_bounds.size(); ++i)
    if (days <= upper_bounds[i]) return i;
  return upper_bounds.size();
}

std::string DayBins::label(std::size_t i) const {
  if (i == upper_bounds.size()) return fmt::format(">{}", upper_bounds.back());
  const std::int64_t lo = i == 0 ? 0 : upper_bounds[i - 1] + 1;
  return fmt::format("{}-{}", lo, upper_bounds[i]);
}

std::uint64_t OrderHistogram::preprint_first_total() const noexcept {
  std::uint64_t n = 0;
  for (auto c : preprint_first) n += c;
  return n;
}

std::uint64_t OrderHistogram::publisher_first_total() const noexcept {
  std::uint64_t n = 0;
  for (auto c : publisher_first) n += c;
  return n;
}

std::uint64_t OrderHistogram::classified() const noexcept {
  return preprint_first_total() + publisher_first_total() + same_day;
}

double OrderHistogram::preprint_first_percent() const noexcept {
  const auto n = classified();
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(preprint_first_total()) / static_cast<double>(n);
}

std::string OrderHistogram::summary() const {
  std::string pct = fmt::format("{:.1f}", preprint_first_percent());
  if (pct.ends_with(".0")) pct.resize(pct.size() - 2);
  return fmt::format(
      "{}% of classified pairs ({} of {}) were published in arXiv.org first\n"
      "preprint_first={} publisher_first={} same_day={} excluded={}\n"
      "reference values: 90% (latest versions), 95% (first versions)\n",
      pct, preprint_first_total(), classified(), preprint_first_total(), publisher_first_total(), same_day, excluded);
}

OrderHistogram order_histogram(std::span<const OrderStat> stats, const DayBins& bins, std::uint64_t excluded) {
  bins.validate();
  OrderHistogram h;
  for (std::size_t i = 0; i < bins.size(); ++i) h.labels.push_back(bins.label(i));
  h.preprint_first.assign(bins.size(), 0);
  h.publisher_first.assign(bins.size(), 0);
  h.excluded = excluded;
  for (const auto& s : stats) {
    switch (s.classification) {
      case OrderClass::PreprintFirst: ++h.preprint_first[bins.index(s.day_difference)]; break;
      case OrderClass::PublisherFirst: ++h.publisher_first[bins.index(-s.day_difference)]; break;
      case OrderClass::SameDay: ++h.same_day; break;
    }
  }
  return h;
}

std::vector<OrderStat> order_stats(const CorpusManifest& manifest, VersionPolicy policy, std::uint64_t* excluded) {
  std::vector<OrderStat> out;
  std::uint64_t skipped = 0;
  for (const auto& p : manifest.pairs) {
    if (!p.publication_date || p.preprint_versions.empty()) {
      ++skipped;
      continue;
    }
    const auto& v = policy == VersionPolicy::First ? p.preprint_versions.front() : p.preprint_versions.back();
    out.push_back(classify_order(pair_id(p.arxiv_id), v.upload_date, *p.publication_date));
  }
  std::sort(out.begin(), out.end(), [](const OrderStat& a, const OrderStat& b) { return a.pair_id < b.pair_id; });
  if (excluded) *excluded = skipped;
  return out;
}

// ---------------------------------------------------------------------------
// Categories

std::vector<CategoryCount> category_distribution(std::span<const ArticleMetadata> records) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& r : records) ++counts[r.categories.empty() ? std::string(kUncategorized) : r.categories.front()];
  std::vector<CategoryCount> out;
  for (auto& [c, n] : counts) out.push_back({c, n});
  std::stable_sort(out.begin(), out.end(), [](const CategoryCount& a, const CategoryCount& b) { return a.count > b.count; });
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

struct CsvRow {
  std::size_t line = 0;
  std::size_t offset = 0;
  std::vector<std::string> fields;
};

// One record per line; fields may be double-quoted with "" escapes.
std::vector<CsvRow> split_csv(std::string_view text, std::string_view expected_header) {
  std::vector<CsvRow> rows;
  std::size_t pos = 0, line = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    ++line;
    auto nl = text.find('\n', pos);
    auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
    const std::size_t offset = pos;
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!raw.empty() && raw.back() == '\r') raw.remove_suffix(1);
    if (!header_seen) {
      if (raw != expected_header)
        throw ParseError(fmt::format("expected header \"{}\"", expected_header), offset, line, 1);
      header_seen = true;
      continue;
    }
    if (raw.empty()) continue;
    CsvRow row{line, offset, {}};
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      const char c = raw[i];
      if (quoted) {
        if (c != '"') field += c;
        else if (i + 1 < raw.size() && raw[i + 1] == '"') field += '"', ++i;
        else quoted = false;
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        row.fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    if (quoted) throw ParseError("unterminated quoted field", offset + raw.size(), line, raw.size() + 1);
    row.fields.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  if (!header_seen) throw ParseError(fmt::format("empty file, expected header \"{}\"", expected_header), 0, 1, 1);
  return rows;
}

[[noreturn]] void bad_row(const CsvRow& row, const std::string& why) {
  throw ParseError(fmt::format("line {}: {}", row.line, why), row.offset, row.line, 1);
}

template <class T>
T number(const CsvRow& row, std::string_view field, const char* what) {
  T v{};
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || ec != std::errc{} || end != field.data() + field.size())
    bad_row(row, fmt::format("bad {} \"{}\"", what, field));
  return v;
}

constexpr std::string_view kScoresHeader = "pair_id,section,metric,version_policy,score";
constexpr std::string_view kHistogramHeader = "metric,section,version_policy,bin_index,lower,upper,count,proportion";

}  // namespace

void write_scores_csv(std::ostream& out, std::span<const ScoreRecord> scores) {
  out << kScoresHeader << '\n';
  for (const auto& r : scores)
    out << fmt::format("{},{},{},{},{:.12g}\n", csv_field(r.pair_id), to_string(r.section), to_string(r.metric),
                       to_string(r.version_policy), r.score);
}

std::vector<ScoreRecord> read_scores_csv(std::string_view text) {
  std::vector<ScoreRecord> out;
  for (const auto& row : split_csv(text, kScoresHeader)) {
    if (row.fields.size() != 5) bad_row(row, fmt::format("expected 5 fields, found {}", row.fields.size()));
    ScoreRecord r;
    r.pair_id = std::string(row.fields[0]);
    auto section = parse_section(row.fields[1]);
    auto metric = parse_metric(row.fields[2]);
    auto policy = parse_policy(row.fields[3]);
    if (r.pair_id.empty()) bad_row(row, "empty pair_id");
    if (!section) bad_row(row, fmt::format("unknown section \"{}\"", row.fields[1]));
    if (!metric) bad_row(row, fmt::format("unknown metric \"{}\"", row.fields[2]));
    if (!policy) bad_row(row, fmt::format("unknown version policy \"{}\"", row.fields[3]));
    r.section = *section;
    r.metric = *metric;
    r.version_policy = *policy;
    r.score = number<double>(row, row.fields[4], "score");
    if (!(r.score >= 0.0 && r.score <= 1.0)) bad_row(row, fmt::format("score {} outside [0, 1]", row.fields[4]));
    out.push_back(std::move(r));
  }
  return out;
}

void write_histogram_csv(std::ostream& out, std::span<const BinnedHistogram> histograms) {
  out << kHistogramHeader << '\n';
  for (const auto& h : histograms)
    for (int k = 1; k <= kBinCount; ++k) {
      const auto& b = h.bins[k - 1];
      out << fmt::format("{},{},{},{},{:.1f},{:.1f},{},{:.12g}\n", to_string(h.metric), to_string(h.section),
                         to_string(h.policy), k, b.lower, b.upper, b.count, b.proportion);
    }
}

std::vector<BinnedHistogram> read_histogram_csv(std::string_view text) {
  using Key = std::tuple<Metric, Section, VersionPolicy>;
  std::map<Key, BinnedHistogram> grid;
  std::map<Key, std::set<int>> seen;
  for (const auto& row : split_csv(text, kHistogramHeader)) {
    if (row.fields.size() != 8) bad_row(row, fmt::format("expected 8 fields, found {}", row.fields.size()));
    auto metric = parse_metric(row.fields[0]);
    auto section = parse_section(row.fields[1]);
    auto policy = parse_policy(row.fields[2]);
    if (!metric) bad_row(row, fmt::format("unknown metric \"{}\"", row.fields[0]));
    if (!section) bad_row(row, fmt::format("unknown section \"{}\"", row.fields[1]));
    if (!policy) bad_row(row, fmt::format("unknown version policy \"{}\"", row.fields[2]));
    const int k = number<int>(row, row.fields[3], "bin_index");
    if (k < 1 || k > kBinCount) bad_row(row, fmt::format("bin_index {} out of range", k));
    const Key key{*metric, *section, *policy};
    if (!seen[key].insert(k).second) bad_row(row, fmt::format("duplicate bin {}", k));
    auto it = grid.try_emplace(key, empty_histogram(*metric, *section, *policy)).first;
    auto& b = it->second.bins[k - 1];
    b.count = number<std::uint64_t>(row, row.fields[6], "count");
    b.proportion = number<double>(row, row.fields[7], "proportion");
    it->second.total += b.count;
  }
  std::vector<BinnedHistogram> out;
  for (auto& [key, h] : grid) {
    if (seen[key].size() != kBinCount)
      throw ParseError(fmt::format("{}/{}/{}: expected {} bins, found {}", to_string(h.metric), to_string(h.section),
                                   to_string(h.policy), kBinCount, seen[key].size()),
                       0);
    out.push_back(h);
  }
  return out;
}

void write_delta_csv(std::ostream& out, const DeltaReport& report) {
  out << "metric,section,bin_index,count_delta,proportional_delta\n";
  for (const auto& c : report.cells)
    out << fmt::format("{},{},{},{},{}\n", to_string(c.metric), to_string(c.section), c.bin, c.count_delta,
                       c.proportional_delta ? format_signed_percent(*c.proportional_delta) : std::string{});
}

void write_order_csv(std::ostream& out, std::span<const OrderStat> stats) {
  out << "pair_id,classification,day_difference\n";
  for (const auto& s : stats) out << fmt::format("{},{},{}\n", csv_field(s.pair_id), to_string(s.classification), s.day_difference);
}

void write_order_histogram_csv(std::ostream& out, const OrderHistogram& h) {
  out << "day_range,preprint_first,publisher_first\n";
  for (std::size_t i = 0; i < h.labels.size(); ++i)
    out << fmt::format("{},{},{}\n", h.labels[i], h.preprint_first[i], h.publisher_first[i]);
}

void write_categories_csv(std::ostream& out, std::span<const CategoryCount> counts) {
  out << "category,count\n";
  for (const auto& c : counts) out << fmt::format("{},{}\n", csv_field(c.category), c.count);
}

void write_skipped_csv(std::ostream& out, std::span<const SkippedSection> skipped) {
  out << "pair_id,section,reason\n";
  for (const auto& s : skipped)
    out << fmt::format("{},{},{}\n", csv_field(s.pair_id), to_string(s.section), csv_field(s.reason));
}

}  // namespace prepubdiff::analysis
