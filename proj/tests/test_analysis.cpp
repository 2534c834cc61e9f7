#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "prepubdiff/analysis.hpp"
#include "prepubdiff/error.hpp"
#include "support.hpp"

using namespace prepubdiff;
using namespace prepubdiff::analysis;
using namespace std::chrono;

namespace {

std::vector<ScoreRecord> scores_for(Metric metric, Section section, const std::vector<double>& values,
                                    VersionPolicy policy = VersionPolicy::Latest) {
  std::vector<ScoreRecord> out;
  for (std::size_t i = 0; i < values.size(); ++i)
    out.push_back({"p" + std::to_string(i), section, metric, values[i], policy});
  return out;
}

const BinnedHistogram& find(const std::vector<BinnedHistogram>& hs, Metric m, Section s) {
  for (const auto& h : hs)
    if (h.metric == m && h.section == s) return h;
  throw std::logic_error("no such histogram");
}

Date d(int y, int m, int day) { return year{y} / month{static_cast<unsigned>(m)} / std::chrono::day{static_cast<unsigned>(day)}; }

SectionSet sections(std::optional<std::string> title, std::optional<std::string> abstract,
                    std::optional<std::string> body) {
  SectionSet s;
  s.title = std::move(title);
  s.abstract = std::move(abstract);
  s.body = std::move(body);
  return s;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("bin edges") {
  CHECK(bin_index(1.0) == 1);
  CHECK(bin_index(0.95) == 1);
  CHECK(bin_index(0.9) == 1);
  CHECK(bin_index(0.8999) == 2);
  CHECK(bin_index(0.8) == 2);
  CHECK(bin_index(0.1) == 9);
  CHECK(bin_index(0.0999) == 10);
  CHECK(bin_index(0.0) == 10);
  CHECK_THROWS_AS(bin_index(1.0000001), Error);
  CHECK_THROWS_AS(bin_index(-0.1), Error);
  CHECK_THROWS_AS(bin_index(std::numeric_limits<double>::quiet_NaN()), Error);
  for (int k = 1; k <= kBinCount; ++k) {
    CHECK(bin_index(bin_lower(k)) == k);
    CHECK(bin_upper(k) == doctest::Approx(bin_lower(k) + 0.1));
  }
  // Edges compare exactly: the double just below an edge falls in the lower bin.
  CHECK(bin_index(std::nextafter(0.9, 0.0)) == 2);
  CHECK(bin_index(0.7 + 0.1) == 3);  // 0.7999999999999999
}

TEST_CASE("binning conserves counts and proportions") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    std::vector<double> values(std::uniform_int_distribution<int>(0, 200)(rng));
    for (auto& v : values) v = i % 3 == 0 ? std::round(u(rng) * 10) / 10 : u(rng);
    const auto hs = bin_scores(scores_for(Metric::Jaccard, Section::Body, values), VersionPolicy::Latest);
    REQUIRE(hs.size() == 15);
    const auto& h = find(hs, Metric::Jaccard, Section::Body);
    std::uint64_t total = 0;
    double proportion = 0;
    for (const auto& b : h.bins) {
      total += b.count;
      proportion += b.proportion;
    }
    REQUIRE(total == values.size());
    REQUIRE(h.total == values.size());
    if (!values.empty()) REQUIRE(std::abs(proportion - 1.0) <= 1e-9);
    else REQUIRE(proportion == 0.0);
  }
}

TEST_CASE("binning rejects other policies and keeps empty cells") {
  const auto hs = bin_scores(scores_for(Metric::Cosine, Section::Title, {0.95}), VersionPolicy::Latest);
  CHECK(find(hs, Metric::EditRatio, Section::Abstract).total == 0);
  CHECK(find(hs, Metric::Cosine, Section::Title).bins[0].count == 1);
  CHECK_THROWS_AS(bin_scores(scores_for(Metric::Cosine, Section::Title, {0.5}, VersionPolicy::First),
                             VersionPolicy::Latest),
                  Error);
}

TEST_CASE("proportional delta conventions") {
  auto histo = [](std::uint64_t in_bin, std::uint64_t total) {
    std::vector<double> values;
    for (std::uint64_t i = 0; i < total; ++i) values.push_back(i < in_bin ? 0.95 : 0.05);
    return bin_scores(scores_for(Metric::EditRatio, Section::Body, values), VersionPolicy::Latest);
  };
  const auto old_run = histo(9, 10), new_run = histo(157, 193);
  const auto report = delta_report(old_run, new_run);
  REQUIRE(report.cells.size() == 150);
  const auto cell = [&](Metric m, Section s, int bin) {
    for (const auto& c : report.cells)
      if (c.metric == m && c.section == s && c.bin == bin) return c;
    throw std::logic_error("no such cell");
  };
  const auto top = cell(Metric::EditRatio, Section::Body, 1);
  CHECK(top.count_delta == 148);
  REQUIRE(top.proportional_delta);
  CHECK(*top.proportional_delta == doctest::Approx(100.0 * (157.0 / 193 - 0.9) / 0.9));
  CHECK(format_signed_percent(*top.proportional_delta) == "-9.61");
  const auto empty = cell(Metric::Cosine, Section::Title, 4);
  CHECK(empty.count_delta == 0);
  CHECK(empty.proportional_delta == 0.0);

  const auto appear = delta_report(histo(0, 10), histo(2, 10));
  bool undefined = false;
  for (const auto& c : appear.cells)
    if (c.metric == Metric::EditRatio && c.section == Section::Body && c.bin == 1) undefined = !c.proportional_delta;
  CHECK(undefined);

  CHECK(format_signed_percent(2.3749) == "2.37");
  CHECK(format_signed_percent(-0.001) == "0.00");
  CHECK(format_signed_percent(0.0) == "0.00");
  CHECK(format_signed_percent(-100.0) == "-100.00");
}

TEST_CASE("delta requires matching grids") {
  const auto full = bin_scores({}, VersionPolicy::Latest);
  std::vector<BinnedHistogram> partial(full.begin(), full.begin() + 3);
  CHECK_THROWS_AS(delta_report(full, partial), Error);
}

TEST_CASE("count deltas sum to the change in totals") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    std::vector<double> a(std::uniform_int_distribution<int>(0, 50)(rng)), b(std::uniform_int_distribution<int>(0, 50)(rng));
    for (auto& v : a) v = u(rng);
    for (auto& v : b) v = u(rng);
    const auto report = delta_report(bin_scores(scores_for(Metric::Sorensen, Section::Abstract, a), VersionPolicy::Latest),
                                     bin_scores(scores_for(Metric::Sorensen, Section::Abstract, b), VersionPolicy::Latest));
    std::int64_t sum = 0;
    for (const auto& c : report.cells)
      if (c.metric == Metric::Sorensen && c.section == Section::Abstract) sum += c.count_delta;
    REQUIRE(sum == static_cast<std::int64_t>(b.size()) - static_cast<std::int64_t>(a.size()));
  }
}

TEST_CASE("publication order") {
  CHECK(classify_order("a", d(2017, 1, 1), d(2017, 3, 1)) == OrderStat{"a", OrderClass::PreprintFirst, 59});
  CHECK(classify_order("b", d(2017, 3, 1), d(2017, 1, 1)) == OrderStat{"b", OrderClass::PublisherFirst, -59});
  CHECK(classify_order("c", d(2017, 3, 1), d(2017, 3, 1)) == OrderStat{"c", OrderClass::SameDay, 0});

  DayBins bins;
  CHECK(bins.size() == 6);
  CHECK(bins.label(0) == "0-30");
  CHECK(bins.label(1) == "31-90");
  CHECK(bins.label(5) == ">730");
  CHECK(bins.index(30) == 0);
  CHECK(bins.index(31) == 1);
  CHECK(bins.index(10000) == 5);
  CHECK(DayBins::parse("7, 30,365").upper_bounds == std::vector<std::int64_t>{7, 30, 365});
  CHECK_THROWS_AS(DayBins::parse("30,30"), Error);
  CHECK_THROWS_AS(DayBins::parse("-1,5"), Error);
  CHECK_THROWS_AS(DayBins::parse("a"), Error);

  std::vector<OrderStat> stats;
  for (int i = 0; i < 9; ++i) stats.push_back(classify_order("p", d(2017, 1, 1), sys_days{d(2017, 1, 1)} + days{i * 100 + 1}));
  stats.push_back(classify_order("q", d(2017, 1, 1), d(2016, 12, 1)));
  const auto h = order_histogram(stats, bins, 2);
  CHECK(h.preprint_first_total() == 9);
  CHECK(h.publisher_first_total() == 1);
  CHECK(h.classified() == 10);
  CHECK(h.preprint_first_percent() == 90.0);
  CHECK(h.summary().starts_with("90% of classified pairs (9 of 10) were published in arXiv.org first\n"));
  CHECK(h.summary().find("excluded=2") != std::string::npos);
  CHECK(h.publisher_first[1] == 1);  // 31 days
}

TEST_CASE("order statistics follow the version policy") {
  CorpusManifest m;
  MatchedPair p;
  p.arxiv_id = "x/1";
  p.preprint_versions = {{1, d(2016, 1, 1)}, {2, d(2016, 6, 1)}};
  p.publication_date = d(2016, 3, 1);
  m.pairs.push_back(p);
  p.arxiv_id = "y";
  p.publication_date.reset();
  m.pairs.push_back(p);
  std::uint64_t excluded = 0;
  const auto latest = order_stats(m, VersionPolicy::Latest, &excluded);
  REQUIRE(latest.size() == 1);
  CHECK(latest[0].pair_id == "x_1");
  CHECK(latest[0].classification == OrderClass::PublisherFirst);
  CHECK(excluded == 1);
  const auto first = order_stats(m, VersionPolicy::First, &excluded);
  CHECK(first[0].classification == OrderClass::PreprintFirst);
  CHECK(first[0].day_difference == 60);
}

TEST_CASE("version selection") {
  MatchedPair p;
  p.arxiv_id = "a";
  p.preprint_versions = {{1, d(2016, 1, 1)}, {2, d(2016, 2, 1)}, {3, d(2016, 3, 1)}};
  p.preprint_files = {{1, "preprints/a/v1.tei.xml"}, {3, "preprints/a/v3"}};
  CHECK(select_version(p, VersionPolicy::Latest).number == 3);
  CHECK(select_version(p, VersionPolicy::Latest).file == "preprints/a/v3");
  CHECK(select_version(p, VersionPolicy::First).file == "preprints/a/v1.tei.xml");
  p.preprint_files.erase(1);
  CHECK_THROWS_AS(select_version(p, VersionPolicy::First), RecordRejected);
  p.preprint_versions.clear();
  CHECK_THROWS_AS(select_version(p, VersionPolicy::Latest), RecordRejected);
}

TEST_CASE("pair comparison") {
  const auto pre = sections("Gauge theory", "We study things.", std::nullopt);
  const auto pub = sections("Gauge  theory", std::nullopt, "Body text.");
  const auto r = compare_pair("p", pre, pub);
  CHECK(r.scores.size() == 5);
  for (const auto& s : r.scores) {
    CHECK(s.section == Section::Title);
    CHECK(s.score == 1.0);
  }
  CHECK(r.skipped.size() == 2);
  CHECK(r.skipped[0].section == Section::Abstract);
  CHECK(r.skipped[1].section == Section::Body);

  // Only stopwords: cosine is undefined and dropped with a warning.
  const auto stop = compare_pair("s", sections("the and of", {}, {}), sections("the and", {}, {}));
  CHECK(stop.scores.size() == 4);
  CHECK(stop.warnings.size() == 1);

  CompareOptions punct;
  punct.normalize.punctuation = true;
  const auto dash = compare_pair("d", sections("A \xe2\x80\x94 B", {}, {}), sections("A - B", {}, {}), punct);
  for (const auto& s : dash.scores) CHECK(s.score == 1.0);
}

TEST_CASE("category distribution") {
  std::vector<ArticleMetadata> records(4);
  records[0].categories = {"physics", "math"};
  records[1].categories = {"math"};
  records[2].categories = {"physics"};
  const auto counts = category_distribution(records);
  REQUIRE(counts.size() == 3);
  CHECK(counts[0] == CategoryCount{"physics", 2});
  CHECK(counts[1] == CategoryCount{"math", 1});
  CHECK(counts[2] == CategoryCount{std::string(kUncategorized), 1});
}

TEST_CASE("score and histogram CSV round-trip") {
  std::vector<ScoreRecord> scores{{"a,b", Section::Body, Metric::Cosine, 0.123456789012345, VersionPolicy::First},
                                  {"c", Section::Title, Metric::EditRatio, 1.0, VersionPolicy::First}};
  std::ostringstream out;
  write_scores_csv(out, scores);
  CHECK(out.str().starts_with("pair_id,section,metric,version_policy,score\n\"a,b\",body,cosine,first,0.123456789012\n"));
  const auto back = read_scores_csv(out.str());
  REQUIRE(back.size() == 2);
  CHECK(back[0].pair_id == "a,b");
  CHECK(back[0].score == doctest::Approx(0.123456789012).epsilon(1e-12));

  const auto hs = bin_scores(scores, VersionPolicy::First);
  std::ostringstream hcsv;
  write_histogram_csv(hcsv, hs);
  CHECK(hcsv.str().starts_with("metric,section,version_policy,bin_index,lower,upper,count,proportion\n"));
  const auto again = read_histogram_csv(hcsv.str());
  REQUIRE(again.size() == hs.size());
  for (std::size_t i = 0; i < hs.size(); ++i) {
    CHECK(again[i].total == hs[i].total);
    for (int k = 0; k < kBinCount; ++k) CHECK(again[i].bins[k].count == hs[i].bins[k].count);
  }
  CHECK_THROWS_AS(read_scores_csv("pair_id,section\nx,y\n"), ParseError);
  CHECK_THROWS_AS(read_scores_csv("pair_id,section,metric,version_policy,score\nx,body,cosine,first,2.5\n"), Error);
}

TEST_CASE("other CSV writers") {
  std::ostringstream order, hist, cats, skipped, delta;
  const std::vector<OrderStat> stats{{"a", OrderClass::PreprintFirst, 12}, {"b", OrderClass::SameDay, 0}};
  write_order_csv(order, stats);
  CHECK(order.str() == "pair_id,classification,day_difference\na,preprint_first,12\nb,same_day,0\n");
  write_order_histogram_csv(hist, order_histogram(stats, DayBins::parse("30")));
  CHECK(hist.str() == "day_range,preprint_first,publisher_first\n0-30,1,0\n>30,0,0\n");
  const std::vector<CategoryCount> c{{"math", 3}};
  write_categories_csv(cats, c);
  CHECK(cats.str() == "category,count\nmath,3\n");
  const std::vector<SkippedSection> s{{"a", Section::Abstract, "abstract missing on pre-print"}};
  write_skipped_csv(skipped, s);
  CHECK(skipped.str() == "pair_id,section,reason\na,abstract,abstract missing on pre-print\n");
  const auto hs = bin_scores({}, VersionPolicy::Latest);
  write_delta_csv(delta, delta_report(hs, hs));
  CHECK(delta.str().starts_with("metric,section,bin_index,count_delta,proportional_delta\nedit_ratio,title,1,0,0.00\n"));
}

TEST_CASE("charts are well-formed SVG") {
  const auto hs = bin_scores(scores_for(Metric::Cosine, Section::Title, {0.95, 0.5}), VersionPolicy::Latest);
  for (const auto& svg : {histogram_svg(hs.front()), delta_svg(delta_report(hs, hs), Metric::Cosine),
                          order_svg(order_histogram({}, DayBins{}))}) {
    CHECK(svg.starts_with("<svg"));
    CHECK(svg.ends_with("</svg>\n"));
  }
}

}  // TEST_SUITE
