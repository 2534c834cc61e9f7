// Acceptance runner: one PASS/FAIL line per criterion, non-zero exit on any FAIL.
// Usage: acceptance <fixtures-dir>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <random>
#include <regex>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <fmt/format.h>
#include <nlohmann/json.hpp>

#include "prepubdiff/analysis.hpp"
#include "prepubdiff/harvesting.hpp"
#include "prepubdiff/http.hpp"
#include "prepubdiff/pipeline.hpp"
#include "prepubdiff/section_extraction.hpp"
#include "prepubdiff/text_metrics.hpp"
#include "prepubdiff/utf8.hpp"
#include "prepubdiff/xml_tree.hpp"

using namespace prepubdiff;
using namespace std::chrono_literals;
namespace fs = std::filesystem;

namespace {

fs::path g_fixtures;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

class TempDir {
public:
  TempDir() {
    static int counter = 0;
    path_ = fs::temp_directory_path() / fmt::format("prepubdiff-acceptance-{}-{}", ::getpid(), counter++);
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

private:
  fs::path path_;
};

// ---------------------------------------------------------------------------
// Independent oracles

std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::size_t> prev(b.size() + 1), cur(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

std::u32string random_text(std::mt19937_64& rng, std::size_t max_len, std::u32string_view alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
  std::u32string s(len(rng), U' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

constexpr std::u32string_view kAlphabet = U"abcdefgh ijk—é∂üΩ";

long naive_day_number(int y, int m, int d) {
  auto leap = [](int year) { return (year % 4 == 0 && year % 100 != 0) || year % 400 == 0; };
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  long n = 0;
  for (int year = 1; year < y; ++year) n += leap(year) ? 366 : 365;
  for (int month = 1; month < m; ++month) n += kDays[month - 1] + (month == 2 && leap(y) ? 1 : 0);
  return n + d - 1;
}

long day_number(const std::string& iso) {
  return naive_day_number(std::stoi(iso.substr(0, 4)), std::stoi(iso.substr(5, 2)), std::stoi(iso.substr(8, 2)));
}

// ---------------------------------------------------------------------------
// Pipeline driving

int cli_run(const fs::path& ws, const fs::path& replay, std::vector<std::string> args) {
  std::vector<std::string> all{"--workspace", ws.string(), "--replay", replay.string()};
  all.insert(all.end(), args.begin(), args.end());
  std::ostringstream out, err;
  return cli::run(all, out, err);
}

/// Runs a fixture corpus end to end. Partial stages (exit 1) are tolerated;
/// returns the first fatal stage, or an empty string.
std::string run_corpus(const fs::path& ws, const std::string& corpus, int workers, bool both_policies) {
  const fs::path root = g_fixtures / corpus;
  fs::create_directories(ws);
  fs::copy_file(root / "config.json", ws / "config.json", fs::copy_options::overwrite_existing);
  const fs::path replay = root / "replay";
  const std::string w = std::to_string(workers);
  auto stage = [&](std::vector<std::string> args) -> bool {
    args.insert(args.begin(), {"--workers", w});
    return cli_run(ws, replay, args) <= 1;
  };
  if (!stage({"harvest"})) return "harvest";
  if (!stage({"match"})) return "match";
  if (!stage({"fetch"})) return "fetch";
  if (fs::is_directory(root / "segmented"))
    for (const auto& e : fs::directory_iterator(root / "segmented"))
      fs::copy_file(e.path(), ws / "published" / e.path().filename(), fs::copy_options::overwrite_existing);
  if (!stage({"import-preprints", "--from", (root / "preprints").string()})) return "import-preprints";
  if (!stage({"extract"})) return "extract";
  for (const char* policy : {"latest", "first"}) {
    if (!both_policies && std::string_view(policy) == "first") break;
    if (!stage({"--policy", policy, "compare"})) return fmt::format("compare {}", policy);
    if (!stage({"--policy", policy, "report"})) return fmt::format("report {}", policy);
  }
  if (both_policies && !stage({"delta"})) return "delta";
  if (both_policies && !stage({"--policy", "latest", "order"})) return "order";
  return {};
}

// ---------------------------------------------------------------------------
// Criteria

Outcome criterion1() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1);
  for (int i = 0; i < 10'000 && o.pass; ++i) {
    const auto a = random_text(rng, 64, kAlphabet), b = random_text(rng, 64, kAlphabet);
    o.require(metrics::levenshtein_distance(a, b) == dp_levenshtein(a, b), fmt::format("levenshtein pair {}", i));
  }
  for (int i = 0; i < 10'000 && o.pass; ++i) {
    const auto a = random_text(rng, 64, kAlphabet), b = random_text(rng, 64, kAlphabet);
    const std::set<char32_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::vector<char32_t> inter, uni;
    std::set_intersection(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(inter));
    std::set_union(sa.begin(), sa.end(), sb.begin(), sb.end(), std::back_inserter(uni));
    const double s = sa.size() + sb.size() == 0 ? 1.0 : 2.0 * inter.size() / double(sa.size() + sb.size());
    const double j = uni.empty() ? 1.0 : inter.size() / double(uni.size());
    const auto a8 = utf8::encode(a), b8 = utf8::encode(b);
    o.require(std::abs(metrics::sorensen(a8, b8) - s) <= 1e-12, fmt::format("sorensen pair {}", i));
    o.require(std::abs(metrics::jaccard(a8, b8) - j) <= 1e-12, fmt::format("jaccard pair {}", i));
  }
  const double c = metrics::cosine_similarity({{"cat", 2}, {"dog", 1}}, {{"cat", 1}, {"dog", 2}});
  o.require(std::abs(c - 0.8) <= 1e-12, fmt::format("cosine {}", c));
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 30.0, fmt::format("runtime {:.2f}s", elapsed));
  if (o.pass) o.detail = fmt::format("20000 oracle pairs, cosine={:.15f}, {:.2f}s", c, elapsed);
  return o;
}

Outcome criterion2() {
  Outcome o;
  std::mt19937_64 rng(2);
  constexpr int kCases = 1000;
  for (int i = 0; i < kCases && o.pass; ++i) {
    const auto a = utf8::encode(random_text(rng, 60, kAlphabet)), b = utf8::encode(random_text(rng, 60, kAlphabet));
    using F = double (*)(std::string_view, std::string_view);
    for (F f : {static_cast<F>(metrics::edit_ratio), static_cast<F>(metrics::length_similarity),
                static_cast<F>(metrics::sorensen), static_cast<F>(metrics::jaccard)}) {
      const double v = f(a, b);
      o.require(v >= 0.0 && v <= 1.0, fmt::format("range case {}", i));
      o.require(v == f(b, a), fmt::format("symmetry case {}", i));
      o.require(f(a, a) == 1.0, fmt::format("identity case {}", i));
    }
    const double j = metrics::jaccard(a, b);
    o.require(std::abs(metrics::sorensen(a, b) - 2 * j / (1 + j)) <= 1e-12, fmt::format("S=2J/(1+J) case {}", i));

    metrics::TermVector u, v;
    std::uniform_int_distribution<int> count(1, 9), term(0, 15);
    for (int t = 0; t < 6; ++t) u[fmt::format("t{}", term(rng))] = count(rng);
    for (int t = 0; t < 6; ++t) v[fmt::format("t{}", term(rng))] = count(rng);
    const double cs = metrics::cosine_similarity(u, v);
    o.require(cs >= 0.0 && cs <= 1.0 + 1e-12, fmt::format("cosine range case {}", i));
    metrics::TermVector pu, pv, su;
    for (const auto& [k, n] : u) pu["p" + k] = n, su[k] = n * 3;
    for (const auto& [k, n] : v) pv["p" + k] = n;
    o.require(std::abs(metrics::cosine_similarity(pu, pv) - cs) <= 1e-12, fmt::format("cosine permutation case {}", i));
    o.require(std::abs(metrics::cosine_similarity(su, v) - cs) <= 1e-12, fmt::format("cosine scaling case {}", i));

    const auto x = random_text(rng, 40, U"abcdef");
    auto y = x;
    for (auto& ch : y) ch += 100;
    o.require(metrics::edit_ratio(x, x) == 1.0, fmt::format("edit ratio identity case {}", i));
    if (!x.empty()) o.require(metrics::edit_ratio(x, y) == 0.0, fmt::format("edit ratio disjoint case {}", i));
    const std::size_t n = static_cast<std::size_t>(i) + 1;
    o.require(metrics::length_similarity(n, 2 * n) == 0.5, fmt::format("length n/2n n={}", n));
  }
  if (o.pass) o.detail = fmt::format("{} cases per property", kCases);
  return o;
}

Outcome criterion3() {
  Outcome o;
  o.require(analysis::bin_index(1.0) == 1, "1.0 not in bin 1");
  o.require(analysis::bin_index(0.9) == 1, "0.9 not in bin 1");
  o.require(analysis::bin_index(0.8999) == 2, "0.8999 not in bin 2");
  o.require(analysis::bin_index(0.0) == 10, "0.0 not in bin 10");
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  std::uniform_int_distribution<int> size(0, 300);
  for (int i = 0; i < 1000 && o.pass; ++i) {
    std::vector<ScoreRecord> scores;
    const int n = size(rng);
    for (int k = 0; k < n; ++k)
      scores.push_back({fmt::format("p{}", k), kSections[k % 3], kMetrics[k % 5], k % 7 == 0 ? 1.0 : score(rng),
                        VersionPolicy::Latest});
    for (const auto& h : analysis::bin_scores(scores, VersionPolicy::Latest)) {
      std::uint64_t total = 0;
      double proportion = 0.0;
      for (const auto& b : h.bins) total += b.count, proportion += b.proportion;
      o.require(total == h.total, fmt::format("count sum, set {}", i));
      if (h.total) o.require(std::abs(proportion - 1.0) <= 1e-9, fmt::format("proportion sum {} set {}", proportion, i));
    }
  }
  if (o.pass) o.detail = "edges correct; conservation on 1000 random sets";
  return o;
}

Outcome criterion4() {
  Outcome o;
  TempDir dir;
  const auto t0 = std::chrono::steady_clock::now();
  const auto failed = run_corpus(dir.path() / "ws", "identity20", 4, false);
  const double elapsed = seconds_since(t0);
  o.require(failed.empty(), "stage failed: " + failed);
  if (!o.pass) return o;
  const auto histograms =
      analysis::read_histogram_csv(slurp(dir.path() / "ws" / "runs" / "latest" / "histogram.csv"));
  o.require(histograms.size() == 15, fmt::format("{} histograms", histograms.size()));
  for (const auto& h : histograms) {
    o.require(h.total == 20, fmt::format("{}/{} total {}", to_string(h.metric), to_string(h.section), h.total));
    o.require(h.bins[0].count == h.total,
              fmt::format("{}/{} bin 1 holds {} of {}", to_string(h.metric), to_string(h.section), h.bins[0].count, h.total));
  }
  o.require(elapsed < 10.0, fmt::format("pipeline took {:.2f}s", elapsed));
  if (o.pass) o.detail = fmt::format("15 histograms x 20 scores all in bin 1, pipeline {:.2f}s", elapsed);
  return o;
}

Outcome criterion5() {
  Outcome o;
  const fs::path root = g_fixtures / "perturbation";
  std::map<std::tuple<std::string, std::string, std::string>, double> got;
  for (const char* pair : {"body10", "emdash"}) {
    const auto pre = extract::read_plain_sections(root / pair / "preprint");
    const auto pub = extract::read_plain_sections(root / pair / "published");
    const auto cmp = analysis::compare_pair(pair, pre, pub, {});
    for (const auto& r : cmp.scores)
      got[{r.pair_id, std::string(to_string(r.section)), std::string(to_string(r.metric))}] = r.score;
  }
  std::istringstream csv(slurp(root / "expected_scores.csv"));
  std::string line;
  std::getline(csv, line);
  std::size_t checked = 0;
  while (std::getline(csv, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    const auto it = got.find({f[0], f[1], f[2]});
    o.require(it != got.end(), "no score for " + line);
    if (it == got.end()) continue;
    const double expected = std::stod(f[3]);
    o.require(std::abs(it->second - expected) <= 1e-9, fmt::format("{}: got {:.17g}", line, it->second));
    ++checked;
  }
  const auto score = [&](const char* metric) { return got[{"emdash", "title", metric}]; };
  o.require(score("jaccard") < score("sorensen"), "em-dash jaccard not below sorensen");
  o.require(score("jaccard") < score("edit_ratio"), "em-dash jaccard not below edit ratio");
  if (o.pass)
    o.detail = fmt::format("{} scores within 1e-9; em-dash title J={:.4f} < S={:.4f}, J < edit={:.4f}", checked,
                           score("jaccard"), score("sorensen"), score("edit_ratio"));
  return o;
}

Outcome criterion6() {
  Outcome o;
  const auto ex = analysis::format_signed_percent(100.0 * (157.0 / 193 - 9.0 / 10) / (9.0 / 10));
  o.require(ex == "-9.61", "formatting gives " + ex);

  TempDir dir;
  const fs::path ws = dir.path() / "ws";
  const auto failed = run_corpus(ws, "corpus20", 4, true);
  o.require(failed.empty(), "stage failed: " + failed);
  if (!o.pass) return o;
  const auto old_run = analysis::read_histogram_csv(slurp(ws / "runs" / "latest" / "histogram.csv"));
  const auto new_run = analysis::read_histogram_csv(slurp(ws / "runs" / "first" / "histogram.csv"));
  std::map<std::string, std::int64_t> expected_sum;
  std::map<std::tuple<std::string, std::string, int>, std::pair<std::uint64_t, std::uint64_t>> counts;  // old, new
  for (const auto& h : old_run) {
    expected_sum[std::string(to_string(h.metric))] -= static_cast<std::int64_t>(h.total);
    for (int b = 0; b < 10; ++b) counts[{std::string(to_string(h.metric)), std::string(to_string(h.section)), b + 1}].first = h.bins[b].count;
  }
  for (const auto& h : new_run) {
    expected_sum[std::string(to_string(h.metric))] += static_cast<std::int64_t>(h.total);
    for (int b = 0; b < 10; ++b) counts[{std::string(to_string(h.metric)), std::string(to_string(h.section)), b + 1}].second = h.bins[b].count;
  }

  std::istringstream csv(slurp(ws / "runs" / "delta.csv"));
  std::string line;
  std::getline(csv, line);
  o.require(line == "metric,section,bin_index,count_delta,proportional_delta", "header " + line);
  const std::regex percent(R"(^-?\d+\.\d\d$)");
  std::map<std::string, std::int64_t> sum;
  std::size_t cells = 0, empty_cells = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() == 4) f.emplace_back();
    o.require(f.size() == 5, "malformed row " + line);
    if (f.size() != 5) continue;
    ++cells;
    sum[f[0]] += std::stoll(f[3]);
    const auto [old_count, new_count] = counts[{f[0], f[1], std::stoi(f[2])}];
    o.require(std::stoll(f[3]) == static_cast<std::int64_t>(new_count) - static_cast<std::int64_t>(old_count),
              "count delta " + line);
    if (old_count == 0 && new_count == 0) {
      ++empty_cells;
      o.require(f[4] == "0.00", "empty-empty cell " + line);
    } else if (old_count == 0) {
      o.require(f[4].empty(), "undefined cell not blank " + line);
    } else {
      o.require(std::regex_match(f[4], percent), "format " + line);
    }
  }
  o.require(cells == 150, fmt::format("{} cells", cells));
  for (const auto& [metric, expected] : expected_sum)
    o.require(sum[metric] == expected, fmt::format("{} count deltas sum {} != {}", metric, sum[metric], expected));
  if (o.pass)
    o.detail = fmt::format("{} cells, count deltas conserve totals, {} empty-empty cells are 0.00, -9.61 formatting", cells,
                           empty_cells);
  return o;
}

Outcome criterion7() {
  Outcome o;
  TempDir dir;
  const fs::path manifest = g_fixtures / "order10" / "manifest.json";
  fs::copy_file(manifest, dir.path() / "manifest.json");
  std::ostringstream out, err;
  const int code = cli::run({"--workspace", dir.path().string(), "order"}, out, err);
  o.require(code == 0, "order exit " + std::to_string(code) + " " + err.str());
  if (!o.pass) return o;
  o.require(out.str().starts_with("90% of classified pairs"), "summary: " + out.str());

  const auto j = nlohmann::json::parse(slurp(manifest));
  std::map<std::string, std::string> latest_date;
  for (const auto& a : j["articles"]) {
    int best = 0;
    for (const auto& v : a["versions"])
      if (v["n"].get<int>() > best) {
        best = v["n"].get<int>();
        latest_date[a["arxiv_id"].get<std::string>()] = v["date"].get<std::string>();
      }
  }
  std::map<std::string, long> oracle;
  for (const auto& p : j["pairs"]) {
    const auto id = p["arxiv_id"].get<std::string>();
    oracle[id] = day_number(p["pub_date"].get<std::string>()) - day_number(latest_date.at(id));
  }
  std::istringstream csv(slurp(dir.path() / "runs" / "latest" / "order.csv"));
  std::string line;
  std::getline(csv, line);
  std::size_t rows = 0, preprint_first = 0;
  while (std::getline(csv, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    ++rows;
    const long days = std::stol(f[2]);
    o.require(oracle.count(f[0]) && oracle[f[0]] == days &&
                  f[1] == (days > 0 ? "preprint_first" : days < 0 ? "publisher_first" : "same_day"),
              fmt::format("{}: {} {} vs oracle {}", f[0], f[1], days, oracle[f[0]]));
    preprint_first += f[1] == "preprint_first";
  }
  o.require(rows == oracle.size(), fmt::format("{} rows", rows));
  o.require(preprint_first * 10 == rows * 9, fmt::format("{} of {} preprint-first", preprint_first, rows));
  if (o.pass) o.detail = fmt::format("{} of {} preprint-first (90%), day differences match the calendar oracle", preprint_first, rows);
  return o;
}

/// Replays recordings, advancing the simulated clock per request and logging request spans.
class SpanTransport final : public net::Transport {
public:
  SpanTransport(net::Transport& inner, net::SimulatedClock& clock) : inner_(inner), clock_(clock) {}
  net::HttpResponse get(const net::HttpRequest& r) override {
    const auto start = clock_.now();
    clock_.advance(120ms);
    auto response = inner_.get(r);
    std::lock_guard lock(mutex_);
    spans.push_back({net::host_of(r.url), start, clock_.now()});
    return response;
  }
  struct Span {
    std::string host;
    net::Clock::time_point start, end;
  };
  std::vector<Span> spans;

private:
  net::Transport& inner_;
  net::SimulatedClock& clock_;
  std::mutex mutex_;
};

bool spans_respect(std::vector<SpanTransport::Span> spans, net::Clock::duration interval) {
  std::map<std::string, std::vector<SpanTransport::Span>> by_host;
  for (const auto& s : spans) by_host[s.host].push_back(s);
  for (auto& [host, list] : by_host) {
    std::sort(list.begin(), list.end(), [](const auto& a, const auto& b) { return a.start < b.start; });
    for (std::size_t i = 1; i < list.size(); ++i)
      if (list[i].start - list[i - 1].start < interval || list[i].start < list[i - 1].end) return false;
  }
  return true;
}

Outcome criterion8() {
  Outcome o;
  const fs::path replay_dir = g_fixtures / "replay_harvest";
  const auto interval = 1000ms;
  auto harvest_records = [&](std::optional<std::uint64_t> stop_after) {
    net::ReplayTransport replay(replay_dir);
    net::SimulatedClock clock;
    SpanTransport timing(replay, clock);
    net::HostRateLimiter limiter(clock, interval);
    net::PoliteClient client(timing, clock, limiter, {}, "acceptance");
    harvest::OaiHarvester harvester(client);
    harvest::HarvestOptions options;
    options.endpoint = "http://oai.test/oai2";
    std::multiset<std::string> records;
    std::optional<harvest::HarvestCheckpoint> checkpoint;
    auto sink = [&](const ArticleMetadata& a) { records.insert(serialize_article(a)); };
    auto save = [&](const harvest::HarvestCheckpoint& c) { checkpoint = c; };
    options.max_pages = stop_after;
    harvester.run(options, std::nullopt, sink, save);
    std::size_t runs = 1;
    while (checkpoint && !checkpoint->completed && runs < 10) {
      // A fresh process resumes from the persisted checkpoint.
      const auto persisted = harvest::parse_checkpoint(harvest::serialize_checkpoint(*checkpoint));
      options.max_pages = stop_after;
      harvester.run(options, persisted, sink, save);
      ++runs;
    }
    return std::tuple{records, spans_respect(timing.spans, interval), checkpoint && checkpoint->completed};
  };

  const auto [full, full_rate_ok, full_done] = harvest_records(std::nullopt);
  o.require(full_done && full.size() == 5, fmt::format("full harvest gave {} records", full.size()));
  o.require(full_rate_ok, "rate limit violated in the full harvest");
  for (std::uint64_t pages = 1; pages <= 3; ++pages) {
    const auto [resumed, rate_ok, done] = harvest_records(pages);
    o.require(done, fmt::format("resume with {} page(s) per run did not complete", pages));
    o.require(resumed == full, fmt::format("resume with {} page(s) per run changed the record multiset", pages));
    o.require(rate_ok, fmt::format("rate limit violated with {} page(s) per run", pages));
  }

  // Concurrent clients across three hosts under the simulated clock.
  {
    net::ReplayTransport replay(replay_dir);
    net::SimulatedClock clock;
    struct Stub final : net::Transport {
      net::HttpResponse get(const net::HttpRequest&) override { return {200, "OK", {}, ""}; }
    } stub;
    SpanTransport timing(stub, clock);
    net::HostRateLimiter limiter(clock, interval);
    net::PoliteClient client(timing, clock, limiter, {}, "acceptance");
    {
      std::vector<std::jthread> threads;
      for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] {
          for (int i = 0; i < 25; ++i) client.get(fmt::format("http://h{}.test/{}", (t + i) % 3, i));
        });
    }
    o.require(timing.spans.size() == 200, "concurrent requests lost");
    o.require(spans_respect(timing.spans, interval), "rate limit violated under 8 concurrent workers");
  }
  if (o.pass) o.detail = "resume after each of 3 page boundaries yields the same 5 records; no rate violations";
  return o;
}

Outcome criterion9() {
  Outcome o;
  TempDir dir;
  const auto a = run_corpus(dir.path() / "w1", "corpus20", 1, true);
  const auto b = run_corpus(dir.path() / "w8", "corpus20", 8, true);
  o.require(a.empty() && b.empty(), "stage failed: " + a + b);
  if (!o.pass) return o;
  for (const char* f : {"runs/latest/scores.csv", "runs/latest/histogram.csv", "runs/first/scores.csv",
                        "runs/first/histogram.csv", "runs/delta.csv", "runs/latest/order.csv"}) {
    const auto x = slurp(dir.path() / "w1" / f), y = slurp(dir.path() / "w8" / f);
    o.require(!x.empty() && x == y, fmt::format("{} differs", f));
  }
  if (o.pass) o.detail = "scores, histogram, delta and order CSVs byte-identical";
  return o;
}

Outcome criterion10() {
  Outcome o;
  std::vector<std::string> seeds;
  for (const auto& dir : {g_fixtures / "xml", g_fixtures / "oai", g_fixtures / "corpus20" / "segmented"})
    for (const auto& e : fs::directory_iterator(dir))
      if (e.path().extension() == ".xml") seeds.push_back(slurp(e.path()));
  for (const auto& e : fs::directory_iterator(g_fixtures / "replay_harvest"))
    if (e.path().extension() == ".http") seeds.push_back(net::ReplayTransport::parse(slurp(e.path())).body);
  static const std::vector<std::string> tokens = {
      "<", ">", "&", "&amp;", "&#0;", "&#xD800;", "<!DOCTYPE a [<!ENTITY e \"x\">]>", "&e;", "<![CDATA[", "]]>",
      "<?xml version=\"1.0\"?>", "</", "/>", "\"", "'", "=", "xmlns:x=\"u\"", "<x:y>", "\xff", "\xc3", "\xe2\x80\x94",
      "<resumptionToken>t</resumptionToken>", "<error code=\"badArgument\">", "<dc:identifier>", "<abstract>"};
  std::mt19937_64 rng(10);
  auto pick = [&](std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng); };
  auto mutate = [&](std::string s) {
    const int edits = 1 + static_cast<int>(pick(8));
    for (int k = 0; k < edits; ++k) {
      const std::size_t at = s.empty() ? 0 : pick(s.size() + 1);
      switch (pick(6)) {
        case 0:
          if (!s.empty()) s[std::min(at, s.size() - 1)] = static_cast<char>(pick(256));
          break;
        case 1: s.insert(at, tokens[pick(tokens.size())]); break;
        case 2: s.erase(at, pick(64)); break;
        case 3: s.resize(at); break;
        case 4: {
          const auto& other = seeds[pick(seeds.size())];
          const std::size_t from = pick(other.size() + 1);
          s.insert(at, other.substr(from, pick(256)));
          break;
        }
        case 5: {
          if (s.empty()) break;
          const std::size_t from = pick(s.size()), len = pick(128);
          s.insert(at, s.substr(from, len));
          break;
        }
      }
    }
    return s;
  };

  constexpr std::size_t kInputs = 100'000;
  std::size_t parsed = 0, rejected = 0, unstructured = 0;
  std::string first_unstructured;
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t i = 0; i < kInputs; ++i) {
    const std::string input = mutate(seeds[i % seeds.size()]);
    const std::function<void()> parsers[] = {
        [&] { xml::parse(input); },
        [&] { extract::parse_publisher_xml({input, extract::DocFormat::PublisherXml, "fuzz"}); },
        [&] { extract::parse_tei({input, extract::DocFormat::SegmentedTei, "fuzz"}); },
        [&] { extract::parse_oai_record({input, extract::DocFormat::OaiDc, "fuzz"}); },
        [&] { harvest::parse_list_records(input); },
    };
    for (const auto& parse : parsers) {
      try {
        parse();
        ++parsed;
      } catch (const Error&) {
        ++rejected;
      } catch (const std::exception& e) {
        if (unstructured++ == 0) first_unstructured = e.what();
      }
    }
  }
  o.require(unstructured == 0, fmt::format("{} unstructured failures, first: {}", unstructured, first_unstructured));
  if (o.pass)
    o.detail = fmt::format("{} inputs x 5 parsers: {} accepted, {} structured errors, no crashes ({:.1f}s)", kInputs,
                           parsed, rejected, seconds_since(t0));
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: acceptance <fixtures-dir>\n";
    return 2;
  }
  g_fixtures = argv[1];
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"metric oracles", criterion1},        {"metric properties", criterion2},
      {"binning", criterion3},               {"identity corpus", criterion4},
      {"perturbation scores", criterion5},   {"delta table", criterion6},
      {"publication order", criterion7},     {"harvest resume and rate limit", criterion8},
      {"worker determinism", criterion9},    {"parser fuzzing", criterion10},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    failures += !o.pass;
    std::cout << fmt::format("{} criterion {}: {}: {}", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail)
              << std::endl;
  }
  return failures ? 1 : 0;
}
