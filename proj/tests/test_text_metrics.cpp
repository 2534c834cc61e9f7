#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "prepubdiff/porter_stemmer.hpp"
#include "prepubdiff/text_metrics.hpp"
#include "prepubdiff/utf8.hpp"
#include "support.hpp"

using namespace prepubdiff;
using namespace prepubdiff::metrics;

namespace {

std::size_t dp_levenshtein(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
  return d[a.size()][b.size()];
}

std::size_t dp_lcs(const std::u32string& a, const std::u32string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = a[i - 1] == b[j - 1] ? d[i - 1][j - 1] + 1 : std::max(d[i - 1][j], d[i][j - 1]);
  return d[a.size()][b.size()];
}

std::u32string random_text(std::mt19937_64& rng, std::size_t max_len, std::u32string_view alphabet) {
  std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
  std::u32string s(len(rng), U' ');
  for (auto& c : s) c = alphabet[pick(rng)];
  return s;
}

constexpr std::u32string_view kSmall = U"abcd";
constexpr std::u32string_view kWide = U"abcdefghij klmnop—é∂ü";

}  // namespace

TEST_SUITE("text_metrics") {

TEST_CASE("levenshtein matches the quadratic DP on random pairs") {
  std::mt19937_64 rng(17);
  for (int i = 0; i < 10'000; ++i) {
    const auto a = random_text(rng, 64, i % 2 ? kSmall : kWide);
    const auto b = random_text(rng, 64, i % 2 ? kSmall : kWide);
    REQUIRE(levenshtein_distance(a, b) == dp_levenshtein(a, b));
  }
}

TEST_CASE("levenshtein handles texts longer than one machine word") {
  std::mt19937_64 rng(18);
  for (int i = 0; i < 200; ++i) {
    const auto a = random_text(rng, 300, kSmall);
    const auto b = random_text(rng, 300, kSmall);
    REQUIRE(levenshtein_distance(a, b) == dp_levenshtein(a, b));
    REQUIRE(lcs_length(a, b) == dp_lcs(a, b));
    REQUIRE(weighted_edit_distance(a, b) == a.size() + b.size() - 2 * dp_lcs(a, b));
  }
}

TEST_CASE("levenshtein known values") {
  CHECK(levenshtein_distance(std::string_view("kitten"), std::string_view("sitting")) == 3);
  CHECK(levenshtein_distance(std::string_view(""), std::string_view("abc")) == 3);
  CHECK(levenshtein_distance(std::string_view("é—x"), std::string_view("e-x")) == 2);
}

TEST_CASE("edit ratio is the indel similarity") {
  std::mt19937_64 rng(19);
  for (int i = 0; i < 2000; ++i) {
    const auto a = random_text(rng, 80, kWide);
    const auto b = random_text(rng, 80, kWide);
    const double total = static_cast<double>(a.size() + b.size());
    const double expected = total == 0 ? 1.0 : 2.0 * static_cast<double>(dp_lcs(a, b)) / total;
    REQUIRE(edit_ratio(a, b) == doctest::Approx(expected).epsilon(1e-15));
  }
  CHECK(edit_ratio(std::string_view("kitten"), std::string_view("sitting")) == doctest::Approx(8.0 / 13.0));
}

TEST_CASE("sorensen and jaccard match brute-force set computation") {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 10'000; ++i) {
    const auto a = random_text(rng, 40, kWide);
    const auto b = random_text(rng, 40, kWide);
    const std::set<char32_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
    std::size_t inter = 0;
    for (char32_t c : sa) inter += sb.count(c);
    const std::size_t uni = sa.size() + sb.size() - inter;
    const double s = sa.empty() && sb.empty() ? 1.0 : 2.0 * inter / static_cast<double>(sa.size() + sb.size());
    const double j = uni == 0 ? 1.0 : inter / static_cast<double>(uni);
    const CharSet ca(a), cb(b);
    REQUIRE(std::abs(sorensen(ca, cb) - s) <= 1e-12);
    REQUIRE(std::abs(jaccard(ca, cb) - j) <= 1e-12);
  }
}

TEST_CASE("cosine of the reference vectors") {
  const TermVector u{{"cat", 2}, {"dog", 1}}, v{{"cat", 1}, {"dog", 2}};
  CHECK(std::abs(cosine_similarity(u, v) - 0.8) <= 1e-12);
  CHECK_THROWS_AS(cosine_similarity({}, v), EmptyVectorError);
  try {
    cosine_similarity(u, {});
  } catch (const EmptyVectorError& e) {
    CHECK(e.side() == VectorSide::Second);
  }
}

TEST_CASE("metric properties hold on generated cases") {
  std::mt19937_64 rng(29);
  for (int i = 0; i < 1000; ++i) {
    const auto a8 = utf8::encode(random_text(rng, 60, kWide));
    const auto b8 = utf8::encode(random_text(rng, 60, kWide));
    for (double s : {edit_ratio(a8, b8), length_similarity(a8, b8), sorensen(a8, b8), jaccard(a8, b8)}) {
      REQUIRE(s >= 0.0);
      REQUIRE(s <= 1.0);
    }
    REQUIRE(edit_ratio(a8, b8) == edit_ratio(b8, a8));
    REQUIRE(length_similarity(a8, b8) == length_similarity(b8, a8));
    REQUIRE(sorensen(a8, b8) == sorensen(b8, a8));
    REQUIRE(jaccard(a8, b8) == jaccard(b8, a8));
    REQUIRE(edit_ratio(a8, a8) == 1.0);
    REQUIRE(length_similarity(a8, a8) == 1.0);
    REQUIRE(sorensen(a8, a8) == 1.0);
    REQUIRE(jaccard(a8, a8) == 1.0);
    const double j = jaccard(a8, b8);
    REQUIRE(std::abs(sorensen(a8, b8) - 2 * j / (1 + j)) <= 1e-12);
  }
}

TEST_CASE("cosine is permutation and scaling invariant") {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> count(1, 9), terms(1, 12), coin(0, 2);
  for (int i = 0; i < 1000; ++i) {
    TermVector u, v;
    for (int t = terms(rng); t > 0; --t) u["t" + std::to_string(terms(rng))] = count(rng);
    for (int t = terms(rng); t > 0; --t) v["t" + std::to_string(terms(rng))] = count(rng);
    const double c = cosine_similarity(u, v);
    REQUIRE(c >= 0.0);
    REQUIRE(c <= 1.0);
    REQUIRE(std::abs(cosine_similarity(v, u) - c) <= 1e-12);
    REQUIRE(std::abs(cosine_similarity(u, u) - 1.0) <= 1e-12);
    // Renaming terms consistently is a permutation of the vector components.
    TermVector pu, pv;
    for (auto& [k, n] : u) pu["z" + k] = n;
    for (auto& [k, n] : v) pv["z" + k] = n;
    REQUIRE(std::abs(cosine_similarity(pu, pv) - c) <= 1e-12);
    TermVector su = u;
    const auto factor = static_cast<std::uint32_t>(coin(rng) + 2);
    for (auto& [k, n] : su) n *= factor;
    REQUIRE(std::abs(cosine_similarity(su, v) - c) <= 1e-12);
  }
}

TEST_CASE("edit ratio endpoints") {
  std::mt19937_64 rng(37);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_text(rng, 50, U"abcdef");
    auto b = a;
    for (auto& c : b) c = c + 20;  // disjoint alphabet, same length
    REQUIRE(edit_ratio(a, a) == 1.0);
    if (!a.empty()) REQUIRE(edit_ratio(a, b) == 0.0);
  }
}

TEST_CASE("length similarity of n and 2n is one half") {
  for (std::size_t n = 1; n <= 1000; ++n) REQUIRE(length_similarity(n, 2 * n) == 0.5);
  CHECK(length_similarity(0, 0) == 1.0);
  CHECK(length_similarity(0, 5) == 0.0);
  CHECK(length_similarity(std::string_view("é—"), std::string_view("ab")) == 1.0);
}

TEST_CASE("signed length similarity carries the direction") {
  CHECK(signed_length_similarity(10, 20) == 0.5);
  CHECK(signed_length_similarity(20, 10) == -0.5);
  CHECK(signed_length_similarity(7, 7) == 0.0);
}

TEST_CASE("tokenize splits on non-alphanumerics and lowercases") {
  CHECK(tokenize("Gauge-invariant, QUANTUM field (2016)!") ==
        std::vector<std::string>{"gauge", "invariant", "quantum", "field", "2016"});
  CHECK(tokenize("don't") == std::vector<std::string>{"don", "t"});
  CHECK(tokenize("Über—Straße") == std::vector<std::string>{"über", "straße"});
  CHECK(tokenize("  ").empty());
}

TEST_CASE("normalize_terms removes stopwords and stems") {
  const auto v = normalize_terms("The generalizations of the theory were generalized by theories");
  CHECK(v == TermVector{{"gener", 2}, {"theori", 2}});
  const auto raw = normalize_terms("The running runner", StopwordList::english(), Stemming::Off);
  CHECK(raw == TermVector{{"running", 1}, {"runner", 1}});
  const auto mixed = normalize_terms("x2 caf\xc3\xa9s");
  CHECK(mixed.count("x2") == 1);
  CHECK(mixed.count("cafés") == 1);
}

TEST_CASE("stopword lists") {
  CHECK(StopwordList::english().size() == 179);
  const auto file = StopwordList::load(testing::data() / "stopwords_english.txt");
  CHECK(file.size() == 179);
  std::istringstream in(testing::slurp(testing::data() / "stopwords_english.txt"));
  for (std::string line; std::getline(in, line);)
    if (!line.empty() && line[0] != '#') CHECK_MESSAGE(StopwordList::english().contains(line), line);
  const auto custom = StopwordList::parse("# comment\n  Foo \n\nbar\n");
  CHECK(custom.size() == 2);
  CHECK(custom.contains("foo"));
  CHECK_FALSE(custom.contains("the"));
  CHECK_THROWS_AS(StopwordList::load(testing::data() / "missing.txt"), Error);
}

TEST_CASE("porter stemmer reproduces the reference vocabulary") {
  std::istringstream voc(testing::slurp(testing::data() / "porter_voc.txt"));
  std::istringstream out(testing::slurp(testing::data() / "porter_output.txt"));
  std::string word, stem;
  std::size_t n = 0, mismatches = 0;
  while (std::getline(voc, word) && std::getline(out, stem)) {
    ++n;
    if (porter_stem(word) != stem) {
      if (++mismatches <= 10) MESSAGE(word << " -> " << porter_stem(word) << " expected " << stem);
    }
  }
  CHECK(n == 23532);
  CHECK(mismatches == 0);
}

}  // TEST_SUITE
