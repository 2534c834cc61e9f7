#include "prepubdiff/text_metrics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "prepubdiff/porter_stemmer.hpp"
#include "prepubdiff/utf8.hpp"

namespace prepubdiff::metrics {

namespace {

// Removes the common prefix and suffix; neither changes any edit distance.
void trim_common(std::u32string_view& a, std::u32string_view& b) {
  const auto [pa, pb] = std::mismatch(a.begin(), a.end(), b.begin(), b.end());
  const auto prefix = static_cast<std::size_t>(pa - a.begin());
  a.remove_prefix(prefix);
  b.remove_prefix(prefix);
  const auto [sa, sb] = std::mismatch(a.rbegin(), a.rend(), b.rbegin(), b.rend());
  const auto suffix = static_cast<std::size_t>(sa - a.rbegin());
  a.remove_suffix(suffix);
  b.remove_suffix(suffix);
}

double clamp_unit(double v) { return std::clamp(v, 0.0, 1.0); }

}  // namespace

std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b) {
  trim_common(a, b);
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();
  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({up + 1, row[j - 1] + 1, diag + (a[i - 1] == b[j - 1] ? 0u : 1u)});
      diag = up;
    }
  }
  return row[b.size()];
}

std::size_t levenshtein_distance(std::string_view a, std::string_view b) {
  return levenshtein_distance(utf8::decode(a), utf8::decode(b));
}

std::size_t lcs_length(std::u32string_view a, std::u32string_view b) {
  const std::size_t total_a = a.size();
  trim_common(a, b);
  const std::size_t common = total_a - a.size();
  if (a.empty() || b.empty()) return common;

  // Bit-parallel LCS: bit i of V is cleared once a[i] has been matched.
  // Per character c of b: U = V & match(c); V = (V + U) | (V - U), and V - U == V & ~U.
  std::vector<char32_t> alphabet(a.begin(), a.end());
  std::sort(alphabet.begin(), alphabet.end());
  alphabet.erase(std::unique(alphabet.begin(), alphabet.end()), alphabet.end());
  const std::size_t words = (a.size() + 63) / 64;
  std::vector<std::uint64_t> match(alphabet.size() * words, 0);
  auto symbol = [&](char32_t c) -> std::ptrdiff_t {
    auto it = std::lower_bound(alphabet.begin(), alphabet.end(), c);
    return (it != alphabet.end() && *it == c) ? it - alphabet.begin() : -1;
  };
  for (std::size_t i = 0; i < a.size(); ++i)
    match[static_cast<std::size_t>(symbol(a[i])) * words + i / 64] |= std::uint64_t{1} << (i % 64);

  std::vector<std::uint64_t> v(words, ~std::uint64_t{0});
  for (char32_t c : b) {
    const auto s = symbol(c);
    if (s < 0) continue;
    const std::uint64_t* m = &match[static_cast<std::size_t>(s) * words];
    std::uint64_t carry = 0;
    for (std::size_t w = 0; w < words; ++w) {
      const std::uint64_t u = v[w] & m[w];
      const std::uint64_t sum = v[w] + u;
      const std::uint64_t with_carry = sum + carry;
      carry = (sum < v[w] || with_carry < sum) ? 1 : 0;
      v[w] = with_carry | (v[w] & ~u);
    }
  }
  std::size_t zeros = 0;
  for (std::size_t w = 0; w < words; ++w) {
    std::uint64_t bits = ~v[w];
    if (w + 1 == words && a.size() % 64 != 0) bits &= (std::uint64_t{1} << (a.size() % 64)) - 1;
    zeros += static_cast<std::size_t>(std::popcount(bits));
  }
  return common + zeros;
}

std::size_t weighted_edit_distance(std::u32string_view a, std::u32string_view b) {
  return a.size() + b.size() - 2 * lcs_length(a, b);
}

double edit_ratio(std::u32string_view a, std::u32string_view b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  const std::size_t distance = weighted_edit_distance(a, b);
  return clamp_unit(static_cast<double>(total - distance) / static_cast<double>(total));
}

double edit_ratio(std::string_view a, std::string_view b) {
  return edit_ratio(utf8::decode(a), utf8::decode(b));
}

double length_similarity(std::size_t len_a, std::size_t len_b) {
  const std::size_t longer = std::max(len_a, len_b);
  if (longer == 0) return 1.0;
  const std::size_t diff = longer - std::min(len_a, len_b);
  return clamp_unit(1.0 - static_cast<double>(diff) / static_cast<double>(longer));
}

double length_similarity(std::string_view a, std::string_view b) {
  return length_similarity(utf8::length(a), utf8::length(b));
}

double signed_length_similarity(std::size_t preprint_len, std::size_t published_len) {
  if (preprint_len == published_len) return 0.0;
  const double magnitude = length_similarity(preprint_len, published_len);
  return published_len > preprint_len ? magnitude : -magnitude;
}

double signed_length_similarity(std::string_view preprint, std::string_view published) {
  return signed_length_similarity(utf8::length(preprint), utf8::length(published));
}

// ---------------------------------------------------------------------------
// Character sets

CharSet::CharSet(std::u32string_view text) : members_(text.begin(), text.end()) {
  std::sort(members_.begin(), members_.end());
  members_.erase(std::unique(members_.begin(), members_.end()), members_.end());
}

bool CharSet::contains(char32_t cp) const {
  return std::binary_search(members_.begin(), members_.end(), cp);
}

std::size_t CharSet::intersection_size(const CharSet& other) const {
  std::size_t n = 0;
  auto i = members_.begin();
  auto j = other.members_.begin();
  while (i != members_.end() && j != other.members_.end()) {
    if (*i < *j) ++i;
    else if (*j < *i) ++j;
    else { ++n; ++i; ++j; }
  }
  return n;
}

std::size_t CharSet::union_size(const CharSet& other) const {
  return size() + other.size() - intersection_size(other);
}

CharSet char_set(std::string_view text) { return CharSet(utf8::decode(text)); }

double sorensen(const CharSet& a, const CharSet& b) {
  const std::size_t total = a.size() + b.size();
  if (total == 0) return 1.0;
  return clamp_unit(2.0 * static_cast<double>(a.intersection_size(b)) / static_cast<double>(total));
}

double sorensen(std::string_view a, std::string_view b) { return sorensen(char_set(a), char_set(b)); }

double jaccard(const CharSet& a, const CharSet& b) {
  const std::size_t uni = a.union_size(b);
  if (uni == 0) return 1.0;
  return clamp_unit(static_cast<double>(a.intersection_size(b)) / static_cast<double>(uni));
}

double jaccard(std::string_view a, std::string_view b) { return jaccard(char_set(a), char_set(b)); }

// ---------------------------------------------------------------------------
// Terms

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  for (char32_t cp : utf8::decode(text)) {
    if (utf8::is_alnum(cp)) {
      utf8::append(current, utf8::to_lower(cp));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

TermVector normalize_terms(std::string_view text, const StopwordList& stopwords, Stemming stemming) {
  TermVector terms;
  for (auto& token : tokenize(text)) {
    if (stopwords.contains(token)) continue;
    const bool stemmable = std::all_of(token.begin(), token.end(), [](char c) { return c >= 'a' && c <= 'z'; });
    if (stemming == Stemming::On && stemmable) token = porter_stem(token);
    ++terms[token];
  }
  return terms;
}

EmptyVectorError::EmptyVectorError(VectorSide side)
    : Error(side == VectorSide::Both     ? "cosine similarity of two empty term vectors"
            : side == VectorSide::First ? "cosine similarity with an empty first term vector"
                                        : "cosine similarity with an empty second term vector"),
      side_(side) {}

double cosine_similarity(const TermVector& u, const TermVector& v) {
  if (u.empty() || v.empty())
    throw EmptyVectorError(u.empty() && v.empty() ? VectorSide::Both
                           : u.empty()            ? VectorSide::First
                                                  : VectorSide::Second);
  // Integer-valued sums stay exact in long double up to 2^64.
  long double dot = 0, nu = 0, nv = 0;
  for (const auto& [term, count] : u) nu += static_cast<long double>(count) * count;
  for (const auto& [term, count] : v) nv += static_cast<long double>(count) * count;
  const auto& small = u.size() <= v.size() ? u : v;
  const auto& large = u.size() <= v.size() ? v : u;
  for (const auto& [term, count] : small)
    if (auto it = large.find(term); it != large.end())
      dot += static_cast<long double>(count) * it->second;
  return clamp_unit(static_cast<double>(dot / std::sqrt(nu * nv)));
}

}  // namespace prepubdiff::metrics
