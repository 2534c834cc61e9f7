#pragma once

// Normalized text similarity measures. Every score lies in [0, 1], with 1 for
// identical inputs. Texts are UTF-8 and are measured in code points.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "prepubdiff/error.hpp"

namespace prepubdiff::metrics {

/// Unit-cost Levenshtein distance (insert, delete, substitute all cost 1).
std::size_t levenshtein_distance(std::u32string_view a, std::u32string_view b);
std::size_t levenshtein_distance(std::string_view a, std::string_view b);

/// Edit distance with insert = delete = 1 and substitute = 2, i.e.
/// |a| + |b| - 2 * LCS(a, b). This is the distance behind `edit_ratio`.
std::size_t weighted_edit_distance(std::u32string_view a, std::u32string_view b);

/// Length of the longest common subsequence (bit-parallel, O(|a||b|/64)).
std::size_t lcs_length(std::u32string_view a, std::u32string_view b);

/// ((|a| + |b|) - weighted distance) / (|a| + |b|); 1.0 when both are empty.
double edit_ratio(std::u32string_view a, std::u32string_view b);
double edit_ratio(std::string_view a, std::string_view b);

/// 1 - |len(a) - len(b)| / max(len(a), len(b)); 1.0 when both are empty.
double length_similarity(std::size_t len_a, std::size_t len_b);
double length_similarity(std::string_view a, std::string_view b);

/// Length similarity carrying the direction of the change: positive when the
/// published text is longer, negative when the pre-print is longer, 0 when the
/// lengths are equal.
double signed_length_similarity(std::size_t preprint_len, std::size_t published_len);
double signed_length_similarity(std::string_view preprint, std::string_view published);

/// Set of distinct code points of a text.
class CharSet {
public:
  CharSet() = default;
  explicit CharSet(std::u32string_view text);

  std::size_t size() const noexcept { return members_.size(); }
  bool empty() const noexcept { return members_.empty(); }
  bool contains(char32_t cp) const;
  auto begin() const noexcept { return members_.begin(); }
  auto end() const noexcept { return members_.end(); }

  std::size_t intersection_size(const CharSet& other) const;
  std::size_t union_size(const CharSet& other) const;

  bool operator==(const CharSet&) const = default;

private:
  std::vector<char32_t> members_;  // sorted, unique
};

CharSet char_set(std::string_view text);

/// 2|A ∩ B| / (|A| + |B|) over character sets; 1.0 when both are empty.
double sorensen(const CharSet& a, const CharSet& b);
double sorensen(std::string_view a, std::string_view b);

/// |A ∩ B| / |A ∪ B| over character sets; 1.0 when both are empty.
double jaccard(const CharSet& a, const CharSet& b);
double jaccard(std::string_view a, std::string_view b);

// ---------------------------------------------------------------------------
// Term vectors

/// Stemmed term -> raw occurrence count (always >= 1).
using TermVector = std::map<std::string, std::uint32_t, std::less<>>;

class StopwordList {
public:
  StopwordList() = default;
  explicit StopwordList(std::vector<std::string> words);

  /// Built-in English list (179 words).
  static const StopwordList& english();
  /// One token per line; blank lines and '#' comments ignored; tokens lowercased.
  static StopwordList parse(std::string_view text);
  static StopwordList load(const std::filesystem::path& path);

  bool contains(std::string_view token) const;
  std::size_t size() const noexcept { return words_.size(); }

private:
  std::unordered_set<std::string> words_;
};

enum class Stemming { On, Off };

/// Lowercased maximal runs of alphanumeric code points.
std::vector<std::string> tokenize(std::string_view text);

/// tokenize -> drop stopwords -> Porter stem (pure a-z tokens only) -> count.
TermVector normalize_terms(std::string_view text, const StopwordList& stopwords = StopwordList::english(),
                           Stemming stemming = Stemming::On);

enum class VectorSide { First, Second, Both };

class EmptyVectorError : public Error {
public:
  explicit EmptyVectorError(VectorSide side);
  VectorSide side() const noexcept { return side_; }

private:
  VectorSide side_;
};

/// dot(u, v) / (|u| |v|) over raw counts. Throws EmptyVectorError when either
/// vector is empty.
double cosine_similarity(const TermVector& u, const TermVector& v);

}  // namespace prepubdiff::metrics
