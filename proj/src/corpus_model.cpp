#include "prepubdiff/corpus_model.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>
#include <unordered_map>
#include <utility>

#include <fmt/format.h>
#include <json.hpp>

#include "prepubdiff/error.hpp"

namespace prepubdiff {

using ojson = nlohmann::ordered_json;

ParseError::ParseError(const std::string& message, std::size_t byte_offset, std::size_t line,
                       std::size_t column)
    : Error(line > 0 ? fmt::format("{} (line {}, column {}, byte {})", message, line, column,
                                   byte_offset)
                     : fmt::format("{} (byte {})", message, byte_offset)),
      message_(message),
      byte_offset_(byte_offset),
      line_(line),
      column_(column) {}

MissingArtifact::MissingArtifact(const std::string& artifact, const std::string& producing_stage)
    : Error(fmt::format("missing {}; run the '{}' stage first", artifact, producing_stage)),
      stage_(producing_stage) {}

// ---------------------------------------------------------------------------
// Dates

namespace {

bool all_digits(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

int to_int(std::string_view s) {
  int v = 0;
  for (char c : s) v = v * 10 + (c - '0');
  return v;
}

}  // namespace

std::optional<Date> parse_date(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
  if (text.size() < 10) return std::nullopt;
  if (text.size() > 10 && text[10] != 'T' && text[10] != ' ') return std::nullopt;
  const auto y = text.substr(0, 4), m = text.substr(5, 2), d = text.substr(8, 2);
  if (text[4] != '-' || text[7] != '-' || !all_digits(y) || !all_digits(m) || !all_digits(d))
    return std::nullopt;
  Date date{std::chrono::year{to_int(y)}, std::chrono::month{static_cast<unsigned>(to_int(m))},
            std::chrono::day{static_cast<unsigned>(to_int(d))}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(date.year()),
                     static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
}

std::int64_t days_between(const Date& from, const Date& to) {
  return (std::chrono::sys_days{to} - std::chrono::sys_days{from}).count();
}

std::string utc_timestamp_now() {
  const auto now = std::chrono::floor<std::chrono::seconds>(std::chrono::system_clock::now());
  const auto day = std::chrono::floor<std::chrono::days>(now);
  const std::chrono::hh_mm_ss hms{now - day};
  return fmt::format("{}T{:02d}:{:02d}:{:02d}Z", format_date(Date{day}), hms.hours().count(),
                     hms.minutes().count(), hms.seconds().count());
}

// ---------------------------------------------------------------------------
// DOIs and ids

std::string normalize_doi(std::string_view doi) {
  std::string s;
  s.reserve(doi.size());
  for (char c : doi) s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  auto trim = [](std::string& v) {
    const auto b = v.find_first_not_of(" \t\r\n");
    const auto e = v.find_last_not_of(" \t\r\n");
    v = b == std::string::npos ? std::string{} : v.substr(b, e - b + 1);
  };
  trim(s);
  static constexpr std::string_view kPrefixes[] = {
      "https://doi.org/", "http://doi.org/", "https://dx.doi.org/", "http://dx.doi.org/",
      "doi.org/", "doi:"};
  for (bool stripped = true; stripped;) {
    stripped = false;
    for (auto p : kPrefixes) {
      if (s.starts_with(p)) {
        s.erase(0, p.size());
        trim(s);
        stripped = true;
      }
    }
  }
  return s;
}

std::string pair_id(std::string_view arxiv_id) {
  std::string id(arxiv_id);
  std::replace(id.begin(), id.end(), '/', '_');
  return id;
}

const ArticleMetadata* CorpusManifest::find_article(std::string_view arxiv_id) const {
  for (const auto& a : articles)
    if (a.arxiv_id == arxiv_id) return &a;
  return nullptr;
}

// ---------------------------------------------------------------------------
// Validation

std::vector<std::string> validate_manifest(const CorpusManifest& m) {
  std::vector<std::string> out;
  std::unordered_map<std::string, const ArticleMetadata*> by_id;
  std::uint64_t with_doi = 0;

  for (const auto& a : m.articles) {
    if (a.arxiv_id.empty()) {
      out.push_back("article with empty arxiv_id");
      continue;
    }
    if (!by_id.emplace(a.arxiv_id, &a).second)
      out.push_back(fmt::format("arxiv_id {}: duplicate article", a.arxiv_id));
    if (a.doi) {
      ++with_doi;
      if (a.doi->empty()) out.push_back(fmt::format("arxiv_id {}: empty DOI", a.arxiv_id));
    }
    if (a.versions.empty()) {
      out.push_back(fmt::format("arxiv_id {}: no versions", a.arxiv_id));
      continue;
    }
    if (a.versions.front().number < 1)
      out.push_back(fmt::format("arxiv_id {}: version number {} is not positive", a.arxiv_id,
                                a.versions.front().number));
    for (std::size_t i = 1; i < a.versions.size(); ++i) {
      const auto& prev = a.versions[i - 1];
      const auto& cur = a.versions[i];
      if (cur.number <= prev.number)
        out.push_back(fmt::format("arxiv_id {}: version {} listed after version {}", a.arxiv_id,
                                  cur.number, prev.number));
      else if (cur.upload_date < prev.upload_date)
        out.push_back(fmt::format("arxiv_id {}: version {} predates version {}", a.arxiv_id,
                                  cur.number, prev.number));
    }
    for (const auto& v : a.versions)
      if (!v.upload_date.ok())
        out.push_back(fmt::format("arxiv_id {}: version {} has an invalid date", a.arxiv_id,
                                  v.number));
  }

  std::unordered_map<std::string, std::string> pair_dois;
  std::uint64_t xml = 0, pdf = 0;
  for (const auto& p : m.pairs) {
    const auto& who = p.arxiv_id;
    if (p.doi.empty()) out.push_back(fmt::format("pair {}: empty DOI", who));
    else if (auto [it, fresh] = pair_dois.emplace(p.doi, who); !fresh)
      out.push_back(fmt::format("pair {}: DOI {} already paired with {}", who, p.doi, it->second));
    (p.format == PublishedFormat::Xml ? xml : pdf) += 1;
    if (p.published_file.empty()) out.push_back(fmt::format("pair {}: no published file", who));
    const auto found = by_id.find(who);
    if (found == by_id.end()) {
      out.push_back(fmt::format("pair {}: no matching article", who));
      continue;
    }
    const auto& article = *found->second;
    if (!p.doi.empty() && article.doi != p.doi)
      out.push_back(fmt::format("pair {}: DOI {} differs from article DOI", who, p.doi));
    for (const auto& [version, path] : p.preprint_files) {
      const bool known = std::any_of(article.versions.begin(), article.versions.end(),
                                     [&](const VersionInfo& v) { return v.number == version; });
      if (!known)
        out.push_back(fmt::format("pair {}: file for unknown version {}", who, version));
      if (path.empty()) out.push_back(fmt::format("pair {}: empty path for version {}", who, version));
    }
  }

  const auto& c = m.counters;
  if (c.records_harvested != m.articles.size())
    out.push_back(fmt::format("counters: records harvested ({}) != articles ({})",
                              c.records_harvested, m.articles.size()));
  if (c.records_with_doi != with_doi)
    out.push_back(fmt::format("counters: records with DOI ({}) != articles with DOI ({})",
                              c.records_with_doi, with_doi));
  if (c.downloads_attempted != c.downloads_failed + m.pairs.size())
    out.push_back(fmt::format("counters: downloads attempted ({}) != failed ({}) + pairs ({})",
                              c.downloads_attempted, c.downloads_failed, m.pairs.size()));
  if (c.xml_count != xml || c.pdf_count != pdf)
    out.push_back(fmt::format("counters: xml/pdf ({}/{}) != pair formats ({}/{})", c.xml_count,
                              c.pdf_count, xml, pdf));
  return out;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

ojson opt(const std::optional<std::string>& v) { return v ? ojson(*v) : ojson(nullptr); }

ojson to_json(const ArticleMetadata& a) {
  ojson versions = ojson::array();
  for (const auto& v : a.versions)
    versions.push_back(ojson{{"n", v.number}, {"date", format_date(v.upload_date)}});
  return ojson{{"arxiv_id", a.arxiv_id},       {"doi", opt(a.doi)},
               {"title_raw", a.title_raw},     {"abstract_raw", opt(a.abstract_raw)},
               {"categories", a.categories},   {"versions", std::move(versions)}};
}

ojson to_json(const MatchedPair& p) {
  ojson files = ojson::object();
  for (const auto& [n, path] : p.preprint_files) files[std::to_string(n)] = path;
  return ojson{{"arxiv_id", p.arxiv_id},
               {"doi", p.doi},
               {"publisher", opt(p.publisher)},
               {"pub_date", p.publication_date ? ojson(format_date(*p.publication_date))
                                               : ojson(nullptr)},
               {"format", std::string(to_string(p.format))},
               {"preprint_files", std::move(files)},
               {"published_file", p.published_file}};
}

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw ParseError(fmt::format("manifest schema: {}: {}", where, what), 0);
}

const ojson& field(const ojson& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, fmt::format("missing field \"{}\"", key));
  return *it;
}

std::string get_string(const ojson& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_string()) schema_error(where, fmt::format("\"{}\" must be a string", key));
  return v.get<std::string>();
}

std::optional<std::string> get_opt_string(const ojson& obj, const char* key,
                                          const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_string(obj, key, where);
}

std::uint64_t get_count(const ojson& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
    schema_error(where, fmt::format("\"{}\" must be a non-negative integer", key));
  return v.get<std::uint64_t>();
}

Date get_date(const std::string& text, const std::string& where) {
  auto d = parse_date(text);
  if (!d || text.size() != 10) schema_error(where, fmt::format("bad date \"{}\"", text));
  return *d;
}

const ojson& get_array(const ojson& obj, const char* key, const std::string& where) {
  const auto& v = field(obj, key, where);
  if (!v.is_array()) schema_error(where, fmt::format("\"{}\" must be an array", key));
  return v;
}

ArticleMetadata article_from_json(const ojson& j, std::size_t index) {
  const std::string where = fmt::format("articles[{}]", index);
  ArticleMetadata a;
  a.arxiv_id = get_string(j, "arxiv_id", where);
  a.doi = get_opt_string(j, "doi", where);
  a.title_raw = get_string(j, "title_raw", where);
  a.abstract_raw = get_opt_string(j, "abstract_raw", where);
  for (const auto& c : get_array(j, "categories", where)) {
    if (!c.is_string()) schema_error(where, "categories must be strings");
    a.categories.push_back(c.get<std::string>());
  }
  for (const auto& v : get_array(j, "versions", where)) {
    const auto& n = field(v, "n", where);
    if (!n.is_number_integer()) schema_error(where, "version \"n\" must be an integer");
    a.versions.push_back(VersionInfo{n.get<int>(), get_date(get_string(v, "date", where), where)});
  }
  return a;
}

MatchedPair pair_from_json(const ojson& j, std::size_t index) {
  const std::string where = fmt::format("pairs[{}]", index);
  MatchedPair p;
  p.arxiv_id = get_string(j, "arxiv_id", where);
  p.doi = get_string(j, "doi", where);
  p.publisher = get_opt_string(j, "publisher", where);
  if (auto d = get_opt_string(j, "pub_date", where)) p.publication_date = get_date(*d, where);
  const auto format = get_string(j, "format", where);
  if (format == "xml") p.format = PublishedFormat::Xml;
  else if (format == "pdf") p.format = PublishedFormat::Pdf;
  else schema_error(where, fmt::format("unknown format \"{}\"", format));
  const auto& files = field(j, "preprint_files", where);
  if (!files.is_object()) schema_error(where, "\"preprint_files\" must be an object");
  for (const auto& [key, value] : files.items()) {
    if (!all_digits(key) || key.size() > 6) schema_error(where, fmt::format("bad version key \"{}\"", key));
    if (!value.is_string()) schema_error(where, "preprint file paths must be strings");
    p.preprint_files[to_int(key)] = value.get<std::string>();
  }
  p.published_file = get_string(j, "published_file", where);
  return p;
}

}  // namespace

std::string serialize_manifest(const CorpusManifest& m) {
  const auto& c = m.counters;
  ojson counters{{"records_harvested", c.records_harvested},
                 {"records_with_doi", c.records_with_doi},
                 {"downloads_attempted", c.downloads_attempted},
                 {"downloads_failed", c.downloads_failed},
                 {"xml_count", c.xml_count},
                 {"pdf_count", c.pdf_count}};
  ojson articles = ojson::array();
  for (const auto& a : m.articles) articles.push_back(to_json(a));
  ojson pairs = ojson::array();
  for (const auto& p : m.pairs) pairs.push_back(to_json(p));
  ojson ambiguous = ojson::array();
  for (const auto& a : m.ambiguous) ambiguous.push_back(ojson{{"doi", a.doi}, {"arxiv_ids", a.arxiv_ids}});

  ojson doc{{"schema_version", kManifestSchemaVersion},
            {"created", m.created},
            {"counters", std::move(counters)},
            {"articles", std::move(articles)},
            {"pairs", std::move(pairs)},
            {"ambiguous", std::move(ambiguous)}};
  return doc.dump(2, ' ', false, ojson::error_handler_t::replace) + "\n";
}

CorpusManifest parse_manifest(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("manifest is not valid JSON: {}", e.what()), e.byte);
  }
  const std::string top = "manifest";
  const auto& version = field(doc, "schema_version", top);
  if (!version.is_number_integer() || version.get<int>() != kManifestSchemaVersion)
    schema_error(top, fmt::format("unsupported schema_version (expected {})", kManifestSchemaVersion));

  CorpusManifest m;
  m.created = get_string(doc, "created", top);
  const auto& c = field(doc, "counters", top);
  m.counters.records_harvested = get_count(c, "records_harvested", "counters");
  m.counters.records_with_doi = get_count(c, "records_with_doi", "counters");
  m.counters.downloads_attempted = get_count(c, "downloads_attempted", "counters");
  m.counters.downloads_failed = get_count(c, "downloads_failed", "counters");
  m.counters.xml_count = get_count(c, "xml_count", "counters");
  m.counters.pdf_count = get_count(c, "pdf_count", "counters");

  const auto& articles = get_array(doc, "articles", top);
  m.articles.reserve(articles.size());
  for (std::size_t i = 0; i < articles.size(); ++i) m.articles.push_back(article_from_json(articles[i], i));
  const auto& pairs = get_array(doc, "pairs", top);
  for (std::size_t i = 0; i < pairs.size(); ++i) m.pairs.push_back(pair_from_json(pairs[i], i));
  if (doc.contains("ambiguous")) {
    for (const auto& a : get_array(doc, "ambiguous", top)) {
      AmbiguousDoi amb{get_string(a, "doi", "ambiguous"), {}};
      for (const auto& id : get_array(a, "arxiv_ids", "ambiguous")) {
        if (!id.is_string()) schema_error("ambiguous", "arxiv_ids must be strings");
        amb.arxiv_ids.push_back(id.get<std::string>());
      }
      m.ambiguous.push_back(std::move(amb));
    }
  }

  // Pair versions are not persisted; they are the article's versions.
  std::unordered_map<std::string_view, const ArticleMetadata*> by_id;
  for (const auto& a : m.articles) by_id.emplace(a.arxiv_id, &a);
  for (auto& p : m.pairs)
    if (auto it = by_id.find(p.arxiv_id); it != by_id.end()) p.preprint_versions = it->second->versions;
  return m;
}

std::string serialize_article(const ArticleMetadata& article) {
  return to_json(article).dump(-1, ' ', false, ojson::error_handler_t::replace);
}

ArticleMetadata parse_article(std::string_view text) {
  ojson doc;
  try {
    doc = ojson::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(fmt::format("article is not valid JSON: {}", e.what()), e.byte);
  }
  return article_from_json(doc, 0);
}

CorpusManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingArtifact(path.string(), "harvest");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_manifest(buf.str());
}

void save_manifest(const std::filesystem::path& path, const CorpusManifest& manifest) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out << serialize_manifest(manifest);
    if (!out) throw Error(fmt::format("write failed for {}", tmp.string()));
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// Enum names

std::string_view to_string(Section s) {
  switch (s) {
    case Section::Title: return "title";
    case Section::Abstract: return "abstract";
    case Section::Body: return "body";
  }
  return "?";
}

std::string_view to_string(Metric m) {
  switch (m) {
    case Metric::EditRatio: return "edit_ratio";
    case Metric::LengthSimilarity: return "length";
    case Metric::Sorensen: return "sorensen";
    case Metric::Jaccard: return "jaccard";
    case Metric::Cosine: return "cosine";
  }
  return "?";
}

std::string_view to_string(VersionPolicy p) { return p == VersionPolicy::Latest ? "latest" : "first"; }

std::string_view to_string(SectionSource s) {
  switch (s) {
    case SectionSource::PublisherXml: return "publisher_xml";
    case SectionSource::SegmentedTei: return "segmented_tei";
    case SectionSource::PlainSections: return "plain_sections";
  }
  return "?";
}

std::string_view to_string(ExtractionFlag f) {
  switch (f) {
    case ExtractionFlag::TitleMissing: return "title_missing";
    case ExtractionFlag::AbstractMissing: return "abstract_missing";
    case ExtractionFlag::BodyMissing: return "body_missing";
    case ExtractionFlag::SegmenterFailure: return "segmenter_failure";
    case ExtractionFlag::MathDropped: return "math_dropped";
  }
  return "?";
}

std::string_view to_string(PublishedFormat f) { return f == PublishedFormat::Xml ? "xml" : "pdf"; }

namespace {
template <class E, std::size_t N>
std::optional<E> lookup(std::string_view s, const E (&values)[N]) {
  for (E v : values)
    if (to_string(v) == s) return v;
  return std::nullopt;
}
}  // namespace

std::optional<Section> parse_section(std::string_view s) { return lookup(s, kSections); }
std::optional<Metric> parse_metric(std::string_view s) { return lookup(s, kMetrics); }

std::optional<VersionPolicy> parse_policy(std::string_view s) {
  constexpr VersionPolicy all[] = {VersionPolicy::Latest, VersionPolicy::First};
  return lookup(s, all);
}

std::optional<SectionSource> parse_source(std::string_view s) {
  constexpr SectionSource all[] = {SectionSource::PublisherXml, SectionSource::SegmentedTei,
                                   SectionSource::PlainSections};
  return lookup(s, all);
}

std::optional<ExtractionFlag> parse_flag(std::string_view s) {
  constexpr ExtractionFlag all[] = {ExtractionFlag::TitleMissing, ExtractionFlag::AbstractMissing,
                                    ExtractionFlag::BodyMissing, ExtractionFlag::SegmenterFailure,
                                    ExtractionFlag::MathDropped};
  return lookup(s, all);
}

const std::optional<std::string>& SectionSet::get(Section s) const {
  switch (s) {
    case Section::Title: return title;
    case Section::Abstract: return abstract;
    case Section::Body: return body;
  }
  return body;
}

std::optional<std::string>& SectionSet::get(Section s) {
  return const_cast<std::optional<std::string>&>(std::as_const(*this).get(s));
}

}  // namespace prepubdiff
