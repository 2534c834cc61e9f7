#include "prepubdiff/harvesting.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <set>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

#include "prepubdiff/error.hpp"
#include "prepubdiff/xml_tree.hpp"

namespace prepubdiff::harvest {

using nlohmann::json;

namespace {

std::string trim_copy(std::string_view s) {
  auto is_ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && is_ws(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_ws(s.back())) s.remove_suffix(1);
  return std::string(s);
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

json optional_string(const std::optional<std::string>& s) { return s ? json(*s) : json(nullptr); }

std::optional<std::string> read_optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) throw ParseError(fmt::format("checkpoint: \"{}\" must be a string or null", key), 0);
  return j.at(key).get<std::string>();
}

}  // namespace

// ---------------------------------------------------------------------------
// Checkpoints

std::string serialize_checkpoint(const HarvestCheckpoint& c) {
  nlohmann::ordered_json j;
  j["endpoint"] = c.endpoint;
  j["from"] = optional_string(c.from);
  j["set"] = optional_string(c.set);
  j["resumption_token"] = optional_string(c.resumption_token);
  j["records_received"] = c.records_received;
  j["pages"] = c.pages;
  j["completed"] = c.completed;
  return j.dump(2) + "\n";
}

HarvestCheckpoint parse_checkpoint(std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("checkpoint is not valid JSON: {}", e.what()), e.byte);
  }
  if (!j.is_object() || !j.contains("endpoint") || !j.at("endpoint").is_string())
    throw ParseError("checkpoint: missing \"endpoint\"", 0);
  HarvestCheckpoint c;
  c.endpoint = j.at("endpoint").get<std::string>();
  c.from = read_optional_string(j, "from");
  c.set = read_optional_string(j, "set");
  c.resumption_token = read_optional_string(j, "resumption_token");
  try {
    c.records_received = j.value("records_received", std::uint64_t{0});
    c.pages = j.value("pages", std::uint64_t{0});
    c.completed = j.value("completed", false);
  } catch (const json::exception& e) {
    throw ParseError(fmt::format("checkpoint: {}", e.what()), 0);
  }
  if (c.completed && c.resumption_token) throw ParseError("checkpoint: completed harvest still carries a token", 0);
  return c;
}

std::optional<HarvestCheckpoint> load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

void save_checkpoint(const std::filesystem::path& path, const HarvestCheckpoint& checkpoint) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << serialize_checkpoint(checkpoint);
  }
  std::filesystem::rename(tmp, path);
}

// ---------------------------------------------------------------------------
// OAI-PMH

OaiPage parse_list_records(std::string_view xml_text) {
  const xml::Node root = xml::parse(xml_text);
  OaiPage page;
  for (const auto* error : root.children_named("error")) {
    const auto code = error->attribute("code").value_or("");
    if (code == "noRecordsMatch") return page;
    throw Error(fmt::format("OAI-PMH error {}: {}", code, trim_copy(error->text_content())));
  }
  const xml::Node* list = root.child("ListRecords");
  if (!list) throw Error("OAI-PMH response has neither ListRecords nor error");

  for (const auto* record : list->children_named("record")) {
    try {
      page.records.push_back(extract::parse_oai_record(*record));
    } catch (const RecordRejected& e) {
      std::string id;
      if (const auto* header = record->child("header"))
        if (const auto* identifier = header->child("identifier")) id = trim_copy(identifier->text_content());
      page.skipped.push_back({std::move(id), e.what()});
    }
  }
  if (const auto* token = list->child("resumptionToken")) {
    auto value = trim_copy(token->text_content());
    if (!value.empty()) page.resumption_token = std::move(value);
  }
  return page;
}

std::string list_records_url(const HarvestOptions& options, const std::optional<std::string>& token) {
  const char sep = options.endpoint.find('?') == std::string::npos ? '?' : '&';
  if (token) return fmt::format("{}{}verb=ListRecords&resumptionToken={}", options.endpoint, sep, net::url_encode(*token));
  std::string url = fmt::format("{}{}verb=ListRecords&metadataPrefix=oai_dc", options.endpoint, sep);
  if (options.from) url += "&from=" + net::url_encode(*options.from);
  if (options.set) url += "&set=" + net::url_encode(*options.set);
  return url;
}

HarvestCheckpoint OaiHarvester::run(const HarvestOptions& options, const std::optional<HarvestCheckpoint>& resume,
                                    const RecordSink& on_record, const CheckpointSink& on_checkpoint,
                                    const SkipSink& on_skip) {
  HarvestCheckpoint cp;
  if (resume) {
    cp = *resume;
    if (cp.completed) return cp;
    if (cp.pages > 0 && !cp.resumption_token)
      throw Error("checkpoint has harvested pages but no resumption token and is not completed");
  } else {
    cp.endpoint = options.endpoint;
    cp.from = options.from;
    cp.set = options.set;
  }
  HarvestOptions effective = options;
  effective.endpoint = cp.endpoint;
  effective.from = cp.from;
  effective.set = cp.set;

  for (std::uint64_t pages_this_run = 0;; ++pages_this_run) {
    if (options.max_pages && pages_this_run >= *options.max_pages) return cp;
    const std::string url = list_records_url(effective, cp.resumption_token);
    const net::HttpResponse response = client_.get(url);
    if (response.status != 200) throw net::HttpFailure(url, response.status, fmt::format("HTTP {}", response.status));
    const OaiPage page = parse_list_records(response.body);

    for (const auto& r : page.records) on_record(r);
    if (on_skip)
      for (const auto& s : page.skipped) on_skip(s);
    cp.records_received += page.records.size();
    ++cp.pages;
    cp.resumption_token = page.resumption_token;
    cp.completed = !page.resumption_token.has_value();
    on_checkpoint(cp);
    if (cp.completed) return cp;
  }
}

std::string OaiHarvester::identify(const std::string& endpoint) {
  const char sep = endpoint.find('?') == std::string::npos ? '?' : '&';
  const std::string url = fmt::format("{}{}verb=Identify", endpoint, sep);
  const auto response = client_.get(url);
  if (response.status != 200) throw net::HttpFailure(url, response.status, fmt::format("HTTP {}", response.status));
  const xml::Node root = xml::parse(response.body);
  const xml::Node* identify = root.child("Identify");
  if (!identify) throw Error("Identify response lacks <Identify>");
  const xml::Node* name = identify->child("repositoryName");
  return name ? trim_copy(name->text_content()) : std::string{};
}

// ---------------------------------------------------------------------------
// DOI filter

double DoiPartition::percent_with_doi() const noexcept {
  const auto n = total();
  return n == 0 ? 0.0 : 100.0 * static_cast<double>(with_doi.size()) / static_cast<double>(n);
}

std::string group_thousands(std::uint64_t n) {
  std::string digits = std::to_string(n);
  std::string out;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (i != 0 && (digits.size() - i) % 3 == 0) out.push_back(',');
    out.push_back(digits[i]);
  }
  return out;
}

std::string format_percent(double percent) {
  std::string s = fmt::format("{:.1f}", percent);
  if (s.ends_with(".0")) s.resize(s.size() - 2);
  if (s == "-0") s = "0";
  return s;
}

std::string DoiPartition::summary() const {
  return fmt::format("{} of {} article records ({}%) contained a DOI", group_thousands(with_doi.size()),
                     group_thousands(total()), format_percent(percent_with_doi()));
}

DoiPartition filter_with_doi(std::vector<ArticleMetadata> records) {
  DoiPartition p;
  for (auto& r : records) {
    if (r.doi && !r.doi->empty()) p.with_doi.push_back(std::move(r));
    else p.without_doi.push_back(std::move(r));
  }
  return p;
}

// ---------------------------------------------------------------------------
// DOI registry

std::string_view to_string(ContentHint hint) {
  switch (hint) {
    case ContentHint::Xml: return "xml";
    case ContentHint::Pdf: return "pdf";
    case ContentHint::Unknown: break;
  }
  return "unknown";
}

ContentHint content_hint_from_media_type(std::string_view media_type) {
  std::string m = lower(trim_copy(media_type.substr(0, media_type.find(';'))));
  if (m == "application/pdf") return ContentHint::Pdf;
  if (m == "text/xml" || m == "application/xml" || m.ends_with("+xml")) return ContentHint::Xml;
  return ContentHint::Unknown;
}

namespace {

std::optional<Date> date_parts(const json& message, const char* key) {
  if (!message.contains(key)) return std::nullopt;
  const json& field = message.at(key);
  if (!field.is_object() || !field.contains("date-parts")) return std::nullopt;
  const json& parts = field.at("date-parts");
  if (!parts.is_array() || parts.empty() || !parts[0].is_array() || parts[0].size() < 3) return std::nullopt;
  const json& p = parts[0];
  if (!p[0].is_number_integer() || !p[1].is_number_integer() || !p[2].is_number_integer()) return std::nullopt;
  const Date d{std::chrono::year{p[0].get<int>()}, std::chrono::month{p[1].get<unsigned>()},
               std::chrono::day{p[2].get<unsigned>()}};
  if (!d.ok()) return std::nullopt;
  return d;
}

}  // namespace

WorkRecord parse_work_json(std::string_view text, std::string_view doi) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("registry response for {} is not valid JSON: {}", doi, e.what()), e.byte);
  }
  if (!j.is_object() || !j.contains("message") || !j.at("message").is_object())
    throw ParseError(fmt::format("registry response for {} lacks a message object", doi), 0);
  const json& m = j.at("message");

  WorkRecord w;
  w.doi = normalize_doi(doi);
  if (m.contains("publisher") && m.at("publisher").is_string()) w.publisher = m.at("publisher").get<std::string>();

  const auto print = date_parts(m, "published-print");
  const auto online = date_parts(m, "published-online");
  w.has_print_and_online = print && online;
  if (auto issued = date_parts(m, "issued")) w.publication_date = issued;
  else if (print) w.publication_date = print;
  else w.publication_date = online;

  if (m.contains("license") && m.at("license").is_array())
    for (const auto& l : m.at("license"))
      if (l.is_object() && l.contains("URL") && l.at("URL").is_string()) {
        w.license = l.at("URL").get<std::string>();
        break;
      }

  if (m.contains("link") && m.at("link").is_array()) {
    for (const auto& l : m.at("link")) {
      if (!l.is_object() || !l.contains("URL") || !l.at("URL").is_string()) continue;
      RegistryLink link;
      link.url = l.at("URL").get<std::string>();
      if (l.contains("content-type") && l.at("content-type").is_string())
        link.content_type = l.at("content-type").get<std::string>();
      if (l.contains("intended-application") && l.at("intended-application").is_string())
        link.intended_application = l.at("intended-application").get<std::string>();
      w.links.push_back(std::move(link));
    }
  }
  return w;
}

std::optional<FulltextLink> select_fulltext_link(const WorkRecord& work) {
  for (const auto& l : work.links) {
    if (l.intended_application != "text-mining") continue;
    const auto u = lower(l.url);
    if (!u.starts_with("http://") && !u.starts_with("https://")) continue;
    return FulltextLink{work.doi, l.url, content_hint_from_media_type(l.content_type), work.license};
  }
  return std::nullopt;
}

std::optional<WorkRecord> RegistryClient::work(const std::string& doi) {
  const std::string url = fmt::format("{}/works/{}", base_, net::url_encode(doi));
  const auto response = client_.get(url, {{"Accept", "application/json"}});
  if (response.status == 404) return std::nullopt;
  if (response.status != 200) throw net::HttpFailure(url, response.status, fmt::format("HTTP {}", response.status));
  return parse_work_json(response.body, doi);
}

std::optional<FulltextLink> RegistryClient::resolve_fulltext(const std::string& doi) {
  auto w = work(doi);
  if (!w) return std::nullopt;
  return select_fulltext_link(*w);
}

// ---------------------------------------------------------------------------
// Downloads

PayloadKind classify_payload(std::string_view media_type, std::string_view bytes, std::vector<std::string>* warnings) {
  PayloadKind declared = PayloadKind::Unknown;
  switch (content_hint_from_media_type(media_type)) {
    case ContentHint::Xml: declared = PayloadKind::Xml; break;
    case ContentHint::Pdf: declared = PayloadKind::Pdf; break;
    case ContentHint::Unknown: break;
  }

  std::string_view head = bytes;
  if (head.starts_with("\xEF\xBB\xBF")) head.remove_prefix(3);
  while (!head.empty() && std::isspace(static_cast<unsigned char>(head.front()))) head.remove_prefix(1);
  PayloadKind magic = PayloadKind::Unknown;
  if (head.starts_with("%PDF-")) magic = PayloadKind::Pdf;
  else if (head.starts_with("<")) magic = PayloadKind::Xml;

  auto name = [](PayloadKind k) { return k == PayloadKind::Xml ? "XML" : k == PayloadKind::Pdf ? "PDF" : "unknown"; };
  if (magic == PayloadKind::Unknown) return declared;
  if (declared != PayloadKind::Unknown && declared != magic && warnings)
    warnings->push_back(fmt::format("media type \"{}\" says {} but content is {}; using {}", media_type, name(declared),
                                    name(magic), name(magic)));
  return magic;
}

DownloadOutcome download_fulltext(net::PoliteClient& client, const FulltextLink& link) {
  DownloadOutcome out;
  out.doi = link.doi;
  net::HttpResponse response;
  try {
    response = client.get(link.url);
  } catch (const net::HttpFailure& e) {
    out.failure = e.what();
    return out;
  }
  if (response.status < 200 || response.status > 299) {
    out.failure = fmt::format("GET {}: HTTP {}", link.url, response.status);
    return out;
  }
  const auto media = response.header("Content-Type").value_or("");
  const PayloadKind kind = classify_payload(media, response.body, &out.warnings);
  if (kind == PayloadKind::Unknown) {
    out.failure = fmt::format("GET {}: unrecognized payload (media type \"{}\")", link.url, media);
    return out;
  }
  extract::RawDocument doc;
  doc.bytes = std::move(response.body);
  doc.format = kind == PayloadKind::Xml ? extract::DocFormat::PublisherXml : extract::DocFormat::Pdf;
  doc.locator = link.url;
  out.document = std::move(doc);
  return out;
}

// ---------------------------------------------------------------------------
// Pairing

std::vector<AmbiguousDoi> find_ambiguous_dois(const std::vector<ArticleMetadata>& articles) {
  std::map<std::string, std::set<std::string>> claims;
  for (const auto& a : articles)
    if (a.doi && !a.doi->empty()) claims[*a.doi].insert(a.arxiv_id);
  std::vector<AmbiguousDoi> out;
  for (auto& [doi, ids] : claims)
    if (ids.size() > 1) out.push_back({doi, {ids.begin(), ids.end()}});
  return out;
}

PairingResult build_pairs(const std::vector<ArticleMetadata>& articles, const std::vector<DownloadRecord>& downloads,
                          const std::map<std::string, WorkRecord>& works) {
  PairingResult result;
  result.ambiguous = find_ambiguous_dois(articles);
  std::set<std::string> ambiguous;
  for (const auto& a : result.ambiguous) ambiguous.insert(a.doi);

  std::map<std::string, const ArticleMetadata*> by_doi;
  for (const auto& a : articles)
    if (a.doi && !a.doi->empty() && !ambiguous.contains(*a.doi)) by_doi[*a.doi] = &a;

  // One outcome per DOI, chosen independently of input order: any success
  // beats failure, ties go to the smallest file path.
  std::map<std::string, const DownloadRecord*> chosen;
  for (const auto& d : downloads) {
    if (!by_doi.contains(d.doi)) continue;
    auto [it, inserted] = chosen.emplace(d.doi, &d);
    if (inserted) continue;
    const DownloadRecord* cur = it->second;
    if (std::tie(d.succeeded, cur->published_file) > std::tie(cur->succeeded, d.published_file)) it->second = &d;
  }

  for (const auto& [doi, d] : chosen) {
    ++result.attempted;
    if (!d->succeeded) {
      ++result.failed;
      continue;
    }
    const ArticleMetadata& a = *by_doi.at(doi);
    MatchedPair p;
    p.arxiv_id = a.arxiv_id;
    p.doi = doi;
    p.preprint_versions = a.versions;
    if (auto w = works.find(doi); w != works.end()) {
      p.publisher = w->second.publisher;
      p.publication_date = w->second.publication_date;
    }
    p.format = d->format;
    p.published_file = d->published_file;
    (p.format == PublishedFormat::Xml ? result.xml : result.pdf) += 1;
    result.pairs.push_back(std::move(p));
  }
  return result;
}

}  // namespace prepubdiff::harvest
