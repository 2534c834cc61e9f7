#include "prepubdiff/pipeline.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <cmath>
#include <cstring>
#include <exception>
#include <fstream>
#include <map>
#include <memory>
#include <ostream>
#include <set>
#include <sstream>
#include <thread>

#include <fmt/format.h>
#include <json.hpp>

#include "prepubdiff/error.hpp"
#include "prepubdiff/http.hpp"
#include "prepubdiff/section_extraction.hpp"

namespace prepubdiff::pipeline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Configuration

void RunConfig::validate() const {
  if (workers < 1) throw Error(fmt::format("workers must be >= 1 (got {})", workers));
  if (!(rate_per_host > 0.0) || !std::isfinite(rate_per_host))
    throw Error(fmt::format("rate-per-host must be > 0 (got {})", rate_per_host));
  if (max_attempts < 1) throw Error(fmt::format("max_attempts must be >= 1 (got {})", max_attempts));
  day_bins.validate();
}

namespace {

[[noreturn]] void config_error(const std::string& what) { throw Error("config.json: " + what); }

std::string config_string(const json& j, const char* key) {
  if (!j.at(key).is_string()) config_error(fmt::format("\"{}\" must be a string", key));
  return j.at(key).get<std::string>();
}

fs::path resolve(const fs::path& base, const fs::path& p) { return p.is_absolute() ? p : base / p; }

}  // namespace

void apply_config_json(RunConfig& c, std::string_view text) {
  json j;
  try {
    j = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("config.json is not valid JSON: {}", e.what()), e.byte);
  }
  if (!j.is_object()) config_error("expected an object");
  static const std::set<std::string> known = {
      "oai_endpoint", "oai_from",  "oai_set",         "registry_endpoint", "rate_per_host", "workers",
      "max_attempts", "stopwords", "normalize_punct", "policy",            "day_bins",      "contact",
      "replay_dir",   "record_dir", "publisher_rules", "charts"};
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) config_error(fmt::format("unknown field \"{}\"", key));

  const fs::path& base = c.workspace;
  if (j.contains("oai_endpoint")) c.oai_endpoint = config_string(j, "oai_endpoint");
  if (j.contains("oai_from")) c.oai_from = config_string(j, "oai_from");
  if (j.contains("oai_set")) c.oai_set = config_string(j, "oai_set");
  if (j.contains("registry_endpoint")) c.registry_endpoint = config_string(j, "registry_endpoint");
  if (j.contains("contact")) c.contact = config_string(j, "contact");
  if (j.contains("stopwords")) c.stopwords = resolve(base, config_string(j, "stopwords"));
  if (j.contains("replay_dir")) c.replay_dir = resolve(base, config_string(j, "replay_dir"));
  if (j.contains("record_dir")) c.record_dir = resolve(base, config_string(j, "record_dir"));
  if (j.contains("publisher_rules")) c.publisher_rules = resolve(base, config_string(j, "publisher_rules"));
  if (j.contains("rate_per_host")) {
    if (!j.at("rate_per_host").is_number()) config_error("\"rate_per_host\" must be a number");
    c.rate_per_host = j.at("rate_per_host").get<double>();
  }
  for (auto [key, target] : {std::pair{"workers", &c.workers}, std::pair{"max_attempts", &c.max_attempts}}) {
    if (!j.contains(key)) continue;
    if (!j.at(key).is_number_integer()) config_error(fmt::format("\"{}\" must be an integer", key));
    *target = j.at(key).get<int>();
  }
  for (auto [key, target] : {std::pair{"normalize_punct", &c.normalize_punct}, std::pair{"charts", &c.charts}}) {
    if (!j.contains(key)) continue;
    if (!j.at(key).is_boolean()) config_error(fmt::format("\"{}\" must be true or false", key));
    *target = j.at(key).get<bool>();
  }
  if (j.contains("policy")) {
    auto p = parse_policy(config_string(j, "policy"));
    if (!p) config_error("\"policy\" must be \"latest\" or \"first\"");
    c.policy = *p;
  }
  if (j.contains("day_bins")) {
    const auto& v = j.at("day_bins");
    if (v.is_string()) {
      c.day_bins = analysis::DayBins::parse(v.get<std::string>());
    } else if (v.is_array()) {
      analysis::DayBins bins;
      bins.upper_bounds.clear();
      for (const auto& b : v) {
        if (!b.is_number_integer()) config_error("\"day_bins\" entries must be integers");
        bins.upper_bounds.push_back(b.get<std::int64_t>());
      }
      bins.validate();
      c.day_bins = bins;
    } else {
      config_error("\"day_bins\" must be an array or a comma-separated string");
    }
  }
}

RunConfig load_config(const fs::path& workspace) {
  RunConfig c;
  c.workspace = workspace;
  const fs::path file = workspace / "config.json";
  if (fs::exists(file)) apply_config_json(c, read_file(file));
  return c;
}

// ---------------------------------------------------------------------------
// Workspace plumbing

WorkspaceLock::WorkspaceLock(fs::path path) : path_(std::move(path)) {
  const int fd = ::open(path_.c_str(), O_WRONLY | O_CREAT | O_EXCL, 0644);
  if (fd < 0) {
    if (errno == EEXIST)
      throw Error(fmt::format("workspace is locked by another run ({} exists; remove it if stale)", path_.string()));
    throw Error(fmt::format("cannot create {}: {}", path_.string(), std::strerror(errno)));
  }
  const std::string pid = std::to_string(::getpid()) + "\n";
  [[maybe_unused]] auto n = ::write(fd, pid.data(), pid.size());
  ::close(fd);
}

WorkspaceLock::~WorkspaceLock() {
  std::error_code ec;
  fs::remove(path_, ec);
}

RunLog::RunLog(fs::path path) : path_(std::move(path)) {}

void RunLog::event(std::string_view stage, std::string_view message) {
  std::lock_guard lock(mutex_);
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  out << utc_timestamp_now() << ' ' << stage << ' ' << message << '\n';
}

Status worst(Status a, Status b) { return static_cast<int>(a) >= static_cast<int>(b) ? a : b; }

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn) {
  const std::size_t threads = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i; (i = next.fetch_add(1)) < n;) {
        try {
          fn(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  pool.clear();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

void write_file(const fs::path& path, std::string_view content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write {}", tmp.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(fmt::format("write failed for {}", tmp.string()));
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read {}", path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

namespace {

struct Network {
  std::unique_ptr<net::Transport> transport;
  std::unique_ptr<net::Transport> recorder;
  std::unique_ptr<net::Clock> clock;
  std::unique_ptr<net::HostRateLimiter> limiter;
  std::unique_ptr<net::PoliteClient> client;
};

Network connect(const RunConfig& c) {
  Network n;
  if (c.replay_dir) {
    n.transport = std::make_unique<net::ReplayTransport>(*c.replay_dir);
    n.clock = std::make_unique<net::SimulatedClock>();
  } else {
    n.transport = std::make_unique<net::HttplibTransport>();
    n.clock = std::make_unique<net::SystemClock>();
  }
  net::Transport* t = n.transport.get();
  if (c.record_dir) {
    n.recorder = std::make_unique<net::RecordingTransport>(*t, *c.record_dir);
    t = n.recorder.get();
  }
  const auto interval = std::chrono::duration_cast<net::Clock::duration>(std::chrono::duration<double>(1.0 / c.rate_per_host));
  n.limiter = std::make_unique<net::HostRateLimiter>(*n.clock, interval);
  net::RetryPolicy policy;
  policy.max_attempts = c.max_attempts;
  n.client = std::make_unique<net::PoliteClient>(*t, *n.clock, *n.limiter, policy, net::user_agent(c.contact));
  return n;
}

void log(Context& ctx, std::string_view stage, const std::string& message) {
  if (ctx.log) ctx.log->event(stage, message);
}

void say(Context& ctx, const std::string& line) {
  if (ctx.out) *ctx.out << line << '\n';
}

CorpusManifest require_manifest(const Context& ctx) { return load_manifest(ctx.ws.manifest()); }

std::string counters_line(const CorpusCounters& c) {
  return fmt::format("records_harvested={} records_with_doi={} downloads_attempted={} downloads_failed={} xml={} pdf={}",
                     c.records_harvested, c.records_with_doi, c.downloads_attempted, c.downloads_failed, c.xml_count,
                     c.pdf_count);
}

std::string rel(const fs::path& p) { return p.generic_string(); }

}  // namespace

// ---------------------------------------------------------------------------
// harvest

namespace {

void rebuild_articles(Context& ctx) {
  std::map<std::string, ArticleMetadata> unique;
  if (fs::exists(ctx.ws.records())) {
    std::ifstream in(ctx.ws.records(), std::ios::binary);
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
      ++n;
      if (line.empty()) continue;
      try {
        auto a = parse_article(line);
        unique[a.arxiv_id] = std::move(a);
      } catch (const ParseError& e) {
        throw Error(fmt::format("{} line {}: {}", ctx.ws.records().string(), n, e.what()));
      }
    }
  }
  CorpusManifest m;
  if (fs::exists(ctx.ws.manifest())) m = require_manifest(ctx);
  else m.created = utc_timestamp_now();
  m.articles.clear();
  for (auto& [id, a] : unique) m.articles.push_back(std::move(a));
  auto partition = harvest::filter_with_doi(m.articles);
  m.counters.records_harvested = partition.total();
  m.counters.records_with_doi = partition.with_doi.size();
  save_manifest(ctx.ws.manifest(), m);
  say(ctx, partition.summary());
  log(ctx, "harvest", partition.summary());
  log(ctx, "harvest", counters_line(m.counters));
}

}  // namespace

Status run_harvest(Context& ctx, const HarvestArgs& args) {
  const auto& c = ctx.config;
  if (args.restart) {
    fs::remove(ctx.ws.checkpoint());
    fs::remove(ctx.ws.records());
  }
  auto resume = harvest::load_checkpoint(ctx.ws.checkpoint());
  if (resume && resume->completed) {
    say(ctx, fmt::format("harvest already complete ({} records); use --restart to harvest again", resume->records_received));
    rebuild_articles(ctx);
    return Status::Ok;
  }

  auto network = connect(c);
  harvest::OaiHarvester harvester(*network.client);
  harvest::HarvestOptions options;
  options.endpoint = c.oai_endpoint;
  options.from = c.oai_from;
  options.set = c.oai_set;
  options.max_pages = args.max_pages;

  fs::create_directories(ctx.ws.records().parent_path());
  std::ofstream records(ctx.ws.records(), std::ios::binary | std::ios::app);
  if (!records) throw Error("cannot append to " + ctx.ws.records().string());
  std::uint64_t skipped = 0;
  log(ctx, "harvest", fmt::format("start endpoint={} resume={}", resume ? resume->endpoint : options.endpoint,
                                  resume ? resume->resumption_token.value_or("-") : "-"));
  harvest::HarvestCheckpoint cp;
  try {
    cp = harvester.run(
        options, resume, [&](const ArticleMetadata& a) { records << serialize_article(a) << '\n'; },
        [&](const harvest::HarvestCheckpoint& checkpoint) {
          records.flush();
          harvest::save_checkpoint(ctx.ws.checkpoint(), checkpoint);
          log(ctx, "harvest", fmt::format("page {} records={}", checkpoint.pages, checkpoint.records_received));
        },
        [&](const harvest::SkippedRecord& s) {
          ++skipped;
          log(ctx, "harvest", fmt::format("skipped record {}: {}", s.identifier.empty() ? "?" : s.identifier, s.reason));
        });
  } catch (const Error& e) {
    records.flush();
    log(ctx, "harvest", fmt::format("aborted: {}", e.what()));
    throw Error(fmt::format("harvest aborted ({}); rerun to resume from the last checkpoint", e.what()));
  }
  records.close();

  if (!cp.completed) {
    say(ctx, fmt::format("harvest paused after {} pages ({} records); rerun to resume", cp.pages, cp.records_received));
    log(ctx, "harvest", fmt::format("paused pages={} records={}", cp.pages, cp.records_received));
    return Status::Partial;
  }
  log(ctx, "harvest", fmt::format("complete pages={} records={} skipped={}", cp.pages, cp.records_received, skipped));
  rebuild_articles(ctx);
  return skipped ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// match

namespace {

nlohmann::ordered_json work_to_json(const std::string& doi, const std::optional<harvest::WorkRecord>& w) {
  nlohmann::ordered_json j;
  j["doi"] = doi;
  j["found"] = w.has_value();
  if (!w) return j;
  j["publisher"] = w->publisher ? json(*w->publisher) : json(nullptr);
  j["pub_date"] = w->publication_date ? json(format_date(*w->publication_date)) : json(nullptr);
  j["print_and_online"] = w->has_print_and_online;
  j["license"] = w->license ? json(*w->license) : json(nullptr);
  nlohmann::ordered_json links = nlohmann::ordered_json::array();
  for (const auto& l : w->links)
    links.push_back({{"url", l.url}, {"content_type", l.content_type}, {"intended_application", l.intended_application}});
  j["links"] = links;
  return j;
}

std::map<std::string, harvest::WorkRecord> load_works(const Workspace& ws) {
  if (!fs::exists(ws.works())) throw MissingArtifact(ws.works().string(), "match");
  const std::string text = read_file(ws.works());
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(fmt::format("works.json: {}", e.what()), e.byte);
  }
  std::map<std::string, harvest::WorkRecord> works;
  for (const auto& j : doc.at("works")) {
    if (!j.value("found", false)) continue;
    harvest::WorkRecord w;
    w.doi = j.at("doi").get<std::string>();
    if (j.contains("publisher") && j.at("publisher").is_string()) w.publisher = j.at("publisher").get<std::string>();
    if (j.contains("pub_date") && j.at("pub_date").is_string()) w.publication_date = parse_date(j.at("pub_date").get<std::string>());
    w.has_print_and_online = j.value("print_and_online", false);
    if (j.contains("license") && j.at("license").is_string()) w.license = j.at("license").get<std::string>();
    for (const auto& l : j.at("links"))
      w.links.push_back({l.at("url").get<std::string>(), l.value("content_type", ""), l.value("intended_application", "")});
    works.emplace(w.doi, std::move(w));
  }
  return works;
}

}  // namespace

Status run_match(Context& ctx) {
  CorpusManifest m = require_manifest(ctx);
  m.ambiguous = harvest::find_ambiguous_dois(m.articles);
  std::set<std::string> ambiguous;
  for (const auto& a : m.ambiguous) {
    ambiguous.insert(a.doi);
    log(ctx, "match", fmt::format("ambiguous DOI {} claimed by {}", a.doi, fmt::join(a.arxiv_ids, ", ")));
  }
  std::set<std::string> dois;
  for (const auto& a : m.articles)
    if (a.doi && !ambiguous.contains(*a.doi)) dois.insert(*a.doi);
  const std::vector<std::string> todo(dois.begin(), dois.end());

  auto network = connect(ctx.config);
  harvest::RegistryClient registry(*network.client, ctx.config.registry_endpoint);
  std::vector<std::optional<harvest::WorkRecord>> results(todo.size());
  std::vector<std::string> failures(todo.size());
  parallel_for(todo.size(), ctx.config.workers, [&](std::size_t i) {
    try {
      results[i] = registry.work(todo[i]);
    } catch (const Error& e) {
      failures[i] = e.what();
    }
  });

  nlohmann::ordered_json works = nlohmann::ordered_json::array();
  std::size_t found = 0, with_link = 0, failed = 0, both_dates = 0;
  for (std::size_t i = 0; i < todo.size(); ++i) {
    if (!failures[i].empty()) {
      ++failed;
      log(ctx, "match", fmt::format("lookup failed for {}: {}", todo[i], failures[i]));
      continue;
    }
    if (results[i]) {
      ++found;
      if (harvest::select_fulltext_link(*results[i])) ++with_link;
      if (results[i]->has_print_and_online) {
        ++both_dates;
        log(ctx, "match", fmt::format("{} carries both print and online dates; using issued date", todo[i]));
      }
    }
    works.push_back(work_to_json(todo[i], results[i]));
  }
  write_file(ctx.ws.works(), nlohmann::ordered_json{{"works", works}}.dump(2) + "\n");
  save_manifest(ctx.ws.manifest(), m);
  const auto summary = fmt::format("dois={} ambiguous={} found={} text_mining_links={} failed={} print_and_online={}",
                                   todo.size(), m.ambiguous.size(), found, with_link, failed, both_dates);
  say(ctx, summary);
  log(ctx, "match", summary);
  return failed ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// fetch

Status run_fetch(Context& ctx) {
  CorpusManifest m = require_manifest(ctx);
  const auto works = load_works(ctx.ws);

  std::map<std::string, std::string> owner;  // doi -> arxiv_id
  for (const auto& a : m.articles)
    if (a.doi) owner[*a.doi] = a.arxiv_id;
  std::set<std::string> ambiguous;
  for (const auto& a : harvest::find_ambiguous_dois(m.articles)) ambiguous.insert(a.doi);

  std::vector<harvest::FulltextLink> links;
  for (const auto& [doi, w] : works) {
    if (ambiguous.contains(doi) || !owner.contains(doi)) continue;
    if (auto link = harvest::select_fulltext_link(w)) links.push_back(*link);
  }

  auto network = connect(ctx.config);
  std::vector<harvest::DownloadRecord> downloads(links.size());
  std::vector<std::vector<std::string>> warnings(links.size());
  parallel_for(links.size(), ctx.config.workers, [&](std::size_t i) {
    auto outcome = harvest::download_fulltext(*network.client, links[i]);
    auto& d = downloads[i];
    d.doi = links[i].doi;
    warnings[i] = outcome.warnings;
    if (!outcome.ok()) {
      d.failure = outcome.failure;
      return;
    }
    const bool xml = outcome.document->format == extract::DocFormat::PublisherXml;
    const std::string pid = pair_id(owner.at(d.doi));
    const fs::path relative = fs::path("published") / (pid + (xml ? ".xml" : ".pdf"));
    write_file(ctx.ws.root / relative, outcome.document->bytes);
    d.succeeded = true;
    d.format = xml ? PublishedFormat::Xml : PublishedFormat::Pdf;
    d.published_file = rel(relative);
  });
  for (std::size_t i = 0; i < links.size(); ++i) {
    for (const auto& w : warnings[i]) log(ctx, "fetch", fmt::format("{}: {}", links[i].doi, w));
    if (!downloads[i].succeeded) log(ctx, "fetch", fmt::format("download failed for {}: {}", links[i].doi, downloads[i].failure));
  }

  auto result = harvest::build_pairs(m.articles, downloads, works);
  std::map<std::string, std::map<int, std::string>> imported;
  for (auto& p : m.pairs) imported[p.arxiv_id] = std::move(p.preprint_files);
  for (auto& p : result.pairs)
    if (auto it = imported.find(p.arxiv_id); it != imported.end()) p.preprint_files = it->second;
  m.pairs = std::move(result.pairs);
  m.ambiguous = std::move(result.ambiguous);
  m.counters.downloads_attempted = result.attempted;
  m.counters.downloads_failed = result.failed;
  m.counters.xml_count = result.xml;
  m.counters.pdf_count = result.pdf;
  save_manifest(ctx.ws.manifest(), m);

  const auto summary = fmt::format("pairs={} {}", m.pairs.size(), counters_line(m.counters));
  say(ctx, summary);
  log(ctx, "fetch", counters_line(m.counters));
  return result.failed ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// import-preprints

Status run_import_preprints(Context& ctx, const fs::path& source) {
  if (!fs::is_directory(source)) throw Error(fmt::format("{} is not a directory", source.string()));
  CorpusManifest m = require_manifest(ctx);
  std::size_t files = 0, empty_pairs = 0;
  for (auto& p : m.pairs) {
    const std::string pid = pair_id(p.arxiv_id);
    p.preprint_files.clear();
    for (const auto& v : p.preprint_versions) {
      const std::string stem = fmt::format("{}v{}", pid, v.number);
      const fs::path dest_dir = ctx.ws.preprints_dir() / pid;
      const fs::path plain = source / pid / fmt::format("v{}", v.number);
      std::string relative;
      if (fs::is_directory(plain)) {
        const fs::path dest = dest_dir / fmt::format("v{}", v.number);
        fs::remove_all(dest);
        fs::create_directories(dest);
        fs::copy(plain, dest, fs::copy_options::recursive | fs::copy_options::overwrite_existing);
        relative = rel(fs::path("preprints") / pid / fmt::format("v{}", v.number));
      } else {
        for (const char* ext : {".tei.xml", ".pdf"}) {
          const fs::path file = source / (stem + ext);
          if (!fs::is_regular_file(file)) continue;
          fs::create_directories(dest_dir);
          const std::string name = fmt::format("v{}{}", v.number, ext);
          fs::copy_file(file, dest_dir / name, fs::copy_options::overwrite_existing);
          if (std::string_view(ext) == ".pdf") {
            const fs::path tei = source / (stem + ".tei.xml");
            if (fs::is_regular_file(tei))
              fs::copy_file(tei, dest_dir / fmt::format("v{}.tei.xml", v.number), fs::copy_options::overwrite_existing);
          }
          relative = rel(fs::path("preprints") / pid / name);
          break;
        }
      }
      if (relative.empty()) continue;
      p.preprint_files[v.number] = relative;
      ++files;
    }
    if (p.preprint_files.empty()) {
      ++empty_pairs;
      log(ctx, "import-preprints", fmt::format("no pre-print files found for {}", p.arxiv_id));
    }
  }
  save_manifest(ctx.ws.manifest(), m);
  const auto summary = fmt::format("imported {} version files for {} pairs; {} pairs without any", files,
                                   m.pairs.size() - empty_pairs, empty_pairs);
  say(ctx, summary);
  log(ctx, "import-preprints", summary);
  return empty_pairs ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// extract

namespace {

struct SideJob {
  std::string pid;
  std::string label;
  fs::path input;
  fs::path output;
  enum Kind { PublisherXml, Tei, Pdf, Plain } kind;
};

SectionSet segmenter_missing() {
  SectionSet s;
  s.source = SectionSource::SegmentedTei;
  s.flags = {ExtractionFlag::SegmenterFailure, ExtractionFlag::TitleMissing, ExtractionFlag::AbstractMissing,
             ExtractionFlag::BodyMissing};
  return s;
}

fs::path tei_sibling(const fs::path& pdf) {
  auto p = pdf;
  p.replace_extension(".tei.xml");
  return p;
}

}  // namespace

Status run_extract(Context& ctx) {
  const CorpusManifest m = require_manifest(ctx);
  extract::PublisherRules rules = extract::PublisherRules::builtin();
  if (ctx.config.publisher_rules) rules.prepend(extract::PublisherRules::load(*ctx.config.publisher_rules));

  std::vector<SideJob> jobs;
  auto kind_of = [](const std::string& file, bool published_xml) {
    if (published_xml) return SideJob::PublisherXml;
    if (file.ends_with(".tei.xml")) return SideJob::Tei;
    if (file.ends_with(".pdf")) return SideJob::Pdf;
    return SideJob::Plain;
  };
  for (const auto& p : m.pairs) {
    const std::string pid = pair_id(p.arxiv_id);
    jobs.push_back({pid, "published", ctx.ws.root / p.published_file, ctx.ws.published_sections(pid),
                    kind_of(p.published_file, p.format == PublishedFormat::Xml)});
    for (const auto& [n, file] : p.preprint_files)
      jobs.push_back({pid, fmt::format("preprint v{}", n), ctx.ws.root / file, ctx.ws.preprint_sections(pid, n),
                      kind_of(file, false)});
  }

  std::vector<std::string> errors(jobs.size());
  std::vector<char> queued(jobs.size(), 0);
  parallel_for(jobs.size(), ctx.config.workers, [&](std::size_t i) {
    const auto& job = jobs[i];
    try {
      SectionSet sections;
      switch (job.kind) {
        case SideJob::PublisherXml:
          sections = extract::parse_publisher_xml({read_file(job.input), extract::DocFormat::PublisherXml, job.input.string()}, rules);
          break;
        case SideJob::Tei:
          sections = extract::parse_tei({read_file(job.input), extract::DocFormat::SegmentedTei, job.input.string()});
          break;
        case SideJob::Pdf: {
          const auto tei = tei_sibling(job.input);
          if (fs::exists(tei)) {
            sections = extract::parse_tei({read_file(tei), extract::DocFormat::SegmentedTei, tei.string()});
          } else {
            sections = segmenter_missing();
            queued[i] = 1;
          }
          break;
        }
        case SideJob::Plain:
          if (!fs::is_directory(job.input)) throw Error(fmt::format("{} is not a directory", job.input.string()));
          sections = extract::read_plain_sections(job.input);
          break;
      }
      extract::write_sections(job.output, sections);
    } catch (const Error& e) {
      errors[i] = e.what();
    }
    if (!errors[i].empty()) {
      std::error_code ec;
      fs::remove_all(job.output, ec);
    }
  });

  std::size_t failed = 0;
  std::vector<std::string> queue;
  for (std::size_t i = 0; i < jobs.size(); ++i) {
    if (!errors[i].empty()) {
      ++failed;
      log(ctx, "extract", fmt::format("{} {}: {}", jobs[i].pid, jobs[i].label, errors[i]));
    }
    if (queued[i]) queue.push_back(rel(fs::relative(jobs[i].input, ctx.ws.root)));
  }
  std::sort(queue.begin(), queue.end());
  std::string queue_text;
  for (const auto& q : queue) queue_text += q + "\n";
  write_file(ctx.ws.segmenter_queue(), queue_text);
  fs::create_directories(ctx.ws.sections_dir());

  const auto summary = fmt::format("documents={} extracted={} failed={} awaiting_segmenter={}", jobs.size(),
                                   jobs.size() - failed, failed, queue.size());
  say(ctx, summary);
  log(ctx, "extract", summary);
  return failed ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// compare

Status run_compare(Context& ctx) {
  const CorpusManifest m = require_manifest(ctx);
  if (!fs::is_directory(ctx.ws.sections_dir())) throw MissingArtifact(ctx.ws.sections_dir().string(), "extract");

  std::optional<metrics::StopwordList> custom;
  if (ctx.config.stopwords) custom = metrics::StopwordList::load(*ctx.config.stopwords);
  analysis::CompareOptions options;
  options.policy = ctx.config.policy;
  options.normalize.punctuation = ctx.config.normalize_punct;
  options.stopwords = custom ? &*custom : nullptr;

  std::vector<const MatchedPair*> pairs;
  for (const auto& p : m.pairs) pairs.push_back(&p);
  std::sort(pairs.begin(), pairs.end(),
            [](const MatchedPair* a, const MatchedPair* b) { return pair_id(a->arxiv_id) < pair_id(b->arxiv_id); });

  struct Outcome {
    analysis::PairComparison comparison;
    std::string excluded;
  };
  std::vector<Outcome> outcomes(pairs.size());
  parallel_for(pairs.size(), ctx.config.workers, [&](std::size_t i) {
    const MatchedPair& p = *pairs[i];
    const std::string pid = pair_id(p.arxiv_id);
    try {
      const auto version = analysis::select_version(p, options.policy);
      const SectionSet preprint = extract::read_sections(ctx.ws.preprint_sections(pid, version.number));
      const SectionSet published = extract::read_sections(ctx.ws.published_sections(pid));
      outcomes[i].comparison = analysis::compare_pair(pid, preprint, published, options);
    } catch (const MissingArtifact&) {
      outcomes[i].excluded = "sections not extracted";
    } catch (const Error& e) {
      outcomes[i].excluded = e.what();
    }
  });

  std::vector<ScoreRecord> scores;
  std::vector<analysis::SkippedSection> skipped;
  std::map<Section, std::pair<std::uint64_t, std::uint64_t>> counts;  // compared, skipped
  std::size_t excluded = 0, warnings = 0;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const std::string pid = pair_id(pairs[i]->arxiv_id);
    auto& o = outcomes[i];
    if (!o.excluded.empty()) {
      ++excluded;
      log(ctx, "compare", fmt::format("{} excluded: {}", pid, o.excluded));
      for (Section s : kSections) {
        skipped.push_back({pid, s, "pair excluded: " + o.excluded});
        ++counts[s].second;
      }
      continue;
    }
    for (const auto& w : o.comparison.warnings) {
      ++warnings;
      log(ctx, "compare", w);
    }
    std::set<Section> scored;
    for (const auto& r : o.comparison.scores) scored.insert(r.section);
    for (Section s : scored) ++counts[s].first;
    for (auto& s : o.comparison.skipped) {
      ++counts[s.section].second;
      skipped.push_back(std::move(s));
    }
    scores.insert(scores.end(), o.comparison.scores.begin(), o.comparison.scores.end());
  }
  analysis::sort_scores(scores);

  const fs::path dir = ctx.ws.run_dir(options.policy);
  std::ostringstream scores_csv, skipped_csv, counts_csv;
  analysis::write_scores_csv(scores_csv, scores);
  analysis::write_skipped_csv(skipped_csv, skipped);
  counts_csv << "section,compared,skipped\n";
  for (Section s : kSections) counts_csv << fmt::format("{},{},{}\n", to_string(s), counts[s].first, counts[s].second);
  write_file(dir / "scores.csv", scores_csv.str());
  write_file(dir / "skipped.csv", skipped_csv.str());
  write_file(dir / "section_counts.csv", counts_csv.str());

  const auto summary =
      fmt::format("policy={} pairs={} excluded={} scores={} title={} abstract={} body={} cosine_warnings={}",
                  to_string(options.policy), pairs.size(), excluded, scores.size(), counts[Section::Title].first,
                  counts[Section::Abstract].first, counts[Section::Body].first, warnings);
  say(ctx, summary);
  log(ctx, "compare", summary);
  return excluded ? Status::Partial : Status::Ok;
}

// ---------------------------------------------------------------------------
// report / delta

Status run_report(Context& ctx) {
  const VersionPolicy policy = ctx.config.policy;
  const fs::path dir = ctx.ws.run_dir(policy);
  if (!fs::exists(dir / "scores.csv"))
    throw MissingArtifact((dir / "scores.csv").string(), fmt::format("compare --policy {}", to_string(policy)));
  const auto scores = analysis::read_scores_csv(read_file(dir / "scores.csv"));
  const auto histograms = analysis::bin_scores(scores, policy);
  std::ostringstream csv;
  analysis::write_histogram_csv(csv, histograms);
  write_file(dir / "histogram.csv", csv.str());
  if (ctx.config.charts)
    for (const auto& h : histograms)
      write_file(dir / "charts" / fmt::format("histogram_{}_{}.svg", to_string(h.metric), to_string(h.section)),
                 analysis::histogram_svg(h));
  const auto summary = fmt::format("policy={} scores={} histograms={}", to_string(policy), scores.size(), histograms.size());
  say(ctx, summary);
  log(ctx, "report", summary);
  return Status::Ok;
}

Status run_delta(Context& ctx, VersionPolicy old_policy, VersionPolicy new_policy) {
  auto load = [&](VersionPolicy p) {
    const fs::path file = ctx.ws.run_dir(p) / "histogram.csv";
    if (!fs::exists(file)) throw MissingArtifact(file.string(), fmt::format("report --policy {}", to_string(p)));
    return analysis::read_histogram_csv(read_file(file));
  };
  const auto old_run = load(old_policy);
  const auto new_run = load(new_policy);
  const auto report = analysis::delta_report(old_run, new_run);
  std::ostringstream csv;
  analysis::write_delta_csv(csv, report);
  write_file(ctx.ws.runs() / "delta.csv", csv.str());
  if (ctx.config.charts)
    for (Metric metric : kMetrics)
      write_file(ctx.ws.runs() / "charts" / fmt::format("delta_{}.svg", to_string(metric)),
                 analysis::delta_svg(report, metric));
  std::size_t undefined = 0;
  for (const auto& c : report.cells) undefined += c.proportional_delta ? 0 : 1;
  const auto summary = fmt::format("old={} new={} cells={} undefined_proportional={}", to_string(old_policy),
                                   to_string(new_policy), report.cells.size(), undefined);
  say(ctx, summary);
  log(ctx, "delta", summary);
  return Status::Ok;
}

// ---------------------------------------------------------------------------
// order / categories / validate

Status run_order(Context& ctx) {
  const CorpusManifest m = require_manifest(ctx);
  const VersionPolicy policy = ctx.config.policy;
  std::uint64_t excluded = 0;
  const auto stats = analysis::order_stats(m, policy, &excluded);
  const auto histogram = analysis::order_histogram(stats, ctx.config.day_bins, excluded);
  const fs::path dir = ctx.ws.run_dir(policy);
  std::ostringstream order_csv, histogram_csv;
  analysis::write_order_csv(order_csv, stats);
  analysis::write_order_histogram_csv(histogram_csv, histogram);
  write_file(dir / "order.csv", order_csv.str());
  write_file(dir / "order_histogram.csv", histogram_csv.str());
  write_file(dir / "order_summary.txt", histogram.summary());
  if (ctx.config.charts) write_file(dir / "charts" / "order.svg", analysis::order_svg(histogram));
  if (ctx.out) *ctx.out << histogram.summary();
  log(ctx, "order", fmt::format("policy={} preprint_first={} publisher_first={} same_day={} excluded={}",
                                to_string(policy), histogram.preprint_first_total(), histogram.publisher_first_total(),
                                histogram.same_day, histogram.excluded));
  return Status::Ok;
}

Status run_categories(Context& ctx) {
  const CorpusManifest m = require_manifest(ctx);
  std::vector<ArticleMetadata> matched;
  for (const auto& p : m.pairs)
    if (const auto* a = m.find_article(p.arxiv_id)) matched.push_back(*a);
  const auto counts = analysis::category_distribution(matched);
  std::ostringstream csv;
  analysis::write_categories_csv(csv, counts);
  write_file(ctx.ws.runs() / "categories.csv", csv.str());
  for (const auto& c : counts) say(ctx, fmt::format("{} {}", c.category, c.count));
  log(ctx, "categories", fmt::format("pairs={} categories={}", matched.size(), counts.size()));
  return Status::Ok;
}

Status run_validate(Context& ctx) {
  const CorpusManifest m = require_manifest(ctx);
  const auto violations = validate_manifest(m);
  for (const auto& v : violations) say(ctx, v);
  const auto summary = fmt::format("articles={} pairs={} violations={} {}", m.articles.size(), m.pairs.size(),
                                   violations.size(), counters_line(m.counters));
  say(ctx, summary);
  log(ctx, "validate", summary);
  return violations.empty() ? Status::Ok : Status::Partial;
}

}  // namespace prepubdiff::pipeline
