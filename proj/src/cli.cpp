#include <cstdlib>
#include <optional>
#include <ostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "prepubdiff/error.hpp"
#include "prepubdiff/pipeline.hpp"

namespace prepubdiff::cli {

namespace {

struct Overrides {
  std::string workspace = ".";
  std::optional<std::string> policy;
  std::optional<int> workers;
  std::optional<double> rate_per_host;
  bool normalize_punct = false;
  std::optional<std::string> stopwords;
  std::optional<std::string> day_bins;
  std::optional<std::string> contact;
  std::optional<std::string> replay;
  std::optional<std::string> record;
  std::optional<std::string> publisher_rules;
  bool charts = false;
};

VersionPolicy policy_or_throw(const std::string& text) {
  auto p = parse_policy(text);
  if (!p) throw CLI::ValidationError("--policy", fmt::format("expected latest or first, got \"{}\"", text));
  return *p;
}

void apply(pipeline::RunConfig& c, const Overrides& o) {
  if (o.policy) c.policy = *parse_policy(*o.policy);
  if (o.workers) c.workers = *o.workers;
  if (o.rate_per_host) c.rate_per_host = *o.rate_per_host;
  if (o.normalize_punct) c.normalize_punct = true;
  if (o.stopwords) c.stopwords = *o.stopwords;
  if (o.day_bins) c.day_bins = analysis::DayBins::parse(*o.day_bins);
  if (o.contact) c.contact = *o.contact;
  else if (const char* env = std::getenv("PREPUBDIFF_CONTACT"); env && *env) c.contact = env;
  if (o.replay) c.replay_dir = *o.replay;
  if (o.record) c.record_dir = *o.record;
  if (o.publisher_rules) c.publisher_rules = *o.publisher_rules;
  if (o.charts) c.charts = true;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Measure how scholarly articles change between pre-print and published versions.", "prepubdiff"};
  app.require_subcommand(1, 1);
  app.fallthrough();

  Overrides o;
  app.add_option("--workspace", o.workspace, "Workspace directory")->capture_default_str();
  app.add_option("--policy", o.policy, "Pre-print version to compare: latest|first")
      ->check(CLI::IsMember({"latest", "first"}));
  app.add_option("--workers", o.workers, "Worker threads (>= 1)");
  app.add_option("--rate-per-host", o.rate_per_host, "Requests per second per host (> 0)");
  app.add_flag("--normalize-punct", o.normalize_punct, "Map dashes, quotes and ligatures to ASCII before comparing");
  app.add_option("--stopwords", o.stopwords, "Stopword file (one token per line, # comments)");
  app.add_option("--day-bins", o.day_bins, "Ascending day-range upper bounds, e.g. 30,90,180,365,730");
  app.add_option("--contact", o.contact, "Contact e-mail for the User-Agent (default: $PREPUBDIFF_CONTACT)");
  app.add_option("--replay", o.replay, "Serve network requests from recorded responses in this directory");
  app.add_option("--record", o.record, "Record network responses into this directory");
  app.add_option("--publisher-rules", o.publisher_rules, "Extra publisher XML rule table (JSON)");

  pipeline::HarvestArgs harvest_args;
  auto* harvest = app.add_subcommand("harvest", "Harvest OAI-PMH metadata (resumes from the checkpoint)");
  harvest->add_option("--max-pages", harvest_args.max_pages, "Stop after this many pages");
  harvest->add_flag("--restart", harvest_args.restart, "Discard the checkpoint and harvested records first");
  app.add_subcommand("match", "Look up harvested DOIs in the DOI registry");
  app.add_subcommand("fetch", "Download published full texts and build matched pairs");
  std::string import_source;
  auto* import = app.add_subcommand("import-preprints", "Import pre-print versions from a local directory");
  import->add_option("--from", import_source, "Directory with {pair}v{n}.tei.xml|.pdf or {pair}/v{n}/ sections")
      ->required();
  app.add_subcommand("extract", "Extract title, abstract and body sections");
  app.add_subcommand("compare", "Score every pair with the five metrics");
  auto* report = app.add_subcommand("report", "Bin scores into ten-bin histograms");
  report->add_flag("--charts", o.charts, "Also write SVG charts");
  std::string old_policy = "latest", new_policy = "first";
  auto* delta = app.add_subcommand("delta", "Difference two runs' histograms");
  delta->add_option("--old", old_policy, "Baseline run policy")->check(CLI::IsMember({"latest", "first"}))->capture_default_str();
  delta->add_option("--new", new_policy, "Compared run policy")->check(CLI::IsMember({"latest", "first"}))->capture_default_str();
  delta->add_flag("--charts", o.charts, "Also write SVG charts");
  auto* order = app.add_subcommand("order", "Classify publication order by day difference");
  order->add_flag("--charts", o.charts, "Also write SVG charts");
  app.add_subcommand("categories", "Category distribution of matched pairs");
  app.add_subcommand("validate", "Check manifest invariants");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      app.exit(e, out, err);
      return 0;
    }
    err << "error: " << e.what() << "\n\n" << app.help();
    return 2;
  }
  const std::string command = app.get_subcommands().front()->get_name();

  try {
    pipeline::Context ctx;
    ctx.ws.root = o.workspace;
    if (command == "harvest") std::filesystem::create_directories(ctx.ws.root);
    if (!std::filesystem::is_directory(ctx.ws.root))
      throw Error(fmt::format("workspace {} does not exist (run 'harvest' to create it)", o.workspace));
    ctx.config = pipeline::load_config(ctx.ws.root);
    apply(ctx.config, o);
    ctx.config.validate();

    pipeline::WorkspaceLock lock(ctx.ws.lock());
    pipeline::RunLog log(ctx.ws.run_log());
    ctx.log = &log;
    ctx.out = &out;
    log.event(command, "start");

    pipeline::Status status = pipeline::Status::Ok;
    if (command == "harvest") status = pipeline::run_harvest(ctx, harvest_args);
    else if (command == "match") status = pipeline::run_match(ctx);
    else if (command == "fetch") status = pipeline::run_fetch(ctx);
    else if (command == "import-preprints") status = pipeline::run_import_preprints(ctx, import_source);
    else if (command == "extract") status = pipeline::run_extract(ctx);
    else if (command == "compare") status = pipeline::run_compare(ctx);
    else if (command == "report") status = pipeline::run_report(ctx);
    else if (command == "delta") status = pipeline::run_delta(ctx, policy_or_throw(old_policy), policy_or_throw(new_policy));
    else if (command == "order") status = pipeline::run_order(ctx);
    else if (command == "categories") status = pipeline::run_categories(ctx);
    else if (command == "validate") status = pipeline::run_validate(ctx);

    log.event(command, fmt::format("done status={}", static_cast<int>(status)));
    return static_cast<int>(status);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
  }
  return 2;
}

}  // namespace prepubdiff::cli
