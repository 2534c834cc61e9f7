#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "prepubdiff/analysis.hpp"
#include "prepubdiff/corpus_model.hpp"
#include "prepubdiff/harvesting.hpp"

namespace prepubdiff::pipeline {

namespace fs = std::filesystem;

struct RunConfig {
  fs::path workspace;
  std::string oai_endpoint{harvest::kDefaultOaiEndpoint};
  std::optional<std::string> oai_from;
  std::optional<std::string> oai_set;
  std::string registry_endpoint{harvest::kDefaultRegistryEndpoint};
  double rate_per_host = 1.0;  // requests per second per host
  int workers = 4;
  int max_attempts = 5;
  std::optional<fs::path> stopwords;
  bool normalize_punct = false;
  VersionPolicy policy = VersionPolicy::Latest;
  analysis::DayBins day_bins;
  std::string contact;
  std::optional<fs::path> replay_dir;  // answer requests from recordings, on a simulated clock
  std::optional<fs::path> record_dir;  // record live responses for later replay
  std::optional<fs::path> publisher_rules;
  bool charts = false;

  /// Throws Error unless workers >= 1, rate > 0, attempts >= 1 and day bins ascend.
  void validate() const;
};

/// Applies {workspace}/config.json (if present) over the defaults. Relative
/// paths in the file resolve against the workspace.
RunConfig load_config(const fs::path& workspace);
void apply_config_json(RunConfig& config, std::string_view json_text);

/// Workspace-relative artifact locations.
struct Workspace {
  fs::path root;

  fs::path config() const { return root / "config.json"; }
  fs::path manifest() const { return root / "manifest.json"; }
  fs::path checkpoint() const { return root / "harvest_checkpoint.json"; }
  fs::path records() const { return root / "harvest" / "records.jsonl"; }
  fs::path works() const { return root / "works.json"; }
  fs::path published_dir() const { return root / "published"; }
  fs::path preprints_dir() const { return root / "preprints"; }
  fs::path segmenter_queue() const { return root / "segmenter_queue.txt"; }
  fs::path sections_dir() const { return root / "sections"; }
  fs::path published_sections(const std::string& pid) const { return sections_dir() / pid / "published"; }
  fs::path preprint_sections(const std::string& pid, int version) const {
    return sections_dir() / pid / ("preprint-v" + std::to_string(version));
  }
  fs::path runs() const { return root / "runs"; }
  fs::path run_dir(VersionPolicy p) const { return runs() / std::string(to_string(p)); }
  fs::path run_log() const { return root / "run.log"; }
  fs::path lock() const { return root / ".prepubdiff.lock"; }
};

/// Single-instance guard: the lock file is created exclusively and removed
/// on destruction. Throws Error when another process holds it.
class WorkspaceLock {
public:
  explicit WorkspaceLock(fs::path path);
  ~WorkspaceLock();
  WorkspaceLock(const WorkspaceLock&) = delete;
  WorkspaceLock& operator=(const WorkspaceLock&) = delete;

private:
  fs::path path_;
};

/// Appends "<UTC timestamp> <stage> <message>" lines. Thread-safe.
class RunLog {
public:
  explicit RunLog(fs::path path);
  void event(std::string_view stage, std::string_view message);

private:
  fs::path path_;
  std::mutex mutex_;
};

enum class Status { Ok = 0, Partial = 1, Fatal = 2 };

Status worst(Status a, Status b);

/// Runs fn(i) for i in [0, n) on up to `workers` threads. The first exception
/// thrown (lowest index) is rethrown after all workers finish.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& fn);

/// Writes through a temporary file and rename.
void write_file(const fs::path& path, std::string_view content);
std::string read_file(const fs::path& path);

// ---------------------------------------------------------------------------
// Stages. Each reads and writes only its own artifacts under the workspace,
// reports to `out`, logs to the run log and throws on fatal errors.

struct Context {
  RunConfig config;
  Workspace ws;
  RunLog* log = nullptr;
  std::ostream* out = nullptr;
};

struct HarvestArgs {
  std::optional<std::uint64_t> max_pages;
  bool restart = false;
};

Status run_harvest(Context& ctx, const HarvestArgs& args);
Status run_match(Context& ctx);
Status run_fetch(Context& ctx);
Status run_import_preprints(Context& ctx, const fs::path& source);
Status run_extract(Context& ctx);
Status run_compare(Context& ctx);
Status run_report(Context& ctx);
Status run_delta(Context& ctx, VersionPolicy old_policy, VersionPolicy new_policy);
Status run_order(Context& ctx);
Status run_categories(Context& ctx);
Status run_validate(Context& ctx);

}  // namespace prepubdiff::pipeline

namespace prepubdiff::cli {

/// Entry point behind the executable; `args` excludes the program name.
/// Returns the process exit status (0 ok, 1 partial, 2 fatal or usage).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace prepubdiff::cli
