#include "prepubdiff/http.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <thread>

#include <fmt/format.h>

namespace prepubdiff::net {

namespace {

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
         });
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

bool retryable(int status) { return status == 429 || (status >= 500 && status <= 599); }

// Seconds to wait from a Retry-After value: delta-seconds or an IMF-fixdate.
std::optional<std::chrono::seconds> parse_retry_after(std::string_view value) {
  value = trim(value);
  if (value.empty()) return std::nullopt;
  if (std::all_of(value.begin(), value.end(), [](unsigned char c) { return std::isdigit(c); })) {
    if (value.size() > 9) return std::chrono::seconds{999'999'999};
    return std::chrono::seconds{std::stol(std::string(value))};
  }
  std::tm tm{};
  std::istringstream in{std::string(value)};
  in >> std::get_time(&tm, "%a, %d %b %Y %H:%M:%S");
  if (in.fail()) return std::nullopt;
  const std::time_t when = timegm(&tm);
  const std::time_t now = std::time(nullptr);
  return std::chrono::seconds{std::max<std::time_t>(0, when - now)};
}

}  // namespace

std::optional<std::string_view> HttpResponse::header(std::string_view name) const {
  for (const auto& [k, v] : headers)
    if (iequals(k, name)) return std::string_view(v);
  return std::nullopt;
}

HttpFailure::HttpFailure(const std::string& url, int last_status, const std::string& detail)
    : Error(fmt::format("GET {} failed: {}", url, detail)), status_(last_status) {}

// ---------------------------------------------------------------------------
// Replay

ReplayTransport::ReplayTransport(std::filesystem::path dir) : dir_(std::move(dir)) {}

std::string ReplayTransport::request_key(std::string_view url) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](std::string_view s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001b3ULL;
    }
  };
  feed("GET ");
  feed(url);
  return fmt::format("{:016x}", h);
}

std::string ReplayTransport::serialize(const HttpResponse& r) {
  std::string out = fmt::format("HTTP/1.1 {} {}\r\n", r.status, r.reason);
  for (const auto& [k, v] : r.headers) {
    if (iequals(k, "Transfer-Encoding") || iequals(k, "Content-Length") || iequals(k, "Content-Encoding"))
      continue;
    out += fmt::format("{}: {}\r\n", k, v);
  }
  out += fmt::format("Content-Length: {}\r\n\r\n", r.body.size());
  out += r.body;
  return out;
}

HttpResponse ReplayTransport::parse(std::string_view text) {
  HttpResponse r;
  auto next_line = [&](std::string_view& line) {
    const auto nl = text.find('\n');
    if (nl == std::string_view::npos) {
      line = text;
      text = {};
      return false;
    }
    line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    text.remove_prefix(nl + 1);
    return true;
  };
  std::string_view line;
  next_line(line);
  if (!line.starts_with("HTTP/")) throw ParseError("replay file lacks an HTTP status line", 0);
  const auto sp = line.find(' ');
  if (sp == std::string_view::npos) throw ParseError("malformed status line", 0);
  const auto rest = line.substr(sp + 1);
  const auto sp2 = rest.find(' ');
  const auto code = sp2 == std::string_view::npos ? rest : rest.substr(0, sp2);
  if (code.size() != 3 || !std::all_of(code.begin(), code.end(), [](unsigned char c) { return std::isdigit(c); }))
    throw ParseError("malformed status code", 0);
  r.status = std::stoi(std::string(code));
  if (sp2 != std::string_view::npos) r.reason = std::string(rest.substr(sp2 + 1));
  while (next_line(line)) {
    if (line.empty()) break;
    const auto colon = line.find(':');
    if (colon == std::string_view::npos) throw ParseError("malformed header line", 0);
    r.headers.emplace_back(std::string(trim(line.substr(0, colon))), std::string(trim(line.substr(colon + 1))));
  }
  r.body = std::string(text);
  return r;
}

HttpResponse ReplayTransport::get(const HttpRequest& request) {
  const auto file = dir_ / (request_key(request.url) + ".http");
  std::ifstream in(file, std::ios::binary);
  if (!in) throw TransportError(fmt::format("no recorded response for {} ({})", request.url, file.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse(buf.str());
}

RecordingTransport::RecordingTransport(Transport& inner, std::filesystem::path dir)
    : inner_(inner), dir_(std::move(dir)) {}

HttpResponse RecordingTransport::get(const HttpRequest& request) {
  HttpResponse r = inner_.get(request);
  std::lock_guard lock(mutex_);
  std::filesystem::create_directories(dir_);
  std::ofstream out(dir_ / (ReplayTransport::request_key(request.url) + ".http"), std::ios::binary | std::ios::trunc);
  out << ReplayTransport::serialize(r);
  return r;
}

// ---------------------------------------------------------------------------
// Clocks

void SystemClock::sleep_until(time_point t) { std::this_thread::sleep_until(t); }

Clock::time_point SimulatedClock::now() {
  std::lock_guard lock(mutex_);
  return now_;
}

void SimulatedClock::sleep_until(time_point t) {
  std::lock_guard lock(mutex_);
  if (t > now_) now_ = t;
}

void SimulatedClock::advance(duration d) {
  std::lock_guard lock(mutex_);
  now_ += d;
}

// ---------------------------------------------------------------------------
// Rate limiting

HostRateLimiter::HostRateLimiter(Clock& clock, Clock::duration min_interval)
    : clock_(clock), interval_(min_interval) {}

HostRateLimiter::Lease::Lease(Lease&& other) noexcept
    : owner_(std::exchange(other.owner_, nullptr)), host_(std::move(other.host_)) {}

HostRateLimiter::Lease::~Lease() {
  if (owner_) owner_->release(host_);
}

HostRateLimiter::Lease HostRateLimiter::acquire(const std::string& host) {
  Clock::time_point ready{};
  {
    std::unique_lock lock(mutex_);
    auto& state = hosts_[host];
    idle_.wait(lock, [&] { return !state.busy; });
    state.busy = true;
    if (state.last_end) ready = *state.last_end + interval_;
  }
  if (ready > clock_.now()) clock_.sleep_until(ready);
  return Lease(this, host);
}

void HostRateLimiter::release(const std::string& host) {
  {
    std::lock_guard lock(mutex_);
    auto& state = hosts_[host];
    state.busy = false;
    state.last_end = clock_.now();
  }
  idle_.notify_all();
}

// ---------------------------------------------------------------------------
// Client

PoliteClient::PoliteClient(Transport& transport, Clock& clock, HostRateLimiter& limiter, RetryPolicy policy,
                           std::string user_agent)
    : transport_(transport),
      clock_(clock),
      limiter_(limiter),
      policy_(policy),
      user_agent_(std::move(user_agent)),
      rng_(policy.jitter_seed) {}

Clock::duration PoliteClient::backoff(int attempt) {
  const double cap_ms = std::min<double>(static_cast<double>(policy_.max_backoff.count()),
                                         static_cast<double>(policy_.initial_backoff.count()) *
                                             std::pow(policy_.multiplier, attempt - 1));
  std::lock_guard lock(rng_mutex_);
  std::uniform_real_distribution<double> jitter(0.0, cap_ms);
  return std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double, std::milli>(jitter(rng_)));
}

HttpResponse PoliteClient::get(const std::string& url, const Headers& extra) {
  HttpRequest request{url, {{"User-Agent", user_agent_}}};
  request.headers.insert(request.headers.end(), extra.begin(), extra.end());
  const std::string host = host_of(url);
  const int max_attempts = std::max(1, policy_.max_attempts);

  for (int attempt = 1;; ++attempt) {
    ++attempts_;
    std::optional<HttpResponse> response;
    std::string error;
    {
      auto lease = limiter_.acquire(host);
      try {
        response = transport_.get(request);
      } catch (const TransportError& e) {
        error = e.what();
      }
    }
    if (response && !retryable(response->status)) return std::move(*response);
    if (attempt >= max_attempts) {
      const int status = response ? response->status : 0;
      throw HttpFailure(url, status,
                        fmt::format("{} after {} attempts", response ? fmt::format("HTTP {}", status) : error, attempt));
    }
    Clock::duration wait = backoff(attempt);
    if (response && (response->status == 503 || response->status == 429)) {
      if (auto header = response->header("Retry-After"))
        if (auto seconds = parse_retry_after(*header))
          wait = std::min<Clock::duration>(*seconds, std::chrono::hours{1});
    }
    clock_.sleep_for(wait);
  }
}

// ---------------------------------------------------------------------------
// URLs

std::string host_of(std::string_view url) {
  auto scheme = url.find("://");
  std::string_view rest = scheme == std::string_view::npos ? url : url.substr(scheme + 3);
  rest = rest.substr(0, rest.find_first_of("/?#"));
  if (auto at = rest.rfind('@'); at != std::string_view::npos) rest.remove_prefix(at + 1);
  std::string host(rest);
  for (auto& c : host) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return host;
}

std::string url_encode(std::string_view component) {
  std::string out;
  for (unsigned char c : component) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') out.push_back(static_cast<char>(c));
    else out += fmt::format("%{:02X}", c);
  }
  return out;
}

std::string user_agent(std::string_view contact) {
  if (contact.empty()) return "prepubdiff/0.1";
  return fmt::format("prepubdiff/0.1 (mailto:{})", contact);
}

}  // namespace prepubdiff::net
