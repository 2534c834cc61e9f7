#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "prepubdiff/error.hpp"

namespace prepubdiff::net {

using Headers = std::vector<std::pair<std::string, std::string>>;

struct HttpRequest {
  std::string url;
  Headers headers;
};

struct HttpResponse {
  int status = 0;
  std::string reason;
  Headers headers;
  std::string body;

  /// Case-insensitive header lookup.
  std::optional<std::string_view> header(std::string_view name) const;
};

/// The request never produced a response (connection refused, reset, timeout).
class TransportError : public Error {
public:
  using Error::Error;
};

/// Retries exhausted, or a non-retryable failure status.
class HttpFailure : public Error {
public:
  HttpFailure(const std::string& url, int last_status, const std::string& detail);
  int last_status() const noexcept { return status_; }

private:
  int status_;
};

class Transport {
public:
  virtual ~Transport() = default;
  virtual HttpResponse get(const HttpRequest& request) = 0;
};

/// Live HTTP(S) via cpp-httplib.
class HttplibTransport final : public Transport {
public:
  explicit HttplibTransport(std::chrono::seconds timeout = std::chrono::seconds{60});
  HttpResponse get(const HttpRequest& request) override;

private:
  std::chrono::seconds timeout_;
};

/// Serves recorded responses from a directory of {request-key}.http files,
/// each holding a verbatim status line, headers, a blank line and the body.
class ReplayTransport final : public Transport {
public:
  explicit ReplayTransport(std::filesystem::path dir);
  HttpResponse get(const HttpRequest& request) override;

  /// 16 hex digits of FNV-1a/64 over "GET " + url.
  static std::string request_key(std::string_view url);
  static std::string serialize(const HttpResponse& response);
  static HttpResponse parse(std::string_view text);

private:
  std::filesystem::path dir_;
};

/// Forwards to another transport and records every response in replay format.
class RecordingTransport final : public Transport {
public:
  RecordingTransport(Transport& inner, std::filesystem::path dir);
  HttpResponse get(const HttpRequest& request) override;

private:
  Transport& inner_;
  std::filesystem::path dir_;
  std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Time

class Clock {
public:
  using time_point = std::chrono::steady_clock::time_point;
  using duration = std::chrono::steady_clock::duration;

  virtual ~Clock() = default;
  virtual time_point now() = 0;
  virtual void sleep_until(time_point t) = 0;
  void sleep_for(duration d) { sleep_until(now() + d); }
};

class SystemClock final : public Clock {
public:
  time_point now() override { return std::chrono::steady_clock::now(); }
  void sleep_until(time_point t) override;
};

/// Virtual time: sleeping advances the clock instantly. Thread-safe.
class SimulatedClock final : public Clock {
public:
  time_point now() override;
  void sleep_until(time_point t) override;
  void advance(duration d);

private:
  std::mutex mutex_;
  time_point now_{};
};

// ---------------------------------------------------------------------------
// Politeness

/// At most one in-flight request per host, and at least `min_interval` from
/// the end of one request on a host to the start of the next. Request starts
/// are therefore never closer than `min_interval` either.
class HostRateLimiter {
public:
  HostRateLimiter(Clock& clock, Clock::duration min_interval);

  class Lease {
  public:
    Lease(Lease&&) noexcept;
    Lease& operator=(Lease&&) = delete;
    Lease(const Lease&) = delete;
    ~Lease();

  private:
    friend class HostRateLimiter;
    Lease(HostRateLimiter* owner, std::string host) : owner_(owner), host_(std::move(host)) {}
    HostRateLimiter* owner_;
    std::string host_;
  };

  /// Blocks until the host is idle and its interval has elapsed.
  Lease acquire(const std::string& host);
  Clock::duration min_interval() const noexcept { return interval_; }

private:
  struct HostState {
    bool busy = false;
    std::optional<Clock::time_point> last_end;
  };
  void release(const std::string& host);

  Clock& clock_;
  Clock::duration interval_;
  std::mutex mutex_;
  std::condition_variable idle_;
  std::map<std::string, HostState> hosts_;
};

struct RetryPolicy {
  int max_attempts = 5;
  std::chrono::milliseconds initial_backoff{1000};
  double multiplier = 2.0;
  std::chrono::milliseconds max_backoff{60000};
  std::uint64_t jitter_seed = 0x5eedULL;
};

/// Rate-limited, retrying GET client. Transport errors, 429 and 5xx responses
/// are retried with exponential backoff and full jitter; Retry-After on 503
/// and 429 is honored. Other statuses are returned to the caller.
class PoliteClient {
public:
  PoliteClient(Transport& transport, Clock& clock, HostRateLimiter& limiter, RetryPolicy policy,
               std::string user_agent);

  /// Throws HttpFailure once retries are exhausted.
  HttpResponse get(const std::string& url, const Headers& extra = {});

  Clock& clock() noexcept { return clock_; }
  int attempts_made() const noexcept { return attempts_.load(); }

private:
  Clock::duration backoff(int attempt);

  Transport& transport_;
  Clock& clock_;
  HostRateLimiter& limiter_;
  RetryPolicy policy_;
  std::string user_agent_;
  std::mutex rng_mutex_;
  std::mt19937_64 rng_;
  std::atomic<int> attempts_{0};
};

std::string host_of(std::string_view url);
/// Percent-encodes everything outside the RFC 3986 unreserved set.
std::string url_encode(std::string_view component);
/// "prepubdiff/<version> (mailto:<contact>)".
std::string user_agent(std::string_view contact);

}  // namespace prepubdiff::net
