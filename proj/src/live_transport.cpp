#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <fmt/format.h>

#include "prepubdiff/http.hpp"

namespace prepubdiff::net {

HttplibTransport::HttplibTransport(std::chrono::seconds timeout) : timeout_(timeout) {}

HttpResponse HttplibTransport::get(const HttpRequest& request) {
  const auto scheme_end = request.url.find("://");
  if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + request.url);
  const auto path_start = request.url.find('/', scheme_end + 3);
  const std::string origin = request.url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

  httplib::Client client(origin);
  client.set_follow_location(true);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  if (!client.is_valid()) throw TransportError("unsupported URL: " + request.url);

  httplib::Headers headers;
  for (const auto& [k, v] : request.headers) headers.emplace(k, v);
  auto result = client.Get(path, headers);
  if (!result) throw TransportError(fmt::format("GET {}: {}", request.url, httplib::to_string(result.error())));

  HttpResponse response;
  response.status = result->status;
  response.reason = result->reason;
  for (const auto& [k, v] : result->headers) response.headers.emplace_back(k, v);
  response.body = std::move(result->body);
  return response;
}

}  // namespace prepubdiff::net
