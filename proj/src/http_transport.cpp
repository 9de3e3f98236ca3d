#include "vpr/gateway.hpp"

#include <httplib.h>

#include "vpr/error.hpp"

namespace vpr {

namespace {

struct SplitUrl {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error(ErrorCode::InvalidConfig, "endpoint URL needs a scheme: " + url);
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") throw Error(ErrorCode::InvalidConfig, "unsupported scheme: " + scheme);
#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
  if (scheme == "https") throw Error(ErrorCode::InvalidConfig, "this build has no TLS support (VPR_WITH_HTTPS)");
#endif
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

HttpReply HttpTransport::post(const HttpRequest& request) {
  const SplitUrl target = split_url(request.url);
  httplib::Client client(target.origin);

  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);

  httplib::Headers headers;
  std::string content_type = "application/json";
  for (const auto& [name, value] : request.headers) {
    if (name == "Content-Type") {
      content_type = value;
    } else {
      headers.emplace(name, value);
    }
  }

  HttpReply reply;
  auto result = client.Post(target.path, headers, request.body, content_type);
  if (!result) {
    reply.error = httplib::to_string(result.error());
    return reply;
  }
  reply.status = result->status;
  reply.body = result->body;
  return reply;
}

}  // namespace vpr
