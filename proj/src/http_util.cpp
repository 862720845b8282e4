#include "http_util.hpp"

#include <cctype>
#include <cstdio>

#include <httplib.h>

#include "goatrag/error.hpp"

namespace goatrag::http {

Url parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "URL '" + url + "' has no scheme");
  }
  const std::string scheme = url.substr(0, scheme_end);
  if (scheme != "http" && scheme != "https") {
    throw Error(ErrorCode::InvalidConfig, "URL '" + url + "' must be http or https");
  }
  const auto host_begin = scheme_end + 3;
  const auto slash = url.find('/', host_begin);
  Url out;
  if (slash == std::string::npos) {
    out.origin = url;
    out.path = "/";
  } else {
    out.origin = url.substr(0, slash);
    out.path = url.substr(slash);
  }
  if (out.origin.size() <= host_begin) {
    throw Error(ErrorCode::InvalidConfig, "URL '" + url + "' has no host");
  }
  return out;
}

std::string url_encode(const std::string& s) {
  std::string out;
  for (unsigned char c : s) {
    if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~') {
      out.push_back(static_cast<char>(c));
    } else {
      char buf[4];
      std::snprintf(buf, sizeof(buf), "%%%02X", c);
      out += buf;
    }
  }
  return out;
}

namespace {

Response convert(const httplib::Result& res) {
  Response out;
  if (!res) {
    const auto err = res.error();
    out.error = httplib::to_string(err);
    switch (err) {
      case httplib::Error::Connection:
      case httplib::Error::ConnectionTimeout:
      case httplib::Error::ProxyConnection:
        out.failure = err == httplib::Error::ConnectionTimeout ? Failure::Timeout
                                                              : Failure::Connection;
        break;
      case httplib::Error::Read:
      case httplib::Error::Write:
        out.failure = Failure::Timeout;
        break;
      default:
        out.failure = Failure::Other;
    }
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

httplib::Client make_client(const Url& u, std::chrono::milliseconds timeout) {
  httplib::Client cli(u.origin);
  cli.set_connection_timeout(timeout);
  cli.set_read_timeout(timeout);
  cli.set_write_timeout(timeout);
  return cli;
}

httplib::Headers to_headers(const std::map<std::string, std::string>& headers) {
  httplib::Headers h;
  for (const auto& [k, v] : headers) h.emplace(k, v);
  return h;
}

}  // namespace

Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers,
                   std::chrono::milliseconds timeout) {
  const Url u = parse_url(url);
  auto cli = make_client(u, timeout);
  return convert(cli.Post(u.path, to_headers(headers), body, "application/json"));
}

Response get(const std::string& url, const std::map<std::string, std::string>& headers,
             std::chrono::milliseconds timeout) {
  const Url u = parse_url(url);
  auto cli = make_client(u, timeout);
  return convert(cli.Get(u.path, to_headers(headers)));
}

}  // namespace goatrag::http
