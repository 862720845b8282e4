#pragma once

// Thin blocking HTTP client used by the provider implementations. Kept out of
// the public headers so only this translation unit pulls in cpp-httplib.

#include <chrono>
#include <map>
#include <string>

namespace goatrag::http {

enum class Failure { None, Connection, Timeout, Other };

struct Response {
  Failure failure = Failure::None;
  int status = 0;
  std::string body;
  std::string error;  // transport error description when failure != None
};

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // always begins with '/'
};

// Throws goatrag::Error(InvalidConfig) for anything but http:// or https://.
Url parse_url(const std::string& url);

std::string url_encode(const std::string& s);

Response post_json(const std::string& url, const std::string& body,
                   const std::map<std::string, std::string>& headers,
                   std::chrono::milliseconds timeout);

Response get(const std::string& url, const std::map<std::string, std::string>& headers,
             std::chrono::milliseconds timeout);

}  // namespace goatrag::http
