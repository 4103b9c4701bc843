// Copyright 2026 The deepbrowse Authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

// HttpClient over cpp-httplib. Link the deepbrowse_http target to use it.

#include <httplib.h>

#include <chrono>
#include <string>

#include "deepbrowse/live_backends.hpp"

namespace deepbrowse::live {

class HttplibClient final : public HttpClient {
 public:
  explicit HttplibClient(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}

  HttpResponse send(const HttpRequest& request) override {
    const auto scheme_end = request.url.find("://");
    if (scheme_end == std::string::npos) throw Error(Errc::provider_error, "bad URL " + request.url);
    const auto path_start = request.url.find('/', scheme_end + 3);
    const std::string origin = request.url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : request.url.substr(path_start);

    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_);
    client.set_read_timeout(timeout_);
    client.set_write_timeout(timeout_);
    httplib::Headers headers;
    std::string content_type = "application/json";
    for (const auto& [k, v] : request.headers) {
      if (k == "Content-Type") {
        content_type = v;
      } else {
        headers.emplace(k, v);
      }
    }
    httplib::Result res = request.method == "POST" ? client.Post(path, headers, request.body, content_type)
                                                   : client.Get(path, headers);
    if (!res) {
      throw Error(Errc::provider_error, request.method + " " + origin + " failed: " + httplib::to_string(res.error()));
    }
    return HttpResponse{res->status, res->body};
  }

 private:
  std::chrono::seconds timeout_;
};

}  // namespace deepbrowse::live
