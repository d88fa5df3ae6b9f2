// Copyright 2026 the citerank authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <chrono>
#include <cstdlib>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "citerank/citegraph.hpp"

namespace citerank {

/// HTTP-backed academic-graph provider. Endpoints:
///   GET {candidates_path}?query=<normalized title>&limit=<n>
///       -> JSON array of {"external_id", "title"}
///   GET {publication_path}/<id>
///       -> publication JSON (external_id, title, year, citations)
/// The API key, when configured, is sent as a bearer token. 429 responses
/// surface as RateLimitedError with any Retry-After honored; connection
/// failures and 5xx responses surface as retryable TransportError.
class HttpProvider : public Provider {
 public:
  struct Config {
    std::string host;  // e.g. "api.example.org" or "localhost"
    int port = 443;
    std::string candidates_path = "/v1/candidates";
    std::string publication_path = "/v1/publications";
    std::string api_key_env = "CITERANK_API_KEY";
    std::chrono::seconds timeout{30};
  };

  explicit HttpProvider(Config config) : config_(std::move(config)) {
    client_ = std::make_unique<httplib::Client>(config_.host, config_.port);
    client_->set_connection_timeout(config_.timeout.count(), 0);
    client_->set_read_timeout(config_.timeout.count(), 0);
    if (const char* key = std::getenv(config_.api_key_env.c_str()))
      client_->set_bearer_token_auth(key);
  }

  std::vector<Candidate> find_candidates(const NormalizedTitle& query,
                                         std::size_t limit) override {
    httplib::Params params{{"query", query.text},
                           {"limit", std::to_string(limit)}};
    auto res = client_->Get(config_.candidates_path, params, httplib::Headers{});
    check(res, "candidate search");
    nlohmann::json body = nlohmann::json::parse(res->body);
    std::vector<Candidate> out;
    for (const auto& c : body) {
      if (out.size() >= limit) break;
      out.push_back({c.at("external_id").get<std::string>(),
                     c.at("title").get<std::string>()});
    }
    return out;
  }

  PublicationCitations fetch_publication(const std::string& id) override {
    auto res = client_->Get(config_.publication_path + "/" +
                            httplib::detail::encode_url(id));
    if (res && res->status == 404)
      throw NotFoundError("publication not found: " + id);
    check(res, "publication fetch");
    return publication_from_json(nlohmann::json::parse(res->body));
  }

 private:
  static void check(const httplib::Result& res, const std::string& what) {
    if (!res)
      throw TransportError(what + " failed: " + httplib::to_string(res.error()));
    if (res->status == 429) {
      std::chrono::milliseconds retry_after{1000};
      if (res->has_header("Retry-After"))
        retry_after = std::chrono::seconds(
            std::stol(res->get_header_value("Retry-After")));
      throw RateLimitedError(retry_after);
    }
    if (res->status == 404) throw NotFoundError(what + ": not found");
    if (res->status >= 500)
      throw TransportError(what + " failed with status " +
                           std::to_string(res->status));
    if (res->status != 200)
      throw std::runtime_error(what + " failed with status " +
                               std::to_string(res->status));
  }

  Config config_;
  std::unique_ptr<httplib::Client> client_;
};

}  // namespace citerank
