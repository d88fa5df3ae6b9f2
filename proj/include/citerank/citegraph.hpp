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

#include <algorithm>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "citerank/ingest.hpp"
#include "citerank/matcher.hpp"

namespace citerank {

/// One citing publication with its year, enabling time-cutoff counts.
struct CitationRecord {
  std::string citing_id;
  int citing_year = 0;
};

/// Retrieved slice of the external graph for one publication.
struct PublicationCitations {
  std::string external_id;
  std::string canonical_title;
  int year = 0;
  std::vector<CitationRecord> citations;
};

/// Totals for one enrichment run.
struct EnrichmentReport {
  std::size_t attempted = 0;
  std::size_t matched = 0;
  std::size_t no_match = 0;
  std::size_t provider_errors = 0;
  std::size_t total_citations = 0;
  bool aborted = false;
  double recall() const {
    return attempted == 0 ? 0.0 : double(matched) / double(attempted);
  }
  struct UoaCoverage {
    std::size_t attempted = 0;
    std::size_t matched = 0;
  };
  std::map<int, UoaCoverage> per_uoa;
};

/// Retryable transport failure.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Provider asked us to back off; retry_after is honored by the retry loop.
class RateLimitedError : public std::runtime_error {
 public:
  explicit RateLimitedError(std::chrono::milliseconds retry_after)
      : std::runtime_error("rate limited by provider"),
        retry_after(retry_after) {}
  std::chrono::milliseconds retry_after;
};

class NotFoundError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Academic-graph service: candidate search plus publication retrieval.
class Provider {
 public:
  virtual ~Provider() = default;
  virtual std::vector<Candidate> find_candidates(const NormalizedTitle& query,
                                                 std::size_t limit) = 0;
  virtual PublicationCitations fetch_publication(const std::string& id) = 0;
};

inline nlohmann::json to_json(const PublicationCitations& pub) {
  nlohmann::json cites = nlohmann::json::array();
  for (const auto& c : pub.citations)
    cites.push_back({{"citing_id", c.citing_id}, {"citing_year", c.citing_year}});
  return {{"external_id", pub.external_id},
          {"title", pub.canonical_title},
          {"year", pub.year},
          {"citations", std::move(cites)}};
}

inline PublicationCitations publication_from_json(const nlohmann::json& j) {
  PublicationCitations pub;
  pub.external_id = j.at("external_id").get<std::string>();
  pub.canonical_title = j.at("title").get<std::string>();
  pub.year = j.value("year", 0);
  std::set<std::string> seen;
  for (const auto& c : j.value("citations", nlohmann::json::array())) {
    CitationRecord rec{c.at("citing_id").get<std::string>(),
                       c.at("citing_year").get<int>()};
    if (seen.insert(rec.citing_id).second) pub.citations.push_back(std::move(rec));
  }
  return pub;
}

/// Offline provider backed by a directory of publication documents (one JSON
/// file per publication). Candidate search returns fixtures sharing at least
/// one token with the query, most similar first.
class FixtureProvider : public Provider {
 public:
  explicit FixtureProvider(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir))
      throw std::invalid_argument("fixture directory does not exist: " +
                                  dir.string());
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".json")
        files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
      std::ifstream in(path);
      nlohmann::json j = nlohmann::json::parse(in);
      add(publication_from_json(j));
    }
  }

  FixtureProvider() = default;

  void add(PublicationCitations pub) {
    NormalizedTitle norm = normalize_title(pub.canonical_title);
    for (const auto& [token, count] : vectorize(norm)) {
      (void)count;
      token_index_[token].push_back(pub.external_id);
    }
    publications_[pub.external_id] = std::move(pub);
  }

  std::vector<Candidate> find_candidates(const NormalizedTitle& query,
                                         std::size_t limit) override {
    if (query.empty()) throw std::invalid_argument("empty candidate query");
    TermVector qv = vectorize(query);
    std::set<std::string> ids;
    for (const auto& [token, count] : qv) {
      (void)count;
      auto it = token_index_.find(token);
      if (it == token_index_.end()) continue;
      ids.insert(it->second.begin(), it->second.end());
    }
    struct Scored {
      double sim;
      const PublicationCitations* pub;
    };
    std::vector<Scored> scored;
    for (const auto& id : ids) {
      const auto& pub = publications_.at(id);
      double sim = cosine_similarity(
          qv, vectorize(normalize_title(pub.canonical_title)));
      scored.push_back({sim, &pub});
    }
    std::sort(scored.begin(), scored.end(), [](const Scored& a, const Scored& b) {
      if (a.sim != b.sim) return a.sim > b.sim;
      return a.pub->external_id < b.pub->external_id;
    });
    std::vector<Candidate> out;
    for (const auto& s : scored) {
      if (out.size() >= limit) break;
      out.push_back({s.pub->external_id, s.pub->canonical_title});
    }
    return out;
  }

  PublicationCitations fetch_publication(const std::string& id) override {
    auto it = publications_.find(id);
    if (it == publications_.end())
      throw NotFoundError("no fixture publication with id " + id);
    return it->second;
  }

  std::size_t size() const { return publications_.size(); }

 private:
  std::map<std::string, PublicationCitations> publications_;
  std::map<std::string, std::vector<std::string>> token_index_;
};

/// Shared sliding-window budget: at most `budget` acquisitions per window
/// across all workers. acquire() blocks until a slot opens.
class RateLimiter {
 public:
  RateLimiter(std::size_t budget, std::chrono::milliseconds window)
      : budget_(budget), window_(window) {}

  void acquire() {
    using clock = std::chrono::steady_clock;
    std::unique_lock lock(mu_);
    for (;;) {
      auto now = clock::now();
      while (!stamps_.empty() && now - stamps_.front() >= window_)
        stamps_.pop_front();
      if (stamps_.size() < budget_) {
        stamps_.push_back(now);
        return;
      }
      auto wake = stamps_.front() + window_;
      cv_.wait_until(lock, wake);
    }
  }

 private:
  std::size_t budget_;
  std::chrono::milliseconds window_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<std::chrono::steady_clock::time_point> stamps_;
};

/// Content-addressed on-disk store: one self-describing JSON document per
/// key under candidates/ (keyed by normalized title) and publications/
/// (keyed by external id). Writes are atomic (temp file + rename) so
/// concurrent readers never see partial documents.
class DiskCache {
 public:
  explicit DiskCache(const std::filesystem::path& dir) : dir_(dir) {
    std::filesystem::create_directories(dir_ / "candidates");
    std::filesystem::create_directories(dir_ / "publications");
  }

  std::optional<std::vector<Candidate>> get_candidates(
      const NormalizedTitle& query) const {
    auto path = candidates_path(query);
    if (!std::filesystem::exists(path)) return std::nullopt;
    nlohmann::json doc = load(path);
    std::vector<Candidate> out;
    for (const auto& c : doc.at("payload"))
      out.push_back({c.at("external_id").get<std::string>(),
                     c.at("title").get<std::string>()});
    return out;
  }

  void put_candidates(const NormalizedTitle& query,
                      const std::vector<Candidate>& candidates) {
    nlohmann::json payload = nlohmann::json::array();
    for (const auto& c : candidates)
      payload.push_back({{"external_id", c.external_id}, {"title", c.title}});
    nlohmann::json doc = {{"kind", "candidates"},
                          {"query", query.text},
                          {"retrieved_at", timestamp()},
                          {"payload", std::move(payload)}};
    store(candidates_path(query), doc);
  }

  std::optional<PublicationCitations> get_publication(
      const std::string& id) const {
    auto path = publication_path(id);
    if (!std::filesystem::exists(path)) return std::nullopt;
    nlohmann::json doc = load(path);
    return publication_from_json(doc.at("payload"));
  }

  void put_publication(const PublicationCitations& pub) {
    nlohmann::json doc = {{"kind", "publication"},
                          {"query", pub.external_id},
                          {"retrieved_at", timestamp()},
                          {"payload", to_json(pub)}};
    store(publication_path(pub.external_id), doc);
  }

  const std::filesystem::path& dir() const { return dir_; }

  /// FNV-1a 64-bit, hex. Used only as a filename key.
  static std::string key_hash(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
  }

 private:
  std::filesystem::path candidates_path(const NormalizedTitle& q) const {
    return dir_ / "candidates" / (key_hash(q.text) + ".json");
  }
  std::filesystem::path publication_path(const std::string& id) const {
    return dir_ / "publications" / (key_hash(id) + ".json");
  }

  static std::string timestamp() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char buf[32];
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
  }

  static nlohmann::json load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read cache file " + path.string());
    return nlohmann::json::parse(in);
  }

  void store(const std::filesystem::path& path, const nlohmann::json& doc) {
    std::lock_guard lock(write_mu_);
    auto tmp = path;
    tmp += ".tmp";
    {
      std::ofstream out(tmp);
      out << doc.dump(2) << '\n';
    }
    std::filesystem::rename(tmp, path);
  }

  std::filesystem::path dir_;
  mutable std::mutex write_mu_;
};

/// Knobs for one enrichment run.
struct EnrichOptions {
  double threshold = 0.9;
  std::size_t candidate_limit = 10;
  std::size_t workers = 1;
  std::size_t max_attempts = 5;
  std::chrono::milliseconds backoff_base{100};
  std::size_t abort_after_consecutive_errors = 10;
  RateLimiter* rate_limiter = nullptr;  // optional, shared across workers
};

/// Per-submission enrichment outcome.
enum class MatchOutcome { kMatched, kNoMatch, kProviderError };

struct EnrichedSubmission {
  std::string submission_id;
  MatchOutcome outcome = MatchOutcome::kNoMatch;
  std::optional<MatchRecord> match;
};

namespace detail {

template <typename F>
auto with_retry(F&& call, const EnrichOptions& opt) {
  std::chrono::milliseconds delay = opt.backoff_base;
  for (std::size_t attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const RateLimitedError& e) {
      if (attempt >= opt.max_attempts) throw;
      std::this_thread::sleep_for(std::max(e.retry_after, delay));
    } catch (const TransportError&) {
      if (attempt >= opt.max_attempts) throw;
      std::this_thread::sleep_for(delay);
    }
    delay *= 2;
  }
}

}  // namespace detail

/// Match store produced by enrich: publications by external id.
using PublicationStore = std::map<std::string, PublicationCitations>;

/// Runs the enrichment loop over submissions: candidate search, similarity
/// match, publication fetch for accepted matches. Cached submissions are
/// served without provider calls, which makes interrupted runs resumable.
/// Results are merged in submission order regardless of worker completion
/// order.
inline std::tuple<std::vector<EnrichedSubmission>, PublicationStore,
                  EnrichmentReport>
enrich(const std::vector<Submission>& submissions, Provider& provider,
       DiskCache& cache, const EnrichOptions& opt = {}) {
  std::vector<EnrichedSubmission> results(submissions.size());
  std::mutex store_mu;
  PublicationStore store;
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> consecutive_errors{0};
  std::atomic<bool> abort{false};

  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= submissions.size() || abort.load()) return;
      const Submission& sub = submissions[i];
      EnrichedSubmission& res = results[i];
      res.submission_id = sub.id;
      NormalizedTitle query = normalize_title(sub.title);
      if (query.empty()) {
        res.outcome = MatchOutcome::kNoMatch;
        consecutive_errors.store(0);
        continue;
      }
      try {
        auto candidates = cache.get_candidates(query);
        if (!candidates) {
          candidates = detail::with_retry(
              [&] {
                if (opt.rate_limiter) opt.rate_limiter->acquire();
                return provider.find_candidates(query, opt.candidate_limit);
              },
              opt);
          cache.put_candidates(query, *candidates);
        }
        auto match = select_match(query, *candidates, opt.threshold);
        if (!match) {
          res.outcome = MatchOutcome::kNoMatch;
          consecutive_errors.store(0);
          continue;
        }
        match->submission_id = sub.id;
        auto pub = cache.get_publication(match->external_id);
        if (!pub) {
          pub = detail::with_retry(
              [&] {
                if (opt.rate_limiter) opt.rate_limiter->acquire();
                return provider.fetch_publication(match->external_id);
              },
              opt);
          cache.put_publication(*pub);
        }
        {
          std::lock_guard lock(store_mu);
          store[pub->external_id] = std::move(*pub);
        }
        res.outcome = MatchOutcome::kMatched;
        res.match = std::move(match);
        consecutive_errors.store(0);
      } catch (const NotFoundError&) {
        res.outcome = MatchOutcome::kNoMatch;
        consecutive_errors.store(0);
      } catch (const std::exception&) {
        res.outcome = MatchOutcome::kProviderError;
        if (consecutive_errors.fetch_add(1) + 1 >=
            opt.abort_after_consecutive_errors)
          abort.store(true);
      }
    }
  };

  std::size_t n_workers = std::max<std::size_t>(1, opt.workers);
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }

  EnrichmentReport report;
  report.aborted = abort.load();
  for (std::size_t i = 0; i < submissions.size(); ++i) {
    const auto& res = results[i];
    if (res.submission_id.empty()) continue;  // not reached before abort
    ++report.attempted;
    auto& uoa = report.per_uoa[submissions[i].uoa_id];
    ++uoa.attempted;
    switch (res.outcome) {
      case MatchOutcome::kMatched:
        ++report.matched;
        ++uoa.matched;
        break;
      case MatchOutcome::kNoMatch:
        ++report.no_match;
        break;
      case MatchOutcome::kProviderError:
        ++report.provider_errors;
        break;
    }
  }
  for (const auto& [id, pub] : store) {
    (void)id;
    report.total_citations += pub.citations.size();
  }
  std::stable_sort(results.begin(), results.end(),
                   [](const EnrichedSubmission& a, const EnrichedSubmission& b) {
                     return a.submission_id < b.submission_id;
                   });
  return {std::move(results), std::move(store), std::move(report)};
}

}  // namespace citerank
