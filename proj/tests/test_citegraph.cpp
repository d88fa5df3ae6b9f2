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

#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <random>
#include <thread>

#include <catch_amalgamated.hpp>

#include "citerank/citegraph.hpp"

using namespace citerank;
namespace fs = std::filesystem;

namespace {

PublicationCitations make_pub(const std::string& id, const std::string& title,
                              std::vector<int> citing_years) {
  PublicationCitations pub;
  pub.external_id = id;
  pub.canonical_title = title;
  pub.year = 2008;
  int i = 0;
  for (int y : citing_years) pub.citations.push_back({id + "-c" + std::to_string(++i), y});
  return pub;
}

Submission make_submission(const std::string& id, const std::string& title,
                           int uoa = 8) {
  Submission s;
  s.id = id;
  s.title = title;
  s.year = 2010;
  s.venue = "V";
  s.institution = "Univ A";
  s.uoa_id = uoa;
  s.uoa_name = "Chemistry";
  return s;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("citerank-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Provider wrapper that counts and optionally fails calls.
class InstrumentedProvider : public Provider {
 public:
  explicit InstrumentedProvider(Provider& inner) : inner_(inner) {}
  std::vector<Candidate> find_candidates(const NormalizedTitle& q,
                                         std::size_t limit) override {
    ++calls;
    maybe_fail();
    return inner_.find_candidates(q, limit);
  }
  PublicationCitations fetch_publication(const std::string& id) override {
    ++calls;
    maybe_fail();
    return inner_.fetch_publication(id);
  }
  std::atomic<int> calls{0};
  int fail_first_n = 0;  // raise TransportError for the first n calls

 private:
  void maybe_fail() {
    if (calls <= fail_first_n) throw TransportError("injected failure");
  }
  Provider& inner_;
};

}  // namespace

TEST_CASE("fixture provider finds candidates by title tokens") {
  FixtureProvider provider;
  provider.add(make_pub("p1", "Deep Learning for Citation Analysis", {2015}));
  provider.add(make_pub("p2", "Shallow Parsing of Citations", {2016}));
  provider.add(make_pub("p3", "Unrelated Botany Fieldwork", {2014}));

  auto exact = provider.find_candidates(
      normalize_title("Deep Learning for Citation Analysis"), 10);
  REQUIRE_FALSE(exact.empty());
  CHECK(exact.front().external_id == "p1");

  auto miss = provider.find_candidates(normalize_title("quantum gravity"), 10);
  CHECK(miss.empty());

  auto limited = provider.find_candidates(normalize_title("citation analysis parsing"), 2);
  CHECK(limited.size() == 2);
}

TEST_CASE("fixture provider loads publication documents from a directory") {
  TempDir tmp;
  std::ofstream(tmp.path / "p1.json")
      << to_json(make_pub("p1", "A Stored Title", {2012, 2013})).dump();
  FixtureProvider provider(tmp.path);
  CHECK(provider.size() == 1);
  auto pub = provider.fetch_publication("p1");
  CHECK(pub.citations.size() == 2);
  CHECK_THROWS_AS(provider.fetch_publication("nope"), NotFoundError);
}

TEST_CASE("publication round-trips through json and dedups citing ids") {
  auto pub = make_pub("p9", "Title", {2010, 2011});
  pub.citations.push_back({"p9-c1", 2012});  // duplicate citing id
  auto restored = publication_from_json(to_json(pub));
  CHECK(restored.citations.size() == 2);
  CHECK(restored.external_id == "p9");
}

TEST_CASE("disk cache stores and retrieves candidates and publications") {
  TempDir tmp;
  DiskCache cache(tmp.path);
  NormalizedTitle q = normalize_title("Some Query Title");
  CHECK_FALSE(cache.get_candidates(q).has_value());
  cache.put_candidates(q, {{"p1", "Some Query Title"}});
  auto cands = cache.get_candidates(q);
  REQUIRE(cands.has_value());
  CHECK(cands->size() == 1);
  CHECK((*cands)[0].external_id == "p1");

  CHECK_FALSE(cache.get_publication("p1").has_value());
  cache.put_publication(make_pub("p1", "Some Query Title", {2011}));
  auto pub = cache.get_publication("p1");
  REQUIRE(pub.has_value());
  CHECK(pub->citations.size() == 1);
}

TEST_CASE("enrich matches everything when titles exist verbatim") {
  FixtureProvider provider;
  std::vector<Submission> subs;
  for (int i = 0; i < 10; ++i) {
    std::string title = "Unique Research Topic Number " + std::to_string(i) +
                        " With Distinct Words" + std::to_string(i);
    provider.add(make_pub("p" + std::to_string(i), title, {2012, 2016}));
    subs.push_back(make_submission("s" + std::to_string(i), title));
  }
  TempDir tmp;
  DiskCache cache(tmp.path);
  auto [matches, store, report] = enrich(subs, provider, cache);
  CHECK(report.attempted == 10);
  CHECK(report.matched == 10);
  CHECK(report.recall() == Catch::Approx(1.0));
  CHECK(report.total_citations == 20);
  CHECK(store.size() == 10);
}

TEST_CASE("enrich reports partial recall when a title is below threshold") {
  FixtureProvider provider;
  provider.add(make_pub("p1", "Alpha Beta Gamma Delta Study", {2010}));
  provider.add(make_pub("p2", "Epsilon Zeta Eta Theta Review", {2011}));
  provider.add(make_pub("p3", "Iota Kappa Lambda Mu Survey", {2012}));
  std::vector<Submission> subs = {
      make_submission("s1", "Alpha Beta Gamma Delta Study"),
      make_submission("s2", "Epsilon Zeta Eta Theta Review"),
      make_submission("s3", "Iota Kappa Lambda Mu Survey"),
      make_submission("s4", "Iota Kappa Completely Different Words Here"),
  };
  TempDir tmp;
  DiskCache cache(tmp.path);
  auto [matches, store, report] = enrich(subs, provider, cache);
  CHECK(report.attempted == 4);
  CHECK(report.matched == 3);
  CHECK(report.recall() == Catch::Approx(0.75));
  CHECK(report.per_uoa.at(8).attempted == 4);
  CHECK(report.per_uoa.at(8).matched == 3);
}

TEST_CASE("a warm cache serves enrich without provider calls") {
  FixtureProvider fixtures;
  std::string title = "Cache Transparency Check Title";
  fixtures.add(make_pub("p1", title, {2013, 2015}));
  std::vector<Submission> subs = {make_submission("s1", title)};
  TempDir tmp;
  DiskCache cache(tmp.path);

  InstrumentedProvider cold(fixtures);
  auto [m1, st1, r1] = enrich(subs, cold, cache);
  CHECK(cold.calls == 2);  // candidates + publication

  InstrumentedProvider warm(fixtures);
  auto [m2, st2, r2] = enrich(subs, warm, cache);
  CHECK(warm.calls == 0);

  REQUIRE(m1.size() == m2.size());
  CHECK(m1[0].match->external_id == m2[0].match->external_id);
  CHECK(m1[0].match->similarity == m2[0].match->similarity);
  CHECK(r1.matched == r2.matched);
  CHECK(r1.total_citations == r2.total_citations);
}

TEST_CASE("enrichment is resumable after interruption") {
  FixtureProvider fixtures;
  std::vector<Submission> subs;
  for (int i = 0; i < 6; ++i) {
    std::string title = "Resumable Study Part " + std::to_string(i) +
                        " Keyword" + std::to_string(i);
    fixtures.add(make_pub("p" + std::to_string(i), title, {2012}));
    subs.push_back(make_submission("s" + std::to_string(i), title));
  }
  TempDir tmp;
  DiskCache cache(tmp.path);

  // "interrupted" run: only the first 3 submissions processed
  std::vector<Submission> first_half(subs.begin(), subs.begin() + 3);
  enrich(first_half, fixtures, cache);

  InstrumentedProvider resumed(fixtures);
  auto [matches, store, report] = enrich(subs, resumed, cache);
  CHECK(report.matched == 6);
  CHECK(resumed.calls == 6);  // only the unprocessed half hit the provider

  // identical to an uninterrupted run in a fresh cache
  TempDir tmp2;
  DiskCache cache2(tmp2.path);
  auto [matches2, store2, report2] = enrich(subs, fixtures, cache2);
  REQUIRE(matches.size() == matches2.size());
  for (std::size_t i = 0; i < matches.size(); ++i) {
    CHECK(matches[i].submission_id == matches2[i].submission_id);
    CHECK((matches[i].match.has_value()) == (matches2[i].match.has_value()));
    if (matches[i].match)
      CHECK(matches[i].match->external_id == matches2[i].match->external_id);
  }
}

TEST_CASE("retry recovers from transient transport failures") {
  FixtureProvider fixtures;
  std::string title = "Transient Failure Recovery Title";
  fixtures.add(make_pub("p1", title, {2012}));
  InstrumentedProvider flaky(fixtures);
  flaky.fail_first_n = 2;
  std::vector<Submission> subs = {make_submission("s1", title)};
  TempDir tmp;
  DiskCache cache(tmp.path);
  EnrichOptions opt;
  opt.backoff_base = std::chrono::milliseconds(1);
  auto [matches, store, report] = enrich(subs, flaky, cache, opt);
  CHECK(report.matched == 1);
  CHECK(report.provider_errors == 0);
}

TEST_CASE("exhausted retries mark the submission as provider-error") {
  FixtureProvider fixtures;
  InstrumentedProvider dead(fixtures);
  dead.fail_first_n = 1000000;
  std::vector<Submission> subs = {
      make_submission("s1", "Unreachable Title One Alpha"),
  };
  TempDir tmp;
  DiskCache cache(tmp.path);
  EnrichOptions opt;
  opt.backoff_base = std::chrono::milliseconds(1);
  opt.max_attempts = 3;
  auto [matches, store, report] = enrich(subs, dead, cache, opt);
  CHECK(report.provider_errors == 1);
  CHECK(report.matched == 0);
}

TEST_CASE("a dead provider on a cold cache aborts with progress so far") {
  FixtureProvider fixtures;
  InstrumentedProvider dead(fixtures);
  dead.fail_first_n = 1000000;
  std::vector<Submission> subs;
  for (int i = 0; i < 20; ++i)
    subs.push_back(make_submission("s" + std::to_string(i),
                                   "Dead Provider Title " + std::to_string(i)));
  TempDir tmp;
  DiskCache cache(tmp.path);
  EnrichOptions opt;
  opt.backoff_base = std::chrono::milliseconds(1);
  opt.max_attempts = 2;
  opt.abort_after_consecutive_errors = 3;
  auto [matches, store, report] = enrich(subs, dead, cache, opt);
  CHECK(report.aborted);
  CHECK(report.provider_errors >= 3);
  CHECK(report.attempted < subs.size());
}

TEST_CASE("rate limiter bounds provider calls per window") {
  using clock = std::chrono::steady_clock;
  RateLimiter limiter(3, std::chrono::milliseconds(50));
  std::vector<clock::time_point> stamps;
  std::mutex mu;
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&] {
      for (int i = 0; i < 3; ++i) {
        limiter.acquire();
        std::lock_guard lock(mu);
        stamps.push_back(clock::now());
      }
    });
  }
  for (auto& t : threads) t.join();
  std::sort(stamps.begin(), stamps.end());
  REQUIRE(stamps.size() == 12);
  // no window of 50ms (minus scheduling slack) contains more than 3 stamps
  for (std::size_t i = 0; i + 3 < stamps.size(); ++i) {
    auto span = stamps[i + 3] - stamps[i];
    CHECK(span >= std::chrono::milliseconds(45));
  }
}

TEST_CASE("concurrent enrichment merges deterministically") {
  FixtureProvider fixtures;
  std::vector<Submission> subs;
  for (int i = 0; i < 40; ++i) {
    std::string title = "Parallel Merge Study " + std::to_string(i) +
                        " Token" + std::to_string(i * 7);
    fixtures.add(make_pub("p" + std::to_string(i), title, {2011, 2015}));
    subs.push_back(make_submission("s" + std::to_string(i), title));
  }
  TempDir tmp1, tmp2;
  DiskCache cache1(tmp1.path), cache2(tmp2.path);
  EnrichOptions serial;
  serial.workers = 1;
  EnrichOptions parallel;
  parallel.workers = 8;
  auto [m1, st1, r1] = enrich(subs, fixtures, cache1, serial);
  auto [m2, st2, r2] = enrich(subs, fixtures, cache2, parallel);
  REQUIRE(m1.size() == m2.size());
  for (std::size_t i = 0; i < m1.size(); ++i) {
    CHECK(m1[i].submission_id == m2[i].submission_id);
    REQUIRE(m1[i].match.has_value() == m2[i].match.has_value());
    if (m1[i].match) CHECK(m1[i].match->external_id == m2[i].match->external_id);
  }
  CHECK(r1.matched == r2.matched);
  CHECK(r1.total_citations == r2.total_citations);
}

TEST_CASE("report recall equals matched over attempted exactly") {
  FixtureProvider fixtures;
  fixtures.add(make_pub("p1", "Exact Recall Check Alpha Beta", {2012}));
  std::vector<Submission> subs = {
      make_submission("s1", "Exact Recall Check Alpha Beta"),
      make_submission("s2", "No Such Entry Gamma Delta"),
      make_submission("s3", "Another Missing Item Epsilon"),
  };
  TempDir tmp;
  DiskCache cache(tmp.path);
  auto [matches, store, report] = enrich(subs, fixtures, cache);
  CHECK(report.recall() == double(report.matched) / double(report.attempted));
  CHECK(report.matched == 1);
  CHECK(report.attempted == 3);
}
