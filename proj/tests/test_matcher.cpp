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

#include <random>
#include <string>
#include <vector>

#include <catch_amalgamated.hpp>

#include "citerank/matcher.hpp"

using namespace citerank;

TEST_CASE("normalize_title strips case, diacritics and punctuation") {
  CHECK(normalize_title("Études of Naïve Bayes").text == "etudes of naive bayes");
  CHECK(normalize_title("  DEEP   Learning ").text == "deep learning");
  // Greek alpha has no combining mark to strip; hyphen and colon become spaces.
  CHECK(normalize_title("α-Synuclein: a review").text == "α synuclein a review");
  CHECK(normalize_title("state-of-the-art").text == "state of the art");
  CHECK(normalize_title("!!!...").text.empty());
  CHECK(normalize_title("").text.empty());
}

TEST_CASE("normalize_title handles combining marks directly") {
  // "e" + combining acute accent
  CHECK(normalize_title("cafe\xCC\x81").text == "cafe");
  // precomposed form normalizes identically
  CHECK(normalize_title("caf\xC3\xA9").text == "cafe");
}

TEST_CASE("normalize_title rejects malformed UTF-8") {
  CHECK_THROWS_AS(normalize_title("\xFF\xFE"), std::invalid_argument);
  CHECK_THROWS_AS(normalize_title("abc\xC3"), std::invalid_argument);
}

namespace {

std::string random_raw_title(std::mt19937& rng) {
  static const std::vector<std::string> pieces = {
      "Deep", "naïve", "ÉTUDE", "graph-based", "α", "Łukasz", "review:",
      "of", "the", "meta—analysis", "données", "Σ", "search", "2014",
      "ranking", "(draft)", "façade", "Ökonomie"};
  std::uniform_int_distribution<std::size_t> pick(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len(1, 8);
  std::string out;
  int n = len(rng);
  for (int i = 0; i < n; ++i) {
    if (i) out += rng() % 4 == 0 ? "  " : " ";
    out += pieces[pick(rng)];
  }
  return out;
}

}  // namespace

TEST_CASE("normalize_title is idempotent") {
  std::mt19937 rng(20260823);
  for (int i = 0; i < 500; ++i) {
    std::string raw = random_raw_title(rng);
    NormalizedTitle once = normalize_title(raw);
    CHECK(normalize_title(once.text).text == once.text);
  }
}

TEST_CASE("vectorize counts token multiplicity") {
  CHECK(vectorize(NormalizedTitle{"a b a"}) == TermVector{{"a", 2}, {"b", 1}});
  CHECK(vectorize(NormalizedTitle{""}).empty());
  CHECK(vectorize(NormalizedTitle{"graph graph graph"}) ==
        TermVector{{"graph", 3}});
}

TEST_CASE("cosine_similarity basic values") {
  TermVector v{{"a", 1}, {"b", 2}};
  CHECK(cosine_similarity(v, v) == Catch::Approx(1.0));
  CHECK(cosine_similarity({{"a", 1}}, {{"b", 1}}) == 0.0);
  CHECK(cosine_similarity({{"a", 1}, {"b", 1}}, {{"a", 1}, {"c", 1}}) ==
        Catch::Approx(0.5));
  CHECK(cosine_similarity({}, v) == 0.0);
  CHECK(cosine_similarity(v, {}) == 0.0);
}

TEST_CASE("cosine_similarity is symmetric and scale invariant") {
  std::mt19937 rng(42);
  std::uniform_int_distribution<int> tok(0, 15), cnt(1, 5), scale(2, 9);
  for (int iter = 0; iter < 500; ++iter) {
    TermVector a, b;
    for (int i = 0; i < 6; ++i) {
      a["t" + std::to_string(tok(rng))] += cnt(rng);
      b["t" + std::to_string(tok(rng))] += cnt(rng);
    }
    double s1 = cosine_similarity(a, b);
    double s2 = cosine_similarity(b, a);
    CHECK(s1 == s2);
    CHECK(s1 >= 0.0);
    CHECK(s1 <= 1.0);
    TermVector scaled = a;
    int k = scale(rng);
    for (auto& [t, c] : scaled) c *= k;
    CHECK(cosine_similarity(scaled, b) == Catch::Approx(s1).margin(1e-12));
  }
}

TEST_CASE("select_match picks the most similar candidate above threshold") {
  NormalizedTitle query = normalize_title("deep learning for citation analysis");
  std::vector<Candidate> candidates = {
      {"id2", "deep learning for citation analysis and more stuff"},
      {"id1", "deep learning for citation analysis tools"},
      {"id3", "completely unrelated topic"},
  };
  auto match = select_match(query, candidates, 0.9);
  REQUIRE(match.has_value());
  CHECK(match->external_id == "id1");
  CHECK(match->accepted);
  CHECK(match->similarity >= 0.9);
  CHECK(match->candidate_count == 3);
}

TEST_CASE("select_match returns nothing below threshold") {
  NormalizedTitle query = normalize_title("quantum chromodynamics on lattices");
  std::vector<Candidate> candidates = {
      {"a", "classical mechanics for engineers"},
      {"b", "lattices in order theory"},
  };
  CHECK_FALSE(select_match(query, candidates, 0.9).has_value());
}

TEST_CASE("select_match accepts an exact duplicate with similarity 1") {
  NormalizedTitle query = normalize_title("An Exact Title");
  auto match = select_match(query, {{"x", "An Exact Title"}}, 0.9);
  REQUIRE(match.has_value());
  CHECK(match->similarity == Catch::Approx(1.0));
}

TEST_CASE("select_match breaks similarity ties by smallest external id") {
  NormalizedTitle query = normalize_title("tie break test");
  std::vector<Candidate> candidates = {
      {"zz", "tie break test"},
      {"aa", "tie break test"},
      {"mm", "tie break test"},
  };
  auto match = select_match(query, candidates, 0.9);
  REQUIRE(match.has_value());
  CHECK(match->external_id == "aa");
}

TEST_CASE("select_match validates the threshold") {
  CHECK_THROWS_AS(select_match(normalize_title("x"), {}, 0.0),
                  std::invalid_argument);
  CHECK_THROWS_AS(select_match(normalize_title("x"), {}, 1.5),
                  std::invalid_argument);
}

TEST_CASE("raising the threshold never adds accepted matches") {
  std::mt19937 rng(7);
  std::uniform_int_distribution<int> tok(0, 9), n_cand(0, 6);
  std::uniform_real_distribution<double> thr(0.05, 1.0);
  for (int iter = 0; iter < 500; ++iter) {
    std::string q;
    for (int i = 0; i < 4; ++i) q += " w" + std::to_string(tok(rng));
    NormalizedTitle query = normalize_title(q);
    std::vector<Candidate> candidates;
    int nc = n_cand(rng);
    for (int c = 0; c < nc; ++c) {
      std::string t;
      for (int i = 0; i < 4; ++i) t += " w" + std::to_string(tok(rng));
      candidates.push_back({"c" + std::to_string(c), t});
    }
    double lo = thr(rng), hi = thr(rng);
    if (lo > hi) std::swap(lo, hi);
    auto at_lo = select_match(query, candidates, lo);
    auto at_hi = select_match(query, candidates, hi);
    if (at_hi.has_value()) {
      REQUIRE(at_lo.has_value());
      CHECK(at_lo->external_id == at_hi->external_id);
    }
    if (at_lo) CHECK(at_lo->similarity >= lo);
    if (at_hi) CHECK(at_hi->similarity >= hi);
  }
}

TEST_CASE("a singleton identical candidate always matches with similarity 1") {
  std::mt19937 rng(99);
  for (int iter = 0; iter < 200; ++iter) {
    std::string raw = random_raw_title(rng);
    NormalizedTitle q = normalize_title(raw);
    if (q.empty()) continue;
    auto match = select_match(q, {{"only", raw}}, 1.0);
    REQUIRE(match.has_value());
    CHECK(match->similarity == Catch::Approx(1.0));
  }
}
