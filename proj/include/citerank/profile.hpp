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
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "citerank/citegraph.hpp"
#include "citerank/ingest.hpp"

namespace citerank {

constexpr int kDefaultEarlyCutoff = 2014;
constexpr int kDefaultLateCutoff = 2017;

/// Citation statistics for one (institution, UoA) at both cutoffs.
/// Groups with zero matched publications carry no stats rather than zeros.
struct InstitutionUoAProfile {
  std::string institution;
  int uoa_id = 0;
  std::string uoa_name;
  double gpa = 0.0;
  std::size_t n_submissions = 0;
  std::size_t n_matched = 0;

  struct Stats {
    double mn_late = 0.0;
    double med_late = 0.0;
    double mn_early = 0.0;
    double med_early = 0.0;
  };
  std::optional<Stats> stats;  // absent when n_matched == 0

  bool has_data() const { return stats.has_value(); }
};

/// Per-UoA coverage and citation totals.
struct UoASummary {
  int uoa_id = 0;
  std::string uoa_name;
  std::size_t n_outputs = 0;
  std::size_t n_matched = 0;
  double pct_in_graph = 0.0;
  std::size_t total_citations = 0;
  double mcpp = 0.0;  // mean citations per matched paper
  bool used_citation_data = false;
};

/// Citations with citing year at or before the cutoff (inclusive).
inline std::size_t citations_at_cutoff(const PublicationCitations& pub,
                                       int cutoff_year) {
  return static_cast<std::size_t>(
      std::count_if(pub.citations.begin(), pub.citations.end(),
                    [&](const CitationRecord& c) {
                      return c.citing_year <= cutoff_year;
                    }));
}

/// Middle value for odd length, mean of the two middle values for even
/// length. No rounding is applied.
inline double median(std::vector<std::size_t> values) {
  if (values.empty())
    throw std::invalid_argument("median: no matched publications");
  std::sort(values.begin(), values.end());
  std::size_t n = values.size();
  if (n % 2 == 1) return double(values[n / 2]);
  return (double(values[n / 2 - 1]) + double(values[n / 2])) / 2.0;
}

inline double mean(const std::vector<std::size_t>& values) {
  if (values.empty()) throw std::invalid_argument("mean: no matched publications");
  return std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
}

/// Builds per-(institution, UoA) citation profiles over matched publications
/// only. Submissions without an accepted match contribute to n_submissions
/// but not to the statistics.
inline std::vector<InstitutionUoAProfile> build_profiles(
    const std::vector<SubmissionGroup>& groups,
    const std::vector<EnrichedSubmission>& matches,
    const PublicationStore& publications,
    int early_cutoff = kDefaultEarlyCutoff,
    int late_cutoff = kDefaultLateCutoff) {
  std::map<std::string, const MatchRecord*> match_by_submission;
  for (const auto& m : matches) {
    if (m.outcome == MatchOutcome::kMatched && m.match)
      match_by_submission[m.submission_id] = &*m.match;
  }

  std::vector<InstitutionUoAProfile> out;
  out.reserve(groups.size());
  for (const auto& g : groups) {
    InstitutionUoAProfile p;
    p.institution = g.institution;
    p.uoa_id = g.uoa_id;
    p.uoa_name = g.uoa_name;
    p.gpa = g.gpa;
    p.n_submissions = g.submissions.size();

    std::vector<std::size_t> late, early;
    for (const auto& s : g.submissions) {
      auto it = match_by_submission.find(s.id);
      if (it == match_by_submission.end()) continue;
      auto pub = publications.find(it->second->external_id);
      if (pub == publications.end()) continue;
      late.push_back(citations_at_cutoff(pub->second, late_cutoff));
      early.push_back(citations_at_cutoff(pub->second, early_cutoff));
    }
    p.n_matched = late.size();
    if (!late.empty()) {
      InstitutionUoAProfile::Stats st;
      st.mn_late = mean(late);
      st.med_late = median(late);
      st.mn_early = mean(early);
      st.med_early = median(early);
      p.stats = st;
    }
    out.push_back(std::move(p));
  }
  return out;
}

/// Aggregates one UoA's groups into coverage and MCPP figures. The MCPP
/// denominator is the matched-paper count.
inline UoASummary summarize_uoa(
    const std::vector<SubmissionGroup>& groups,
    const std::vector<EnrichedSubmission>& matches,
    const PublicationStore& publications, int uoa_id,
    const std::set<int>& cd_uoas = {}) {
  std::map<std::string, const MatchRecord*> match_by_submission;
  for (const auto& m : matches) {
    if (m.outcome == MatchOutcome::kMatched && m.match)
      match_by_submission[m.submission_id] = &*m.match;
  }

  UoASummary s;
  s.uoa_id = uoa_id;
  s.used_citation_data = cd_uoas.count(uoa_id) != 0;
  for (const auto& g : groups) {
    if (g.uoa_id != uoa_id) continue;
    if (s.uoa_name.empty()) s.uoa_name = g.uoa_name;
    for (const auto& sub : g.submissions) {
      ++s.n_outputs;
      auto it = match_by_submission.find(sub.id);
      if (it == match_by_submission.end()) continue;
      auto pub = publications.find(it->second->external_id);
      if (pub == publications.end()) continue;
      ++s.n_matched;
      s.total_citations += pub->second.citations.size();
    }
  }
  if (s.n_outputs > 0)
    s.pct_in_graph = 100.0 * double(s.n_matched) / double(s.n_outputs);
  if (s.n_matched > 0) s.mcpp = double(s.total_citations) / double(s.n_matched);
  return s;
}

}  // namespace citerank
