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
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "citerank/delim.hpp"

namespace citerank {

constexpr int kMinYear = 1900;
constexpr int kCurrentYear = 2026;
constexpr int kUoaCount = 36;

/// One peer-reviewed output from a submission list.
struct Submission {
  std::string id;
  std::string title;
  int year = 0;
  std::string venue;
  std::string institution;
  int uoa_id = 0;
  std::string uoa_name;
};

/// Five star-grade percentages, highest grade first.
struct StarProfile {
  double pct_4star = 0;
  double pct_3star = 0;
  double pct_2star = 0;
  double pct_1star = 0;
  double pct_unclassified = 0;

  double sum() const {
    return pct_4star + pct_3star + pct_2star + pct_1star + pct_unclassified;
  }
};

/// Peer-review outcome for one (institution, UoA).
struct AssessmentRecord {
  std::string institution;
  int uoa_id = 0;
  double gpa = 0.0;
  std::optional<StarProfile> star_profile;
};

/// Row-level validation outcome counts for one parsed file.
struct DatasetSummary {
  std::size_t total_rows = 0;
  std::size_t valid_rows = 0;
  std::size_t rejected_rows = 0;
  std::map<std::string, std::size_t> reject_reasons;
  std::size_t institutions = 0;
  std::size_t uoas = 0;
  std::size_t institution_uoa_pairs = 0;

  void reject(const std::string& reason) {
    ++rejected_rows;
    ++reject_reasons[reason];
  }
};

/// Column-name mapping for submission files; defaults match the canonical
/// header (institution, uoa_id, uoa_name, title, year, venue).
struct SubmissionColumns {
  std::string institution = "institution";
  std::string uoa_id = "uoa_id";
  std::string uoa_name = "uoa_name";
  std::string title = "title";
  std::string year = "year";
  std::string venue = "venue";
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::optional<long> parse_int(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  std::size_t pos = 0;
  long v;
  try {
    v = std::stol(t, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (pos != t.size()) return std::nullopt;
  return v;
}

inline std::optional<double> parse_double(const std::string& s) {
  std::string t = trim(s);
  if (t.empty()) return std::nullopt;
  std::size_t pos = 0;
  double v;
  try {
    v = std::stod(t, &pos);
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (pos != t.size()) return std::nullopt;
  return v;
}

}  // namespace detail

/// Trim, collapse internal whitespace, ASCII case-fold. Institution-name
/// joins are exact after this canonicalization.
inline std::string canonicalize_name(const std::string& raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending = false;
  for (char c : raw) {
    if (c == ' ' || c == '\t' || c == '\r' || c == '\n') {
      pending = !out.empty();
      continue;
    }
    if (pending) out.push_back(' ');
    pending = false;
    out.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c + 32) : c);
  }
  return out;
}

/// variant -> canonical institution-name table, applied after
/// canonicalize_name on both sides.
class AliasTable {
 public:
  AliasTable() = default;

  /// Parses "variant<TAB>canonical" lines; blank lines and '#' comments
  /// are skipped.
  static AliasTable parse(std::istream& in) {
    AliasTable table;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      std::string t = detail::trim(line);
      if (t.empty() || t[0] == '#') continue;
      std::size_t tab = line.find('\t');
      if (tab == std::string::npos)
        throw ParseError(lineno, "alias line missing tab separator");
      table.map_[canonicalize_name(line.substr(0, tab))] =
          canonicalize_name(line.substr(tab + 1));
    }
    return table;
  }

  void add(const std::string& variant, const std::string& canonical) {
    map_[canonicalize_name(variant)] = canonicalize_name(canonical);
  }

  std::string resolve(const std::string& name) const {
    std::string canon = canonicalize_name(name);
    auto it = map_.find(canon);
    return it == map_.end() ? canon : it->second;
  }

  bool empty() const { return map_.empty(); }

 private:
  std::map<std::string, std::string> map_;
};

/// Parses a submission list. Rows with any empty required field are counted
/// as rejected with reason "incomplete"; invalid UoA ids as "unknown-uoa";
/// out-of-range years as "bad-year". Structural problems (missing columns,
/// undecodable bytes, field-count mismatches) are hard errors.
inline std::pair<std::vector<Submission>, DatasetSummary> parse_submissions(
    std::istream& in, const SubmissionColumns& cols = {}, char delim = ',') {
  DelimTable table(in, delim);
  const std::size_t c_inst = table.column(cols.institution);
  const std::size_t c_uoa = table.column(cols.uoa_id);
  const std::size_t c_uoa_name = table.column(cols.uoa_name);
  const std::size_t c_title = table.column(cols.title);
  const std::size_t c_year = table.column(cols.year);
  const std::size_t c_venue = table.column(cols.venue);

  std::vector<Submission> out;
  DatasetSummary summary;
  std::set<std::string> institutions;
  std::set<int> uoas;
  std::set<std::pair<std::string, int>> pairs;

  DelimRow row;
  while (table.next(row)) {
    ++summary.total_rows;
    Submission s;
    s.institution = detail::trim(row.fields[c_inst]);
    s.uoa_name = detail::trim(row.fields[c_uoa_name]);
    s.title = detail::trim(row.fields[c_title]);
    s.venue = detail::trim(row.fields[c_venue]);
    const std::string year_text = detail::trim(row.fields[c_year]);
    const std::string uoa_text = detail::trim(row.fields[c_uoa]);

    if (s.institution.empty() || s.uoa_name.empty() || s.title.empty() ||
        s.venue.empty() || year_text.empty() || uoa_text.empty()) {
      summary.reject("incomplete");
      continue;
    }
    auto uoa = detail::parse_int(uoa_text);
    if (!uoa || *uoa < 1 || *uoa > kUoaCount) {
      summary.reject("unknown-uoa");
      continue;
    }
    auto year = detail::parse_int(year_text);
    if (!year || *year < kMinYear || *year > kCurrentYear) {
      summary.reject("bad-year");
      continue;
    }
    s.uoa_id = static_cast<int>(*uoa);
    s.year = static_cast<int>(*year);
    s.id = "s" + std::to_string(row.line);
    ++summary.valid_rows;
    institutions.insert(canonicalize_name(s.institution));
    uoas.insert(s.uoa_id);
    pairs.emplace(canonicalize_name(s.institution), s.uoa_id);
    out.push_back(std::move(s));
  }
  summary.institutions = institutions.size();
  summary.uoas = uoas.size();
  summary.institution_uoa_pairs = pairs.size();
  return {std::move(out), std::move(summary)};
}

/// GPA from a star-grade profile: star level weighted by its percentage.
inline double compute_gpa(const StarProfile& p) {
  for (double pct : {p.pct_4star, p.pct_3star, p.pct_2star, p.pct_1star,
                     p.pct_unclassified}) {
    if (pct < 0.0) throw std::invalid_argument("negative star percentage");
  }
  double sum = p.sum();
  if (sum < 99.5 || sum > 100.5)
    throw std::invalid_argument("star percentages sum to " +
                                std::to_string(sum) + ", expected ~100");
  double gpa = (4.0 * p.pct_4star + 3.0 * p.pct_3star + 2.0 * p.pct_2star +
                1.0 * p.pct_1star) /
               100.0;
  return std::clamp(gpa, 0.0, 4.0);
}

/// Parses assessment data keyed by (institution, uoa_id). Rows whose profile
/// column is not "Outputs" are skipped. GPA comes from a gpa column or is
/// derived from the five star-percentage columns. Duplicate keys are a hard
/// error; inconsistent or out-of-range rows are rejected.
inline std::pair<std::vector<AssessmentRecord>, DatasetSummary>
parse_assessment(std::istream& in, char delim = ',') {
  DelimTable table(in, delim);
  const std::size_t c_inst = table.column("institution");
  const std::size_t c_uoa = table.column("uoa_id");
  const std::size_t c_profile = table.column("profile");
  const bool has_gpa = table.has_column("gpa");
  const bool has_stars = table.has_column("pct_4star");
  if (!has_gpa && !has_stars)
    throw ParseError(1, "missing required column 'gpa' (or star-profile columns)");

  std::size_t c_gpa = has_gpa ? table.column("gpa") : 0;
  std::size_t c_p4 = 0, c_p3 = 0, c_p2 = 0, c_p1 = 0, c_p0 = 0;
  if (has_stars) {
    c_p4 = table.column("pct_4star");
    c_p3 = table.column("pct_3star");
    c_p2 = table.column("pct_2star");
    c_p1 = table.column("pct_1star");
    c_p0 = table.column("pct_unclassified");
  }

  std::vector<AssessmentRecord> out;
  DatasetSummary summary;
  std::set<std::pair<std::string, int>> seen;

  DelimRow row;
  while (table.next(row)) {
    if (detail::trim(row.fields[c_profile]) != "Outputs") continue;
    ++summary.total_rows;
    AssessmentRecord rec;
    rec.institution = detail::trim(row.fields[c_inst]);
    auto uoa = detail::parse_int(row.fields[c_uoa]);
    if (rec.institution.empty() || !uoa || *uoa < 1 || *uoa > kUoaCount) {
      summary.reject("incomplete");
      continue;
    }
    rec.uoa_id = static_cast<int>(*uoa);
    auto key = std::make_pair(canonicalize_name(rec.institution), rec.uoa_id);
    if (!seen.insert(key).second)
      throw ParseError(row.line, "duplicate (institution, uoa_id): " +
                                     rec.institution + ", " +
                                     std::to_string(rec.uoa_id));

    std::optional<double> gpa;
    if (has_gpa) gpa = detail::parse_double(row.fields[c_gpa]);

    if (has_stars) {
      auto p4 = detail::parse_double(row.fields[c_p4]);
      auto p3 = detail::parse_double(row.fields[c_p3]);
      auto p2 = detail::parse_double(row.fields[c_p2]);
      auto p1 = detail::parse_double(row.fields[c_p1]);
      auto p0 = detail::parse_double(row.fields[c_p0]);
      if (p4 && p3 && p2 && p1 && p0) {
        StarProfile prof{*p4, *p3, *p2, *p1, *p0};
        double sum = prof.sum();
        if (sum < 99.5 || sum > 100.5) {
          summary.reject("star-sum");
          continue;
        }
        double derived = compute_gpa(prof);
        if (gpa && std::abs(*gpa - derived) > 0.005) {
          summary.reject("gpa-mismatch");
          continue;
        }
        rec.star_profile = prof;
        if (!gpa) gpa = derived;
      }
    }
    if (!gpa) {
      summary.reject("incomplete");
      continue;
    }
    if (*gpa < 0.0 || *gpa > 4.0) {
      summary.reject("gpa-range");
      continue;
    }
    rec.gpa = *gpa;
    ++summary.valid_rows;
    out.push_back(std::move(rec));
  }
  return {std::move(out), std::move(summary)};
}

/// Submissions sharing one (institution, UoA) key, joined with the GPA.
struct SubmissionGroup {
  std::string institution;  // canonical name
  int uoa_id = 0;
  std::string uoa_name;
  double gpa = 0.0;
  std::vector<Submission> submissions;
};

/// Join diagnostics: groups or assessment rows that found no partner.
struct JoinDiagnostics {
  std::vector<std::pair<std::string, int>> unmatched_submission_groups;
  std::vector<std::pair<std::string, int>> unmatched_assessments;
};

/// Joins submissions with assessment records by canonical institution name
/// and UoA. Mismatches are reported, never silently dropped.
inline std::pair<std::vector<SubmissionGroup>, JoinDiagnostics> join_assessment(
    const std::vector<Submission>& submissions,
    const std::vector<AssessmentRecord>& assessments,
    const AliasTable& aliases = {}) {
  std::map<std::pair<std::string, int>, SubmissionGroup> groups;
  for (const auto& s : submissions) {
    auto key = std::make_pair(aliases.resolve(s.institution), s.uoa_id);
    auto& g = groups[key];
    if (g.submissions.empty()) {
      g.institution = key.first;
      g.uoa_id = s.uoa_id;
      g.uoa_name = s.uoa_name;
    }
    g.submissions.push_back(s);
  }

  std::map<std::pair<std::string, int>, double> gpa_by_key;
  for (const auto& a : assessments)
    gpa_by_key[{aliases.resolve(a.institution), a.uoa_id}] = a.gpa;

  std::vector<SubmissionGroup> joined;
  JoinDiagnostics diag;
  for (auto& [key, group] : groups) {
    auto it = gpa_by_key.find(key);
    if (it == gpa_by_key.end()) {
      diag.unmatched_submission_groups.push_back(key);
      continue;
    }
    group.gpa = it->second;
    joined.push_back(std::move(group));
  }
  std::set<std::pair<std::string, int>> group_keys;
  for (const auto& g : joined) group_keys.emplace(g.institution, g.uoa_id);
  for (const auto& [key, gpa] : gpa_by_key) {
    (void)gpa;
    if (!group_keys.count(key)) diag.unmatched_assessments.push_back(key);
  }
  return {std::move(joined), std::move(diag)};
}

}  // namespace citerank
