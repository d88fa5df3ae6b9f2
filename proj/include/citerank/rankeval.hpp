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
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "citerank/analytics.hpp"
#include "citerank/profile.hpp"

namespace citerank {

/// Rank tolerance: a fixed position count or a percentage of the field size.
struct Tolerance {
  double value = 0.0;
  bool is_percent = false;

  std::string label() const {
    std::ostringstream os;
    if (value == std::floor(value)) os << static_cast<long long>(value);
    else os << value;
    if (is_percent) os << '%';
    return os.str();
  }

  /// Parses "3" or "10%".
  static Tolerance parse(const std::string& s) {
    std::string t = s;
    Tolerance tol;
    if (!t.empty() && t.back() == '%') {
      tol.is_percent = true;
      t.pop_back();
    }
    std::size_t pos = 0;
    tol.value = std::stod(t, &pos);
    if (pos != t.size() || tol.value <= 0.0 ||
        (tol.is_percent && tol.value > 100.0))
      throw std::invalid_argument("bad tolerance: " + s);
    return tol;
  }

  friend bool operator<(const Tolerance& a, const Tolerance& b) {
    if (a.is_percent != b.is_percent) return !a.is_percent;
    return a.value < b.value;
  }
};

/// Institutions ordered by one metric, ranks 1..n with no gaps.
struct RankedList {
  int uoa_id = 0;
  std::string key;
  struct Entry {
    std::string institution;
    double key_value = 0.0;
    std::size_t rank = 0;
  };
  std::vector<Entry> entries;
};

/// Predicted-vs-actual ranking comparison for one UoA.
struct RankEvaluation {
  int uoa_id = 0;
  std::size_t n_institutions = 0;
  struct Row {
    std::string institution;
    std::size_t gpa_rank = 0;
    std::size_t pred_rank = 0;
    long rdiff = 0;  // gpa_rank - pred_rank
  };
  std::vector<Row> per_institution;  // in predicted-rank order
  double mean_abs_rdiff = 0.0;
  double nrdiff = 0.0;
  std::map<Tolerance, double> map_at;
  // Companion metric: fraction of institutions within tolerance. Reported
  // alongside MAP since aggregate tables alone cannot tell the two apart.
  std::map<Tolerance, double> accuracy_at;
};

/// Percentage tolerance to an absolute one: round-half-up of pct% of n,
/// never below 1.
inline std::size_t percent_tolerance(std::size_t n, double pct) {
  if (n < 1) throw std::invalid_argument("percent_tolerance: n must be >= 1");
  if (pct <= 0.0 || pct > 100.0)
    throw std::invalid_argument("percent_tolerance: pct outside (0, 100]");
  std::size_t abs_tol = static_cast<std::size_t>(std::floor(pct / 100.0 * double(n) + 0.5));
  return std::max<std::size_t>(1, abs_tol);
}

inline std::size_t absolute_tolerance(const Tolerance& tol, std::size_t n) {
  if (tol.is_percent) return percent_tolerance(n, tol.value);
  return static_cast<std::size_t>(tol.value);
}

/// Signed rank difference; positive means the citation metric ranked the
/// institution higher than peer review did.
inline long rdiff(std::size_t gpa_rank, std::size_t pred_rank) {
  if (gpa_rank < 1 || pred_rank < 1)
    throw std::invalid_argument("ranks start at 1");
  return static_cast<long>(gpa_rank) - static_cast<long>(pred_rank);
}

namespace detail {

inline double sort_key(const InstitutionUoAProfile& p, Metric m) {
  return metric_value(*p.stats, m);
}

// Secondary tie-break key: the mean at the same cutoff as the primary
// median (and vice versa), so integer median collisions rank stably.
inline double tie_key(const InstitutionUoAProfile& p, Metric m) {
  switch (m) {
    case Metric::kMedLate: return p.stats->mn_late;
    case Metric::kMedEarly: return p.stats->mn_early;
    case Metric::kMnLate: return p.stats->med_late;
    case Metric::kMnEarly: return p.stats->med_early;
  }
  return 0.0;
}

}  // namespace detail

/// Ranks one UoA's institutions by a citation metric (descending), ties
/// broken by the mean at the same cutoff (descending) then institution name
/// (ascending).
inline RankedList rank_by(const std::vector<InstitutionUoAProfile>& profiles,
                          Metric key) {
  std::vector<const InstitutionUoAProfile*> rows;
  for (const auto& p : profiles) {
    if (p.has_data()) rows.push_back(&p);
  }
  if (rows.size() < 2)
    throw std::invalid_argument("rank_by: need at least 2 profiles with data");
  std::sort(rows.begin(), rows.end(),
            [&](const InstitutionUoAProfile* a, const InstitutionUoAProfile* b) {
              double ka = detail::sort_key(*a, key), kb = detail::sort_key(*b, key);
              if (ka != kb) return ka > kb;
              double ta = detail::tie_key(*a, key), tb = detail::tie_key(*b, key);
              if (ta != tb) return ta > tb;
              return a->institution < b->institution;
            });
  RankedList out;
  out.uoa_id = rows.front()->uoa_id;
  out.key = metric_name(key);
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.entries.push_back({rows[i]->institution,
                           detail::sort_key(*rows[i], key), i + 1});
  return out;
}

/// Ranks by GPA descending, ties broken alphabetically.
inline RankedList rank_by_gpa(const std::vector<InstitutionUoAProfile>& profiles) {
  std::vector<const InstitutionUoAProfile*> rows;
  for (const auto& p : profiles) {
    if (p.has_data()) rows.push_back(&p);
  }
  if (rows.size() < 2)
    throw std::invalid_argument("rank_by: need at least 2 profiles with data");
  std::sort(rows.begin(), rows.end(),
            [](const InstitutionUoAProfile* a, const InstitutionUoAProfile* b) {
              if (a->gpa != b->gpa) return a->gpa > b->gpa;
              return a->institution < b->institution;
            });
  RankedList out;
  out.uoa_id = rows.front()->uoa_id;
  out.key = "gpa";
  for (std::size_t i = 0; i < rows.size(); ++i)
    out.entries.push_back({rows[i]->institution, rows[i]->gpa, i + 1});
  return out;
}

/// Average precision over rows in predicted-rank order with binary relevance
/// |rdiff| <= tolerance, normalized by the relevant count. Zero relevant
/// rows yield 0 so tolerance sweeps stay total.
inline double map_at_tolerance(const std::vector<RankEvaluation::Row>& rows,
                               std::size_t abs_tolerance) {
  if (abs_tolerance < 1)
    throw std::invalid_argument("map_at_tolerance: tolerance must be >= 1");
  std::size_t relevant = 0;
  double ap = 0.0;
  for (std::size_t k = 0; k < rows.size(); ++k) {
    if (static_cast<std::size_t>(std::labs(rows[k].rdiff)) <= abs_tolerance) {
      ++relevant;
      ap += double(relevant) / double(k + 1);
    }
  }
  return relevant == 0 ? 0.0 : ap / double(relevant);
}

/// Fraction of institutions whose prediction lands within the tolerance.
inline double accuracy_at_tolerance(const std::vector<RankEvaluation::Row>& rows,
                                    std::size_t abs_tolerance) {
  if (rows.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& row : rows)
    if (static_cast<std::size_t>(std::labs(row.rdiff)) <= abs_tolerance) ++hits;
  return double(hits) / double(rows.size());
}

inline const std::vector<Tolerance>& default_tolerances() {
  static const std::vector<Tolerance> kDefaults = {
      {3, false}, {5, false}, {10, false}, {10, true}, {20, true}, {30, true}};
  return kDefaults;
}

/// Compares a predicted ranking with the GPA ranking over the same
/// institution set: per-institution rdiff, mean absolute rdiff, nrdiff and
/// MAP per tolerance.
inline RankEvaluation evaluate(const RankedList& gpa_ranking,
                               const RankedList& pred_ranking,
                               const std::vector<Tolerance>& tolerances =
                                   default_tolerances()) {
  std::map<std::string, std::size_t> gpa_rank;
  for (const auto& e : gpa_ranking.entries) gpa_rank[e.institution] = e.rank;
  std::set<std::string> pred_set;
  for (const auto& e : pred_ranking.entries) pred_set.insert(e.institution);
  if (gpa_rank.size() != pred_set.size() ||
      !std::all_of(pred_set.begin(), pred_set.end(),
                   [&](const std::string& i) { return gpa_rank.count(i); })) {
    std::ostringstream os;
    os << "institution sets differ;";
    for (const auto& [name, r] : gpa_rank) {
      (void)r;
      if (!pred_set.count(name)) os << " only-in-gpa: " << name << ";";
    }
    for (const auto& name : pred_set)
      if (!gpa_rank.count(name)) os << " only-in-pred: " << name << ";";
    throw std::invalid_argument(os.str());
  }

  RankEvaluation ev;
  ev.uoa_id = gpa_ranking.uoa_id;
  ev.n_institutions = pred_ranking.entries.size();
  double abs_sum = 0.0;
  for (const auto& e : pred_ranking.entries) {
    RankEvaluation::Row row;
    row.institution = e.institution;
    row.pred_rank = e.rank;
    row.gpa_rank = gpa_rank.at(e.institution);
    row.rdiff = rdiff(row.gpa_rank, row.pred_rank);
    abs_sum += double(std::labs(row.rdiff));
    ev.per_institution.push_back(std::move(row));
  }
  ev.mean_abs_rdiff = abs_sum / double(ev.n_institutions);
  ev.nrdiff = ev.mean_abs_rdiff / double(ev.n_institutions);
  for (const auto& tol : tolerances) {
    std::size_t abs_tol = absolute_tolerance(tol, ev.n_institutions);
    ev.map_at[tol] = map_at_tolerance(ev.per_institution, abs_tol);
    ev.accuracy_at[tol] = accuracy_at_tolerance(ev.per_institution, abs_tol);
  }
  return ev;
}

/// Published metrics of a prior study for one UoA, as fixture input.
struct BaselineRow {
  std::string uoa_label;
  std::size_t n_institutions = 0;
  double mean_abs_rdiff = 0.0;
  double nrdiff = 0.0;
  std::map<Tolerance, double> map_at;
};

/// Side-by-side result of a subset-restricted comparison.
struct Comparison {
  RankEvaluation ours;
  BaselineRow baseline;
  double rdiff_improvement_pct = 0.0;   // (baseline - ours) / baseline
  double nrdiff_improvement_pct = 0.0;
  std::map<Tolerance, double> map_improvement_pct;  // (ours - baseline) / baseline
};

/// Restricts both rankings to an institution subset (ranks recomputed
/// 1..|subset|), re-evaluates, and reports percentage improvements over a
/// published baseline.
inline Comparison restrict_and_compare(
    const std::vector<InstitutionUoAProfile>& profiles, Metric key,
    const std::set<std::string>& subset, const BaselineRow& baseline,
    const std::vector<Tolerance>& tolerances = default_tolerances()) {
  if (subset.empty())
    throw std::invalid_argument("restrict_and_compare: empty subset");
  std::set<std::string> present;
  for (const auto& p : profiles) present.insert(p.institution);
  for (const auto& name : subset) {
    if (!present.count(name))
      throw std::invalid_argument("subset institution not in data: " + name);
  }
  std::vector<InstitutionUoAProfile> restricted;
  for (const auto& p : profiles)
    if (subset.count(p.institution)) restricted.push_back(p);

  Comparison cmp;
  cmp.baseline = baseline;
  cmp.ours = evaluate(rank_by_gpa(restricted), rank_by(restricted, key),
                      tolerances);
  if (baseline.mean_abs_rdiff > 0.0)
    cmp.rdiff_improvement_pct = 100.0 *
        (baseline.mean_abs_rdiff - cmp.ours.mean_abs_rdiff) /
        baseline.mean_abs_rdiff;
  if (baseline.nrdiff > 0.0)
    cmp.nrdiff_improvement_pct =
        100.0 * (baseline.nrdiff - cmp.ours.nrdiff) / baseline.nrdiff;
  for (const auto& [tol, base_map] : baseline.map_at) {
    auto it = cmp.ours.map_at.find(tol);
    if (it != cmp.ours.map_at.end() && base_map > 0.0)
      cmp.map_improvement_pct[tol] = 100.0 * (it->second - base_map) / base_map;
  }
  return cmp;
}

}  // namespace citerank
