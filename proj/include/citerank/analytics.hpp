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
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "citerank/profile.hpp"

namespace citerank {

/// The four citation aggregates correlated with GPA.
enum class Metric { kMnLate, kMedLate, kMnEarly, kMedEarly };

inline const char* metric_name(Metric m) {
  switch (m) {
    case Metric::kMnLate: return "mn_late";
    case Metric::kMedLate: return "med_late";
    case Metric::kMnEarly: return "mn_early";
    case Metric::kMedEarly: return "med_early";
  }
  return "?";
}

inline double metric_value(const InstitutionUoAProfile::Stats& s, Metric m) {
  switch (m) {
    case Metric::kMnLate: return s.mn_late;
    case Metric::kMedLate: return s.med_late;
    case Metric::kMnEarly: return s.mn_early;
    case Metric::kMedEarly: return s.med_early;
  }
  return 0.0;
}

constexpr Metric kAllMetrics[] = {Metric::kMnLate, Metric::kMedLate,
                                  Metric::kMnEarly, Metric::kMedEarly};

/// Correlation of one citation metric with GPA within one UoA.
struct UoACorrelation {
  int uoa_id = 0;
  Metric metric = Metric::kMnLate;
  double r = 0.0;
  std::size_t n = 0;
  double p = 1.0;
  bool used_citation_data = false;
  bool best_for_uoa = false;  // row maximum across the four metrics
};

/// One Fig.-2-style point: coverage vs med-late correlation for a UoA.
struct ScatterPoint {
  int uoa_id = 0;
  double coverage_pct = 0.0;
  double r_med_late = 0.0;
  bool used_citation_data = false;
};

/// Product-moment correlation coefficient. Requires equal lengths >= 3 and
/// non-degenerate series.
inline double pearson(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("pearson: length mismatch");
  const std::size_t n = xs.size();
  if (n < 3) throw std::invalid_argument("pearson: need at least 3 points");
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= double(n);
  my /= double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw std::invalid_argument("pearson: degenerate series");
  double r = sxy / std::sqrt(sxx * syy);
  return std::clamp(r, -1.0, 1.0);
}

namespace detail {

// Continued-fraction evaluation of the incomplete beta (Lentz's method).
inline double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kFpMin = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kFpMin) d = kFpMin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kFpMin) d = kFpMin;
    c = 1.0 + aa / c;
    if (std::abs(c) < kFpMin) c = kFpMin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace detail

/// Regularized incomplete beta function I_x(a, b).
inline double incomplete_beta(double a, double b, double x) {
  if (x < 0.0 || x > 1.0)
    throw std::invalid_argument("incomplete_beta: x outside [0,1]");
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                    a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::betacf(a, b, x) / a;
  return 1.0 - front * detail::betacf(b, a, 1.0 - x) / b;
}

/// Two-tailed significance of a correlation via the t statistic
/// t = r sqrt((n-2)/(1-r^2)) with n-2 degrees of freedom:
/// p = I_{df/(df+t^2)}(df/2, 1/2).
inline double p_value(double r, std::size_t n) {
  if (n < 3) throw std::invalid_argument("p_value: need n >= 3");
  double ar = std::abs(r);
  if (ar > 1.0) throw std::invalid_argument("p_value: |r| > 1");
  double df = double(n - 2);
  if (ar == 1.0) return std::numeric_limits<double>::denorm_min();
  double t2 = ar * ar * df / (1.0 - ar * ar);
  double p = incomplete_beta(df / 2.0, 0.5, df / (df + t2));
  return std::clamp(p, 0.0, 1.0);
}

/// Correlates every citation metric with GPA per UoA. UoAs with fewer than
/// three institutions carrying data are skipped and reported.
inline std::pair<std::vector<UoACorrelation>, std::vector<int>> correlate_all(
    const std::vector<InstitutionUoAProfile>& profiles,
    const std::set<int>& cd_uoas = {}) {
  std::map<int, std::vector<const InstitutionUoAProfile*>> by_uoa;
  for (const auto& p : profiles) {
    if (p.has_data()) by_uoa[p.uoa_id].push_back(&p);
  }

  std::vector<UoACorrelation> out;
  std::vector<int> skipped;
  for (const auto& [uoa_id, rows] : by_uoa) {
    if (rows.size() < 3) {
      skipped.push_back(uoa_id);
      continue;
    }
    std::vector<double> gpas;
    gpas.reserve(rows.size());
    for (const auto* p : rows) gpas.push_back(p->gpa);

    std::size_t first = out.size();
    std::size_t best_index = first;
    double best_r = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Metric m : kAllMetrics) {
      std::vector<double> values;
      values.reserve(rows.size());
      for (const auto* p : rows) values.push_back(metric_value(*p->stats, m));
      UoACorrelation c;
      c.uoa_id = uoa_id;
      c.metric = m;
      c.n = rows.size();
      c.used_citation_data = cd_uoas.count(uoa_id) != 0;
      try {
        c.r = pearson(gpas, values);
        c.p = p_value(c.r, c.n);
      } catch (const std::invalid_argument&) {
        continue;  // degenerate metric column
      }
      if (c.r > best_r) {
        best_r = c.r;
        best_index = out.size();
      }
      any = true;
      out.push_back(c);
    }
    if (any) out[best_index].best_for_uoa = true;
  }
  return {std::move(out), std::move(skipped)};
}

/// Coverage-vs-correlation points, one per UoA with a med-late correlation.
/// UoAs with no matched submissions are excluded and reported.
inline std::pair<std::vector<ScatterPoint>, std::vector<int>> scatter_data(
    const std::vector<InstitutionUoAProfile>& profiles,
    const std::vector<UoACorrelation>& correlations) {
  std::map<int, std::pair<std::size_t, std::size_t>> totals;  // uoa -> (subs, matched)
  for (const auto& p : profiles) {
    auto& t = totals[p.uoa_id];
    t.first += p.n_submissions;
    t.second += p.n_matched;
  }
  std::map<int, const UoACorrelation*> med_late;
  for (const auto& c : correlations) {
    if (c.metric == Metric::kMedLate) med_late[c.uoa_id] = &c;
  }

  std::vector<ScatterPoint> out;
  std::vector<int> excluded;
  for (const auto& [uoa_id, t] : totals) {
    auto it = med_late.find(uoa_id);
    if (t.second == 0 || it == med_late.end()) {
      excluded.push_back(uoa_id);
      continue;
    }
    ScatterPoint pt;
    pt.uoa_id = uoa_id;
    pt.coverage_pct = t.first == 0 ? 0.0 : 100.0 * double(t.second) / double(t.first);
    pt.r_med_late = it->second->r;
    pt.used_citation_data = it->second->used_citation_data;
    out.push_back(pt);
  }
  return {std::move(out), std::move(excluded)};
}

}  // namespace citerank
