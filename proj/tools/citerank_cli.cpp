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
//
// citerank: links research-evaluation submission lists to an external
// citation graph, aggregates per-institution citation indicators, correlates
// them with peer-review grades and evaluates citation-predicted rankings.
//
// Pipeline commands, each persisting into a workspace directory:
//   ingest -> enrich -> profile -> correlate / evaluate -> report

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "citerank/analytics.hpp"
#include "citerank/citegraph.hpp"
#include "citerank/http_provider.hpp"
#include "citerank/ingest.hpp"
#include "citerank/matcher.hpp"
#include "citerank/profile.hpp"
#include "citerank/rankeval.hpp"
#include "citerank/workspace.hpp"

namespace fs = std::filesystem;
using namespace citerank;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 1;
constexpr int kExitProvider = 2;
constexpr int kExitIncompleteStage = 3;

struct GlobalOptions {
  std::string workspace;
  std::string config_file;
  bool verbose = false;
  std::map<std::string, std::string> config;
};

// CLI flag > config file > built-in default.
std::string config_or(const GlobalOptions& g, const std::string& key,
                      const std::string& fallback) {
  auto it = g.config.find(key);
  return it == g.config.end() ? fallback : it->second;
}

void vlog(const GlobalOptions& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[citerank] " << msg << "\n";
}

std::string fmt(double v, int precision = 6) {
  std::ostringstream os;
  os << std::setprecision(precision) << v;
  return os.str();
}

// ---- persisted intermediate formats -------------------------------------

void save_submissions(const fs::path& path, const std::vector<Submission>& subs) {
  std::ofstream out(path);
  write_delim_row(out, {"id", "institution", "uoa_id", "uoa_name", "title",
                        "year", "venue"});
  for (const auto& s : subs)
    write_delim_row(out, {s.id, s.institution, std::to_string(s.uoa_id),
                          s.uoa_name, s.title, std::to_string(s.year), s.venue});
}

std::vector<Submission> load_submissions(const fs::path& path) {
  std::ifstream in(path);
  DelimTable table(in);
  std::size_t c_id = table.column("id");
  SubmissionColumns cols;
  std::size_t c_inst = table.column(cols.institution);
  std::size_t c_uoa = table.column(cols.uoa_id);
  std::size_t c_uoa_name = table.column(cols.uoa_name);
  std::size_t c_title = table.column(cols.title);
  std::size_t c_year = table.column(cols.year);
  std::size_t c_venue = table.column(cols.venue);
  std::vector<Submission> out;
  DelimRow row;
  while (table.next(row)) {
    Submission s;
    s.id = row.fields[c_id];
    s.institution = row.fields[c_inst];
    s.uoa_id = std::stoi(row.fields[c_uoa]);
    s.uoa_name = row.fields[c_uoa_name];
    s.title = row.fields[c_title];
    s.year = std::stoi(row.fields[c_year]);
    s.venue = row.fields[c_venue];
    out.push_back(std::move(s));
  }
  return out;
}

void save_assessment(const fs::path& path,
                     const std::vector<AssessmentRecord>& recs) {
  std::ofstream out(path);
  write_delim_row(out, {"institution", "uoa_id", "profile", "gpa"});
  for (const auto& a : recs)
    write_delim_row(out, {a.institution, std::to_string(a.uoa_id), "Outputs",
                          fmt(a.gpa, 10)});
}

std::vector<AssessmentRecord> load_assessment(const fs::path& path) {
  std::ifstream in(path);
  auto [recs, summary] = parse_assessment(in);
  (void)summary;
  return recs;
}

void save_matches(const fs::path& path,
                  const std::vector<EnrichedSubmission>& matches) {
  std::ofstream out(path);
  write_delim_row(out, {"submission_id", "outcome", "external_id", "similarity",
                        "candidate_count"});
  for (const auto& m : matches) {
    std::string outcome = m.outcome == MatchOutcome::kMatched ? "matched"
                          : m.outcome == MatchOutcome::kNoMatch
                              ? "no-match"
                              : "provider-error";
    if (m.match)
      write_delim_row(out, {m.submission_id, outcome, m.match->external_id,
                            fmt(m.match->similarity, 12),
                            std::to_string(m.match->candidate_count)});
    else
      write_delim_row(out, {m.submission_id, outcome, "", "", ""});
  }
}

std::vector<EnrichedSubmission> load_matches(const fs::path& path) {
  std::ifstream in(path);
  DelimTable table(in);
  std::size_t c_sid = table.column("submission_id");
  std::size_t c_out = table.column("outcome");
  std::size_t c_eid = table.column("external_id");
  std::size_t c_sim = table.column("similarity");
  std::size_t c_cnt = table.column("candidate_count");
  std::vector<EnrichedSubmission> out;
  DelimRow row;
  while (table.next(row)) {
    EnrichedSubmission e;
    e.submission_id = row.fields[c_sid];
    const std::string& outcome = row.fields[c_out];
    if (outcome == "matched") {
      e.outcome = MatchOutcome::kMatched;
      MatchRecord m;
      m.submission_id = e.submission_id;
      m.external_id = row.fields[c_eid];
      m.similarity = std::stod(row.fields[c_sim]);
      m.candidate_count = std::stoul(row.fields[c_cnt]);
      m.accepted = true;
      e.match = std::move(m);
    } else if (outcome == "provider-error") {
      e.outcome = MatchOutcome::kProviderError;
    } else {
      e.outcome = MatchOutcome::kNoMatch;
    }
    out.push_back(std::move(e));
  }
  return out;
}

void save_profiles(const fs::path& path,
                   const std::vector<InstitutionUoAProfile>& profiles) {
  std::ofstream out(path);
  write_delim_row(out, {"institution", "uoa_id", "gpa", "n_submissions",
                        "n_matched", "mn_late", "med_late", "mn_early",
                        "med_early"});
  for (const auto& p : profiles) {
    std::vector<std::string> fields = {
        p.institution, std::to_string(p.uoa_id), fmt(p.gpa, 10),
        std::to_string(p.n_submissions), std::to_string(p.n_matched)};
    if (p.stats) {
      fields.push_back(fmt(p.stats->mn_late, 12));
      fields.push_back(fmt(p.stats->med_late, 12));
      fields.push_back(fmt(p.stats->mn_early, 12));
      fields.push_back(fmt(p.stats->med_early, 12));
    } else {
      fields.insert(fields.end(), {"NA", "NA", "NA", "NA"});
    }
    write_delim_row(out, fields);
  }
}

std::vector<InstitutionUoAProfile> load_profiles(const fs::path& path) {
  std::ifstream in(path);
  DelimTable table(in);
  std::size_t c_inst = table.column("institution");
  std::size_t c_uoa = table.column("uoa_id");
  std::size_t c_gpa = table.column("gpa");
  std::size_t c_subs = table.column("n_submissions");
  std::size_t c_matched = table.column("n_matched");
  std::size_t c_mnl = table.column("mn_late");
  std::size_t c_medl = table.column("med_late");
  std::size_t c_mne = table.column("mn_early");
  std::size_t c_mede = table.column("med_early");
  std::vector<InstitutionUoAProfile> out;
  DelimRow row;
  while (table.next(row)) {
    InstitutionUoAProfile p;
    p.institution = row.fields[c_inst];
    p.uoa_id = std::stoi(row.fields[c_uoa]);
    p.gpa = std::stod(row.fields[c_gpa]);
    p.n_submissions = std::stoul(row.fields[c_subs]);
    p.n_matched = std::stoul(row.fields[c_matched]);
    if (row.fields[c_mnl] != "NA") {
      InstitutionUoAProfile::Stats st;
      st.mn_late = std::stod(row.fields[c_mnl]);
      st.med_late = std::stod(row.fields[c_medl]);
      st.mn_early = std::stod(row.fields[c_mne]);
      st.med_early = std::stod(row.fields[c_mede]);
      p.stats = st;
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::set<int> load_cd_uoas(const fs::path& path) {
  std::set<int> out;
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  std::string line;
  while (std::getline(in, line)) {
    std::string t = line;
    if (!t.empty() && t.back() == '\r') t.pop_back();
    if (t.empty() || t[0] == '#') continue;
    out.insert(std::stoi(t));
  }
  return out;
}

std::map<int, std::string> uoa_names_from(const std::vector<Submission>& subs) {
  std::map<int, std::string> names;
  for (const auto& s : subs) names.emplace(s.uoa_id, s.uoa_name);
  return names;
}

// ---- commands ------------------------------------------------------------

int cmd_ingest(const GlobalOptions& g, const std::string& submissions_file,
               const std::string& assessment_file,
               const std::string& aliases_file, char delim) {
  Workspace ws(g.workspace);
  Workspace::Lock lock(ws.dir());

  bool unchanged = ws.stage_fresh(Stage::kIngested) &&
                   ws.input_unchanged("submissions", submissions_file) &&
                   ws.input_unchanged("assessment", assessment_file) &&
                   (aliases_file.empty() ||
                    ws.input_unchanged("aliases", aliases_file));
  if (unchanged) {
    std::cout << "ingest: up to date\n";
    return kExitOk;
  }
  ws.invalidate_from(Stage::kIngested);

  std::ifstream sub_in(submissions_file);
  if (!sub_in) {
    std::cerr << "error: cannot read " << submissions_file << "\n";
    return kExitValidation;
  }
  auto [subs, summary] = parse_submissions(sub_in, {}, delim);

  std::ifstream ass_in(assessment_file);
  if (!ass_in) {
    std::cerr << "error: cannot read " << assessment_file << "\n";
    return kExitValidation;
  }
  auto [assessments, ass_summary] = parse_assessment(ass_in, delim);

  AliasTable aliases;
  if (!aliases_file.empty()) {
    std::ifstream alias_in(aliases_file);
    if (!alias_in) {
      std::cerr << "error: cannot read " << aliases_file << "\n";
      return kExitValidation;
    }
    aliases = AliasTable::parse(alias_in);
    std::ofstream copy(ws.path("aliases.tsv"));
    std::ifstream src(aliases_file);
    copy << src.rdbuf();
  }

  auto [groups, diag] = join_assessment(subs, assessments, aliases);

  save_submissions(ws.path("submissions.csv"), subs);
  save_assessment(ws.path("assessment.csv"), assessments);
  {
    std::ofstream d(ws.path("join_diagnostics.txt"));
    for (const auto& [inst, uoa] : diag.unmatched_submission_groups)
      d << "no-assessment\t" << inst << "\t" << uoa << "\n";
    for (const auto& [inst, uoa] : diag.unmatched_assessments)
      d << "no-submissions\t" << inst << "\t" << uoa << "\n";
  }
  ws.record_input("submissions", submissions_file);
  ws.record_input("assessment", assessment_file);
  if (!aliases_file.empty()) ws.record_input("aliases", aliases_file);
  ws.mark_stage(Stage::kIngested,
                {"submissions.csv", "assessment.csv", "join_diagnostics.txt"});

  std::cout << "submissions total: " << summary.total_rows << "\n"
            << "submissions valid: " << summary.valid_rows << "\n"
            << "submissions rejected: " << summary.rejected_rows << "\n";
  for (const auto& [reason, count] : summary.reject_reasons)
    std::cout << "  " << reason << ": " << count << "\n";
  std::cout << "assessment rows: " << ass_summary.valid_rows << "\n"
            << "institutions: " << summary.institutions << "\n"
            << "uoas: " << summary.uoas << "\n"
            << "institution/uoa pairs: " << summary.institution_uoa_pairs << "\n"
            << "joined groups: " << groups.size() << "\n"
            << "unmatched submission groups: "
            << diag.unmatched_submission_groups.size() << "\n"
            << "unmatched assessment rows: " << diag.unmatched_assessments.size()
            << "\n";
  return kExitOk;
}

int cmd_enrich(const GlobalOptions& g, const std::string& provider_spec,
               double threshold, std::size_t workers, std::string cache_dir,
               std::size_t budget, std::size_t window_ms,
               std::size_t candidate_limit) {
  Workspace ws(g.workspace);
  Workspace::Lock lock(ws.dir());
  if (!ws.stage_fresh(Stage::kIngested)) {
    std::cerr << "error: ingest stage incomplete; run 'citerank ingest' first\n";
    return kExitIncompleteStage;
  }
  if (cache_dir.empty()) cache_dir = (ws.dir() / "cache").string();

  std::unique_ptr<Provider> provider;
  if (provider_spec.rfind("fixtures:", 0) == 0) {
    provider = std::make_unique<FixtureProvider>(provider_spec.substr(9));
  } else if (provider_spec == "http") {
    HttpProvider::Config cfg;
    cfg.host = config_or(g, "provider.host", "");
    cfg.port = std::stoi(config_or(g, "provider.port", "443"));
    cfg.candidates_path =
        config_or(g, "provider.candidates_path", cfg.candidates_path);
    cfg.publication_path =
        config_or(g, "provider.publication_path", cfg.publication_path);
    if (cfg.host.empty()) {
      std::cerr << "error: http provider requires provider.host in config\n";
      return kExitValidation;
    }
    provider = std::make_unique<HttpProvider>(cfg);
  } else {
    std::cerr << "error: unknown provider '" << provider_spec
              << "' (expected http or fixtures:PATH)\n";
    return kExitValidation;
  }

  auto subs = load_submissions(ws.path("submissions.csv"));
  DiskCache cache(cache_dir);
  RateLimiter limiter(budget, std::chrono::milliseconds(window_ms));
  EnrichOptions opt;
  opt.threshold = threshold;
  opt.workers = workers;
  opt.candidate_limit = candidate_limit;
  opt.rate_limiter = &limiter;
  vlog(g, "enriching " + std::to_string(subs.size()) + " submissions");
  auto [matches, store, report] = enrich(subs, *provider, cache, opt);

  save_matches(ws.path("matches.csv"), matches);
  ws.set("cache_dir", cache_dir);
  ws.set("threshold", fmt(threshold, 10));
  if (!report.aborted) ws.mark_stage(Stage::kEnriched, {"matches.csv"});

  std::cout << "attempted: " << report.attempted << "\n"
            << "matched: " << report.matched << "\n"
            << "no-match: " << report.no_match << "\n"
            << "provider-errors: " << report.provider_errors << "\n"
            << "recall: " << fmt(report.recall(), 6) << "\n"
            << "citations: " << report.total_citations << "\n";
  if (report.aborted) {
    std::cerr << "error: enrichment aborted after repeated provider failures; "
                 "workspace is resumable\n";
    return kExitProvider;
  }
  return report.provider_errors > 0 ? kExitProvider : kExitOk;
}

int cmd_profile(const GlobalOptions& g, int early_cutoff, int late_cutoff,
                const std::string& cd_file) {
  Workspace ws(g.workspace);
  Workspace::Lock lock(ws.dir());
  if (!ws.stage_fresh(Stage::kEnriched)) {
    std::cerr << "error: enrich stage incomplete; run 'citerank enrich' first\n";
    return kExitIncompleteStage;
  }
  auto subs = load_submissions(ws.path("submissions.csv"));
  auto assessments = load_assessment(ws.path("assessment.csv"));
  auto matches = load_matches(ws.path("matches.csv"));
  AliasTable aliases;
  if (fs::exists(ws.path("aliases.tsv"))) {
    std::ifstream in(ws.path("aliases.tsv"));
    aliases = AliasTable::parse(in);
  }
  auto [groups, diag] = join_assessment(subs, assessments, aliases);
  (void)diag;

  DiskCache cache(*ws.get("cache_dir"));
  PublicationStore store;
  for (const auto& m : matches) {
    if (m.outcome != MatchOutcome::kMatched || !m.match) continue;
    if (store.count(m.match->external_id)) continue;
    auto pub = cache.get_publication(m.match->external_id);
    if (!pub) {
      std::cerr << "error: publication " << m.match->external_id
                << " missing from cache; re-run enrich\n";
      return kExitIncompleteStage;
    }
    store[m.match->external_id] = std::move(*pub);
  }

  auto profiles = build_profiles(groups, matches, store, early_cutoff,
                                 late_cutoff);
  save_profiles(ws.path("profiles.csv"), profiles);

  std::set<int> cd_uoas;
  if (!cd_file.empty()) cd_uoas = load_cd_uoas(cd_file);
  std::set<int> uoa_ids;
  for (const auto& grp : groups) uoa_ids.insert(grp.uoa_id);
  {
    std::ofstream out(ws.path("uoas.csv"));
    write_delim_row(out, {"uoa_id", "uoa_name", "n_outputs", "n_matched",
                          "pct_in_graph", "total_citations", "mcpp", "cd"});
    for (int uoa : uoa_ids) {
      auto s = summarize_uoa(groups, matches, store, uoa, cd_uoas);
      write_delim_row(out, {std::to_string(s.uoa_id), s.uoa_name,
                            std::to_string(s.n_outputs),
                            std::to_string(s.n_matched), fmt(s.pct_in_graph, 6),
                            std::to_string(s.total_citations), fmt(s.mcpp, 6),
                            s.used_citation_data ? "Y" : "N"});
    }
  }
  ws.set("early_cutoff", std::to_string(early_cutoff));
  ws.set("late_cutoff", std::to_string(late_cutoff));
  ws.mark_stage(Stage::kProfiled, {"profiles.csv", "uoas.csv"});
  std::cout << "profiles: " << profiles.size() << "\n"
            << "uoas: " << uoa_ids.size() << "\n";
  return kExitOk;
}

std::set<int> cd_uoas_from_workspace(Workspace& ws) {
  std::set<int> out;
  if (!fs::exists(ws.path("uoas.csv"))) return out;
  std::ifstream in(ws.path("uoas.csv"));
  DelimTable table(in);
  std::size_t c_uoa = table.column("uoa_id");
  std::size_t c_cd = table.column("cd");
  DelimRow row;
  while (table.next(row))
    if (row.fields[c_cd] == "Y") out.insert(std::stoi(row.fields[c_uoa]));
  return out;
}

int cmd_correlate(const GlobalOptions& g) {
  Workspace ws(g.workspace);
  Workspace::Lock lock(ws.dir());
  if (!ws.stage_fresh(Stage::kProfiled)) {
    std::cerr << "error: profile stage incomplete; run 'citerank profile' first\n";
    return kExitIncompleteStage;
  }
  auto profiles = load_profiles(ws.path("profiles.csv"));
  auto cd_uoas = cd_uoas_from_workspace(ws);
  auto [correlations, skipped] = correlate_all(profiles, cd_uoas);

  std::map<int, std::map<Metric, const UoACorrelation*>> by_uoa;
  for (const auto& c : correlations) by_uoa[c.uoa_id][c.metric] = &c;
  {
    std::ofstream out(ws.path("correlations.csv"));
    write_delim_row(out, {"cd_flag", "uoa", "r_mn_late", "r_med_late",
                          "r_mn_early", "r_med_early", "n", "p_med_late"});
    for (const auto& [uoa, metrics] : by_uoa) {
      auto cell = [&](Metric m) {
        auto it = metrics.find(m);
        return it == metrics.end() ? std::string("NA") : fmt(it->second->r, 6);
      };
      std::string cd = "N", n = "", p = "NA";
      if (!metrics.empty()) {
        const auto* any = metrics.begin()->second;
        cd = any->used_citation_data ? "Y" : "N";
        n = std::to_string(any->n);
      }
      auto med = metrics.find(Metric::kMedLate);
      if (med != metrics.end()) p = fmt(med->second->p, 6);
      write_delim_row(out, {cd, std::to_string(uoa), cell(Metric::kMnLate),
                            cell(Metric::kMedLate), cell(Metric::kMnEarly),
                            cell(Metric::kMedEarly), n, p});
    }
  }
  ws.mark_stage(Stage::kCorrelated, {"correlations.csv"});
  std::cout << "uoas correlated: " << by_uoa.size() << "\n";
  for (int uoa : skipped)
    std::cout << "skipped uoa " << uoa << " (fewer than 3 institutions)\n";
  return kExitOk;
}

std::vector<Tolerance> parse_tolerances(const std::string& list) {
  if (list.empty()) return default_tolerances();
  std::vector<Tolerance> out;
  std::stringstream ss(list);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(Tolerance::parse(item));
  return out;
}

Metric parse_metric(const std::string& name) {
  for (Metric m : kAllMetrics)
    if (name == metric_name(m)) return m;
  throw std::invalid_argument("unknown metric: " + name);
}

std::vector<BaselineRow> load_baseline(const fs::path& path,
                                       const std::vector<Tolerance>& tols) {
  std::ifstream in(path);
  DelimTable table(in);
  std::size_t c_uoa = table.column("uoa");
  std::size_t c_n = table.column("n");
  std::size_t c_rdiff = table.column("mean_abs_rdiff");
  std::size_t c_nrdiff = table.column("nrdiff");
  std::vector<std::pair<Tolerance, std::size_t>> tol_cols;
  for (const auto& t : tols) {
    std::string col = "map_rt_" + t.label();
    if (table.has_column(col)) tol_cols.emplace_back(t, table.column(col));
  }
  std::vector<BaselineRow> out;
  DelimRow row;
  while (table.next(row)) {
    BaselineRow b;
    b.uoa_label = row.fields[c_uoa];
    b.n_institutions = std::stoul(row.fields[c_n]);
    b.mean_abs_rdiff = std::stod(row.fields[c_rdiff]);
    b.nrdiff = std::stod(row.fields[c_nrdiff]);
    for (const auto& [tol, col] : tol_cols)
      b.map_at[tol] = std::stod(row.fields[col]);
    out.push_back(std::move(b));
  }
  return out;
}

int cmd_evaluate(const GlobalOptions& g, const std::string& metric_name_arg,
                 const std::string& tolerance_list,
                 const std::string& subset_file,
                 const std::string& baseline_file) {
  Workspace ws(g.workspace);
  Workspace::Lock lock(ws.dir());
  if (!ws.stage_fresh(Stage::kProfiled)) {
    std::cerr << "error: profile stage incomplete; run 'citerank profile' first\n";
    return kExitIncompleteStage;
  }
  Metric metric = parse_metric(metric_name_arg);
  auto tolerances = parse_tolerances(tolerance_list);
  auto profiles = load_profiles(ws.path("profiles.csv"));

  std::map<int, std::vector<InstitutionUoAProfile>> by_uoa;
  for (auto& p : profiles) by_uoa[p.uoa_id].push_back(p);

  std::ofstream out(ws.path("evaluations.csv"));
  std::vector<std::string> header = {"uoa", "n", "mean_abs_rdiff", "nrdiff"};
  for (const auto& t : tolerances) header.push_back("map_rt_" + t.label());
  for (const auto& t : tolerances) header.push_back("acc_rt_" + t.label());
  write_delim_row(out, header);

  std::size_t evaluated = 0;
  for (const auto& [uoa, rows] : by_uoa) {
    std::size_t with_data = 0;
    for (const auto& p : rows)
      if (p.has_data()) ++with_data;
    if (with_data < 2) {
      vlog(g, "skipping uoa " + std::to_string(uoa) + ": too few institutions");
      continue;
    }
    auto ev = evaluate(rank_by_gpa(rows), rank_by(rows, metric), tolerances);
    std::vector<std::string> fields = {std::to_string(uoa),
                                       std::to_string(ev.n_institutions),
                                       fmt(ev.mean_abs_rdiff, 6),
                                       fmt(ev.nrdiff, 6)};
    for (const auto& t : tolerances) fields.push_back(fmt(ev.map_at.at(t), 6));
    for (const auto& t : tolerances)
      fields.push_back(fmt(ev.accuracy_at.at(t), 6));
    write_delim_row(out, fields);
    ++evaluated;
  }
  out.close();

  if (!subset_file.empty() || !baseline_file.empty()) {
    if (subset_file.empty() || baseline_file.empty()) {
      std::cerr << "error: --subset and --baseline must be given together\n";
      return kExitValidation;
    }
    // Subset file: "uoa_id<TAB>institution" per line, grouped per UoA.
    std::map<int, std::set<std::string>> subsets;
    {
      std::ifstream in(subset_file);
      if (!in) {
        std::cerr << "error: cannot read " << subset_file << "\n";
        return kExitValidation;
      }
      std::string line;
      while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos) {
          std::cerr << "error: subset line missing tab: " << line << "\n";
          return kExitValidation;
        }
        subsets[std::stoi(line.substr(0, tab))].insert(
            canonicalize_name(line.substr(tab + 1)));
      }
    }
    auto baselines = load_baseline(baseline_file, tolerances);
    std::ofstream cmp_out(ws.path("comparison.csv"));
    std::vector<std::string> cmp_header = {
        "uoa", "n", "ours_mean_abs_rdiff", "ours_nrdiff",
        "baseline_mean_abs_rdiff", "baseline_nrdiff", "rdiff_improvement_pct",
        "nrdiff_improvement_pct"};
    for (const auto& t : tolerances)
      cmp_header.push_back("map_improvement_pct_rt_" + t.label());
    write_delim_row(cmp_out, cmp_header);
    std::size_t bi = 0;
    for (const auto& [uoa, subset] : subsets) {
      if (bi >= baselines.size()) {
        std::cerr << "error: more subset UoAs than baseline rows\n";
        return kExitValidation;
      }
      const auto& baseline = baselines[bi++];
      auto cmp = restrict_and_compare(by_uoa.at(uoa), metric, subset, baseline,
                                      tolerances);
      std::vector<std::string> fields = {
          std::to_string(uoa), std::to_string(cmp.ours.n_institutions),
          fmt(cmp.ours.mean_abs_rdiff, 6), fmt(cmp.ours.nrdiff, 6),
          fmt(baseline.mean_abs_rdiff, 6), fmt(baseline.nrdiff, 6),
          fmt(cmp.rdiff_improvement_pct, 6), fmt(cmp.nrdiff_improvement_pct, 6)};
      for (const auto& t : tolerances) {
        auto it = cmp.map_improvement_pct.find(t);
        fields.push_back(it == cmp.map_improvement_pct.end() ? "NA"
                                                             : fmt(it->second, 6));
      }
      write_delim_row(cmp_out, fields);
    }
  }

  std::vector<std::string> outputs = {"evaluations.csv"};
  if (fs::exists(ws.path("comparison.csv"))) outputs.push_back("comparison.csv");
  ws.set("eval_metric", metric_name_arg);
  ws.mark_stage(Stage::kEvaluated, outputs);
  std::cout << "uoas evaluated: " << evaluated << "\n";
  return kExitOk;
}

void print_table_file(const fs::path& path, std::ostream& os) {
  std::ifstream in(path);
  DelimTable table(in);
  std::vector<std::vector<std::string>> rows;
  rows.push_back(table.header());
  DelimRow row;
  while (table.next(row)) rows.push_back(row.fields);
  std::vector<std::size_t> width(rows[0].size(), 0);
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i)
      width[i] = std::max(width[i], r[i].size());
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i)
      os << std::left << std::setw(int(width[i]) + 2) << r[i];
    os << "\n";
  }
}

int cmd_report(const GlobalOptions& g, const std::string& tables_list,
               const std::string& scatter_file,
               const std::string& tolerance_list) {
  Workspace ws(g.workspace);
  (void)tolerance_list;
  std::set<int> tables;
  {
    std::stringstream ss(tables_list.empty() ? "1,3,6" : tables_list);
    std::string item;
    while (std::getline(ss, item, ',')) tables.insert(std::stoi(item));
  }

  auto require = [&](Stage s, const char* cmd) -> bool {
    if (ws.stage_fresh(s)) return true;
    std::cerr << "error: stage '" << stage_name(s)
              << "' incomplete; run 'citerank " << cmd << "' first\n";
    return false;
  };

  for (int table : tables) {
    switch (table) {
      case 1: {
        if (!require(Stage::kProfiled, "profile")) return kExitIncompleteStage;
        std::cout << "== UoA coverage and mean citations per paper ==\n";
        print_table_file(ws.path("uoas.csv"), std::cout);
        fs::copy_file(ws.path("uoas.csv"), ws.path("report_table1.csv"),
                      fs::copy_options::overwrite_existing);
        break;
      }
      case 2: {
        if (!require(Stage::kEnriched, "enrich")) return kExitIncompleteStage;
        auto subs = load_submissions(ws.path("submissions.csv"));
        auto matches = load_matches(ws.path("matches.csv"));
        std::size_t matched = 0;
        for (const auto& m : matches)
          if (m.outcome == MatchOutcome::kMatched) ++matched;
        std::set<std::string> institutions;
        std::set<int> uoas;
        std::set<std::pair<std::string, int>> pairs;
        for (const auto& s : subs) {
          institutions.insert(canonicalize_name(s.institution));
          uoas.insert(s.uoa_id);
          pairs.emplace(canonicalize_name(s.institution), s.uoa_id);
        }
        std::ofstream out(ws.path("report_table2.csv"));
        write_delim_row(out, {"statistic", "value"});
        write_delim_row(out, {"uoas", std::to_string(uoas.size())});
        write_delim_row(out, {"institutions", std::to_string(institutions.size())});
        write_delim_row(out, {"institution_uoa_pairs", std::to_string(pairs.size())});
        write_delim_row(out, {"submissions", std::to_string(subs.size())});
        write_delim_row(out, {"submissions_matched", std::to_string(matched)});
        out.close();
        std::cout << "== Dataset statistics ==\n";
        print_table_file(ws.path("report_table2.csv"), std::cout);
        break;
      }
      case 3: {
        if (!require(Stage::kCorrelated, "correlate"))
          return kExitIncompleteStage;
        std::cout << "== GPA vs citation-statistic correlations ==\n";
        print_table_file(ws.path("correlations.csv"), std::cout);
        fs::copy_file(ws.path("correlations.csv"), ws.path("report_table3.csv"),
                      fs::copy_options::overwrite_existing);
        break;
      }
      case 4:
      case 5: {
        if (!require(Stage::kProfiled, "profile")) return kExitIncompleteStage;
        Metric metric = table == 4 ? Metric::kMedLate : Metric::kMedEarly;
        auto profiles = load_profiles(ws.path("profiles.csv"));
        std::map<int, std::vector<InstitutionUoAProfile>> by_uoa;
        for (auto& p : profiles) by_uoa[p.uoa_id].push_back(p);
        std::string name = "report_table" + std::to_string(table) + ".csv";
        std::ofstream out(ws.path(name));
        write_delim_row(out, {"uoa", "gpa_rank_institution", "gpa",
                              "pred_rank_institution", metric_name(metric),
                              "rdiff"});
        for (const auto& [uoa, rows] : by_uoa) {
          std::size_t with_data = 0;
          for (const auto& p : rows)
            if (p.has_data()) ++with_data;
          if (with_data < 2) continue;
          auto gpa_ranking = rank_by_gpa(rows);
          auto pred_ranking = rank_by(rows, metric);
          auto ev = evaluate(gpa_ranking, pred_ranking, {});
          for (std::size_t i = 0; i < std::min<std::size_t>(5, ev.per_institution.size()); ++i) {
            const auto& r = ev.per_institution[i];
            write_delim_row(
                out, {std::to_string(uoa), gpa_ranking.entries[i].institution,
                      fmt(gpa_ranking.entries[i].key_value, 6), r.institution,
                      fmt(pred_ranking.entries[i].key_value, 6),
                      (r.rdiff > 0 ? "+" : "") + std::to_string(r.rdiff)});
          }
        }
        out.close();
        std::cout << "== Top-5 rankings, GPA vs " << metric_name(metric)
                  << " ==\n";
        print_table_file(ws.path(name), std::cout);
        break;
      }
      case 6: {
        if (!require(Stage::kEvaluated, "evaluate")) return kExitIncompleteStage;
        std::cout << "== Rank prediction quality ==\n";
        print_table_file(ws.path("evaluations.csv"), std::cout);
        fs::copy_file(ws.path("evaluations.csv"), ws.path("report_table6.csv"),
                      fs::copy_options::overwrite_existing);
        break;
      }
      case 7: {
        if (!require(Stage::kEvaluated, "evaluate")) return kExitIncompleteStage;
        if (!fs::exists(ws.path("comparison.csv"))) {
          std::cerr << "error: no comparison data; run 'citerank evaluate' "
                       "with --subset and --baseline\n";
          return kExitIncompleteStage;
        }
        std::cout << "== Baseline comparison ==\n";
        print_table_file(ws.path("comparison.csv"), std::cout);
        fs::copy_file(ws.path("comparison.csv"), ws.path("report_table7.csv"),
                      fs::copy_options::overwrite_existing);
        break;
      }
      default:
        std::cerr << "error: unknown table " << table << "\n";
        return kExitValidation;
    }
  }

  if (!scatter_file.empty()) {
    if (!require(Stage::kCorrelated, "correlate")) return kExitIncompleteStage;
    auto profiles = load_profiles(ws.path("profiles.csv"));
    auto cd_uoas = cd_uoas_from_workspace(ws);
    auto [correlations, skipped_corr] = correlate_all(profiles, cd_uoas);
    (void)skipped_corr;
    auto [points, excluded] = scatter_data(profiles, correlations);
    std::ofstream out(scatter_file);
    out << "# coverage_pct r_med_late marker uoa_id\n";
    for (const auto& pt : points)
      out << fmt(pt.coverage_pct, 6) << " " << fmt(pt.r_med_late, 6) << " "
          << (pt.used_citation_data ? "x" : "o") << " " << pt.uoa_id << "\n";
    for (int uoa : excluded)
      std::cout << "scatter: excluded uoa " << uoa << " (no matched data)\n";
    std::cout << "scatter data written to " << scatter_file << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"citation-based analysis of peer-reviewed research rankings"};
  app.require_subcommand(1);

  GlobalOptions g;
  app.add_option("--workspace", g.workspace, "workspace directory")
      ->required();
  app.add_option("--config", g.config_file, "key=value config file");
  app.add_flag("--verbose", g.verbose, "verbose progress output");

  std::string submissions_file, assessment_file, aliases_file;
  std::string delimiter = "comma";
  auto* ingest_cmd = app.add_subcommand("ingest", "parse and validate inputs");
  ingest_cmd->add_option("--submissions", submissions_file)->required();
  ingest_cmd->add_option("--assessment", assessment_file)->required();
  ingest_cmd->add_option("--aliases", aliases_file);
  ingest_cmd->add_option("--delimiter", delimiter)
      ->check(CLI::IsMember({"comma", "tab"}));

  std::string provider_spec = "http";
  double threshold = -1.0;
  std::size_t workers = 1, budget = 100, window_ms = 1000, limit = 10;
  std::string cache_dir;
  auto* enrich_cmd =
      app.add_subcommand("enrich", "match submissions against the graph");
  enrich_cmd->add_option("--provider", provider_spec,
                         "http or fixtures:PATH");
  enrich_cmd->add_option("--threshold", threshold, "match threshold");
  enrich_cmd->add_option("--workers", workers);
  enrich_cmd->add_option("--cache", cache_dir);
  enrich_cmd->add_option("--budget", budget, "requests per window");
  enrich_cmd->add_option("--window-ms", window_ms);
  enrich_cmd->add_option("--limit", limit, "candidates per query");

  int early_cutoff = 0, late_cutoff = 0;
  std::string cd_file;
  auto* profile_cmd =
      app.add_subcommand("profile", "aggregate citation statistics");
  profile_cmd->add_option("--early-cutoff", early_cutoff);
  profile_cmd->add_option("--late-cutoff", late_cutoff);
  profile_cmd->add_option("--cd-uoas", cd_file,
                          "file of uoa ids whose panels used citation data");

  auto* correlate_cmd =
      app.add_subcommand("correlate", "correlate GPA with citation statistics");

  std::string metric_arg, tolerance_list, subset_file, baseline_file;
  auto* evaluate_cmd =
      app.add_subcommand("evaluate", "rank-prediction evaluation");
  evaluate_cmd->add_option("--metric", metric_arg,
                           "mn_late|med_late|mn_early|med_early");
  evaluate_cmd->add_option("--tolerances", tolerance_list,
                           "e.g. 3,5,10,10%,20%,30%");
  evaluate_cmd->add_option("--subset", subset_file,
                           "uoa<TAB>institution lines for restricted comparison");
  evaluate_cmd->add_option("--baseline", baseline_file,
                           "published baseline metrics");

  std::string tables_list, scatter_file, report_tolerances;
  auto* report_cmd = app.add_subcommand("report", "emit tables and plot data");
  report_cmd->add_option("--tables", tables_list, "e.g. 1,3,6");
  report_cmd->add_option("--scatter", scatter_file, "scatter plot data file");
  report_cmd->add_option("--tolerances", report_tolerances);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!g.config_file.empty()) {
      std::ifstream in(g.config_file);
      if (!in) {
        std::cerr << "error: cannot read config " << g.config_file << "\n";
        return kExitValidation;
      }
      g.config = parse_config(in);
    }
    if (ingest_cmd->parsed())
      return cmd_ingest(g, submissions_file, assessment_file, aliases_file,
                        delimiter == "tab" ? '\t' : ',');
    if (enrich_cmd->parsed()) {
      if (threshold < 0.0)
        threshold = std::stod(config_or(g, "match_threshold", "0.9"));
      return cmd_enrich(g, provider_spec, threshold, workers, cache_dir, budget,
                        window_ms, limit);
    }
    if (profile_cmd->parsed()) {
      if (early_cutoff == 0)
        early_cutoff = std::stoi(config_or(g, "early_cutoff", "2014"));
      if (late_cutoff == 0)
        late_cutoff = std::stoi(config_or(g, "late_cutoff", "2017"));
      return cmd_profile(g, early_cutoff, late_cutoff, cd_file);
    }
    if (correlate_cmd->parsed()) return cmd_correlate(g);
    if (evaluate_cmd->parsed()) {
      if (metric_arg.empty())
        metric_arg = config_or(g, "eval_metric", "med_early");
      return cmd_evaluate(g, metric_arg, tolerance_list, subset_file,
                          baseline_file);
    }
    if (report_cmd->parsed())
      return cmd_report(g, tables_list, scatter_file, report_tolerances);
  } catch (const TransportError& e) {
    std::cerr << "provider error: " << e.what() << "\n";
    return kExitProvider;
  } catch (const ParseError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
