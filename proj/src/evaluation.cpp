#include "uirepair/evaluation.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include <json.hpp>

#include "uirepair/error.h"

namespace uirepair {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

std::string selected_xpath(const MatchDecision& d, const CandidateRanking* ranking) {
  if (ranking == nullptr) return {};
  const RankedCandidate* c = ranking->find(d.selectedNumericId);
  return c ? c->element.xpath : std::string();
}

bool selects(const std::optional<MatchDecision>& d, const CandidateRanking* ranking, const std::string& gt) {
  return d && !gt.empty() && selected_xpath(*d, ranking) == gt;
}

RepairVerdict run_verdict(const MatchRun& run, const MatchPhase& phase) {
  if (run.repair) {
    return run.repair->assessment ? run.repair->assessment->verdict : RepairVerdict::kIncorrect;
  }
  // Without per-run repair only runs agreeing with the aggregate share its
  // repair.
  if (run.decision && phase.decision && run.decision->selectedNumericId == phase.decision->selectedNumericId) {
    return phase.verdict().value_or(RepairVerdict::kIncorrect);
  }
  return RepairVerdict::kIncorrect;
}

Credit credit_phase(const MatchPhase& phase, const CandidateRanking* ranking, const std::string& gt,
                    CreditMode mode) {
  if (gt.empty()) return {};
  if (mode == CreditMode::kAggregate) {
    Credit c;
    c.matching = selects(phase.decision, ranking, gt);
    c.repair = c.matching && phase.verdict() == RepairVerdict::kCorrect;
    return c;
  }
  std::vector<RunResult> runs;
  for (const auto& run : phase.runs) runs.push_back({selects(run.decision, ranking, gt), run_verdict(run, phase)});
  return best_of_runs(runs, mode);
}

nlohmann::ordered_json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(nullptr);
}

nlohmann::ordered_json optional_fraction(const std::optional<Fraction>& f) {
  if (!f) return nullptr;
  return {{"fraction", f->to_string()}, {"value", f->value()}};
}

nlohmann::ordered_json counts_json(const AppCounts& c) {
  return {{"application", c.application},     {"breakages", c.breakages},       {"matchingBefore", c.matchingBefore},
          {"repairBefore", c.repairBefore},   {"matchingAfter", c.matchingAfter}, {"repairAfter", c.repairAfter},
          {"selfCorrected", c.selfCorrected}};
}

nlohmann::ordered_json mention_json(const MentionStats& s) {
  return {{"responses", s.responses},
          {"mention", s.mention},
          {"valid", s.valid},
          {"correctInMention", s.correctInMention},
          {"correctInValid", s.correctInValid},
          {"correctRateTotal", optional_number(s.correctRateTotal)},
          {"correctRateValid", optional_number(s.correctRateValid)},
          {"mentionRate", optional_number(s.mentionRate)},
          {"validRate", optional_number(s.validRate)},
          {"meanMentionedPerResponse", optional_number(s.meanMentionedPerResponse)},
          {"meanValidPerResponse", optional_number(s.meanValidPerResponse)}};
}

std::string format_rate(const std::optional<double>& v) {
  if (!v) return "undefined";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

void add_counts(AppCounts& into, const BreakageMetrics& m) {
  ++into.breakages;
  into.matchingBefore += m.matchBefore;
  into.repairBefore += m.repairBefore;
  into.matchingAfter += m.matchAfter;
  into.repairAfter += m.repairAfter;
  into.selfCorrected += m.selfCorrected;
}

}  // namespace

Fraction stability(std::span<const std::int64_t> selected_ids) {
  if (selected_ids.empty()) throw Error(ErrorCode::kDegenerateInput, "stability of zero runs");
  std::map<std::int64_t, std::int64_t> counts;
  for (auto id : selected_ids) ++counts[id];
  const auto n = static_cast<std::int64_t>(selected_ids.size());
  if (n >= 2 && static_cast<std::int64_t>(counts.size()) == n) return Fraction(0);
  std::int64_t modal = 0;
  for (const auto& [id, c] : counts) modal = std::max(modal, c);
  return Fraction(modal, n);
}

std::string_view to_string(AttributeMode mode) {
  switch (mode) {
    case AttributeMode::kStructural: return "structural";
    case AttributeMode::kNonStructural: return "nonStructural";
    case AttributeMode::kAll: return "all";
  }
  return "all";
}

bool is_structural_attribute(std::string_view canonical_name) {
  return canonical_name == "xpath" || canonical_name == "x" || canonical_name == "y" || canonical_name == "isLeaf" ||
         canonical_name == "location";
}

bool attribute_in_mode(std::string_view canonical_name, AttributeMode mode) {
  switch (mode) {
    case AttributeMode::kStructural: return is_structural_attribute(canonical_name);
    case AttributeMode::kNonStructural: return !is_structural_attribute(canonical_name);
    case AttributeMode::kAll: return true;
  }
  return true;
}

MentionStats mention_valid_correct(std::span<const std::optional<ConsistencyReport>> reports, AttributeMode mode) {
  MentionStats s;
  s.responses = reports.size();
  for (const auto& report : reports) {
    if (!report) continue;
    std::size_t valid_here = 0;
    for (const auto& a : report->perAttribute) {
      ++s.mention;
      s.correctInMention += a.consistent;
      if (attribute_in_mode(a.attribute, mode)) {
        ++valid_here;
        s.correctInValid += a.consistent;
      }
    }
    s.valid += valid_here;
    s.responsesMentioning += !report->perAttribute.empty();
    s.responsesValid += valid_here > 0;
  }
  s.correctRateTotal = ratio(s.correctInMention, s.mention);
  s.correctRateValid = ratio(s.correctInValid, s.valid);
  s.mentionRate = ratio(s.responsesMentioning, s.responses);
  s.validRate = ratio(s.responsesValid, s.responses);
  s.meanMentionedPerResponse = ratio(s.mention, s.responses);
  s.meanValidPerResponse = ratio(s.valid, s.responses);
  return s;
}

Fraction gt_selected_rate(std::span<const MatchDecision> decisions, const CandidateRanking& candidates,
                          std::string_view gt_xpath) {
  if (gt_xpath.empty()) throw Error(ErrorCode::kMissingGroundTruth, "no ground-truth xpath");
  if (decisions.empty()) throw Error(ErrorCode::kDegenerateInput, "no decisions");
  std::int64_t hits = 0;
  for (const auto& d : decisions) hits += selected_xpath(d, &candidates) == gt_xpath;
  return Fraction(hits, static_cast<std::int64_t>(decisions.size()));
}

double point_biserial(const std::vector<double>& ec_values, const std::vector<bool>& correctness) {
  if (ec_values.size() != correctness.size()) throw Error(ErrorCode::kDegenerateInput, "length mismatch");
  const std::size_t n = ec_values.size();
  if (n < 2) throw Error(ErrorCode::kDegenerateInput, "need at least two observations");
  double sum1 = 0.0;
  double sum0 = 0.0;
  std::size_t n1 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (correctness[i]) {
      sum1 += ec_values[i];
      ++n1;
    } else {
      sum0 += ec_values[i];
    }
  }
  const std::size_t n0 = n - n1;
  if (n1 == 0 || n0 == 0) throw Error(ErrorCode::kDegenerateInput, "only one correctness class present");
  double mean = 0.0;
  for (double v : ec_values) mean += v;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double v : ec_values) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / static_cast<double>(n));
  if (!(sd > 0.0)) throw Error(ErrorCode::kDegenerateInput, "EC values have zero variance");
  const double m1 = sum1 / static_cast<double>(n1);
  const double m0 = sum0 / static_cast<double>(n0);
  const double p = static_cast<double>(n1) / static_cast<double>(n);
  const double q = static_cast<double>(n0) / static_cast<double>(n);
  return std::clamp((m1 - m0) / sd * std::sqrt(p * q), -1.0, 1.0);
}

std::string_view to_string(CreditMode mode) {
  switch (mode) {
    case CreditMode::kAggregate: return "aggregate";
    case CreditMode::kBestOf: return "best-of";
    case CreditMode::kMajority: return "majority";
  }
  return "aggregate";
}

CreditMode parse_credit_mode(std::string_view name) {
  if (name == "aggregate" || name == "modal") return CreditMode::kAggregate;
  if (name == "best-of" || name == "bestof") return CreditMode::kBestOf;
  if (name == "majority") return CreditMode::kMajority;
  throw Error(ErrorCode::kInvalidArgument, "unknown credit mode '" + std::string(name) + "'");
}

Credit best_of_runs(std::span<const RunResult> runs, CreditMode mode) {
  std::size_t matched = 0;
  std::size_t repaired = 0;
  for (const auto& r : runs) {
    matched += r.matchCorrect;
    repaired += r.matchCorrect && r.verdict == RepairVerdict::kCorrect;
  }
  if (mode == CreditMode::kBestOf) return {matched > 0, repaired > 0};
  return {2 * matched > runs.size(), 2 * repaired > runs.size()};
}

std::vector<GroundTruthEntry> parse_ground_truth(std::string_view text) {
  std::vector<GroundTruthEntry> out;
  std::set<std::string> seen;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.emplace_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const std::string where = "ground truth line " + std::to_string(line_no);
    if (fields.size() != 4) {
      throw Error(ErrorCode::kMalformedGroundTruth, where + ": expected 4 tab-separated fields");
    }
    if (fields[0].empty() || fields[3].empty()) {
      throw Error(ErrorCode::kMalformedGroundTruth, where + ": empty breakage id or ground-truth xpath");
    }
    if (!seen.insert(fields[0]).second) {
      throw Error(ErrorCode::kMalformedGroundTruth, where + ": duplicate breakage id '" + fields[0] + "'");
    }
    out.push_back({fields[0], fields[1], fields[2], fields[3]});
  }
  return out;
}

MetricsReport build_report(std::span<const BreakageOutcome> outcomes,
                           const std::map<std::string, GroundTruthEntry>& ground_truth,
                           std::span<const std::size_t> k_grid, CreditMode mode) {
  MetricsReport report;
  report.mode = mode;
  report.total.application = "total";
  std::map<std::string, AppCounts> apps;
  std::vector<std::size_t> hits(k_grid.size(), 0);
  std::size_t ranked_with_gt = 0;
  double stability_sum = 0.0;
  std::size_t stability_n = 0;
  std::vector<std::optional<ConsistencyReport>> initial_reports;
  std::int64_t gt_selected = 0;
  std::int64_t gt_decisions = 0;
  std::vector<double> ec_values;
  std::vector<bool> ec_correct;
  double ec_sum = 0.0;
  std::size_t ec_n = 0;

  for (const auto& o : outcomes) {
    BreakageMetrics m;
    m.breakageId = o.breakageId;
    m.application = o.application;
    std::string gt = o.groundTruthXpath.value_or("");
    if (auto it = ground_truth.find(o.breakageId); it != ground_truth.end()) {
      gt = it->second.gtXpath;
      if (m.application.empty()) m.application = it->second.application;
    }
    const CandidateRanking* ranking = o.ranking ? &*o.ranking : nullptr;
    if (ranking != nullptr && !gt.empty()) {
      ++ranked_with_gt;
      m.gtRank = ranking->rank_of_xpath(gt);
      for (std::size_t i = 0; i < k_grid.size(); ++i) hits[i] += m.gtRank && *m.gtRank <= k_grid[i];
    }
    if (o.initial) {
      const MatchPhase& p = *o.initial;
      m.stability = p.stability;
      if (p.stability) {
        stability_sum += p.stability->value();
        ++stability_n;
      }
      if (p.consistency) m.ecBefore = p.consistency->ec;
      const Credit before = credit_phase(p, ranking, gt, mode);
      m.matchBefore = before.matching;
      m.repairBefore = before.repair;
      for (const auto& run : p.runs) {
        initial_reports.push_back(run.decision ? run.consistency : std::nullopt);
        if (run.decision && !gt.empty()) {
          ++gt_decisions;
          gt_selected += selects(run.decision, ranking, gt);
        }
      }
    }
    for (const MatchPhase* p : {o.initial ? &*o.initial : nullptr, o.corrected ? &*o.corrected : nullptr}) {
      if (p == nullptr) continue;
      for (const auto& run : p->runs) {
        if (!run.consistency || !run.consistency->ec) continue;
        ec_sum += run.consistency->ec->value();
        ++ec_n;
        if (!gt.empty()) {
          ec_values.push_back(run.consistency->ec->value());
          ec_correct.push_back(selects(run.decision, ranking, gt));
        }
      }
    }
    m.selfCorrected = o.selfCorrected;
    if (o.corrected) {
      if (o.corrected->consistency) m.ecAfter = o.corrected->consistency->ec;
      const Credit after = credit_phase(*o.corrected, ranking, gt, mode);
      m.matchAfter = after.matching;
      m.repairAfter = after.repair;
    } else {
      m.ecAfter = m.ecBefore;
      m.matchAfter = m.matchBefore;
      m.repairAfter = m.repairBefore;
    }
    m.verdict = std::string(to_string(o.final_verdict()));
    if (auto pattern = o.final_pattern()) m.pattern = std::string(to_string(*pattern));
    m.errors = o.errors.size();
    report.breakagesWithErrors += !o.errors.empty();
    AppCounts& app = apps[m.application];
    app.application = m.application;
    add_counts(app, m);
    add_counts(report.total, m);
    report.perBreakage.push_back(std::move(m));
  }

  for (auto& [name, counts] : apps) report.perApplication.push_back(counts);
  for (std::size_t i = 0; i < k_grid.size(); ++i) report.hitRatio.emplace_back(k_grid[i], ratio(hits[i], ranked_with_gt));
  if (stability_n > 0) report.stabilityMean = stability_sum / static_cast<double>(stability_n);
  report.structural = mention_valid_correct(initial_reports, AttributeMode::kStructural);
  report.nonStructural = mention_valid_correct(initial_reports, AttributeMode::kNonStructural);
  report.all = mention_valid_correct(initial_reports, AttributeMode::kAll);
  if (gt_decisions > 0) report.gtSelectedRate = Fraction(gt_selected, gt_decisions);
  if (ec_n > 0) report.meanEc = ec_sum / static_cast<double>(ec_n);
  try {
    report.rPbi = point_biserial(ec_values, ec_correct);
  } catch (const Error& e) {
    report.rPbiNote = e.what();
  }
  return report;
}

std::string report_to_json(const MetricsReport& r) {
  using Json = nlohmann::ordered_json;
  Json per = Json::array();
  for (const auto& m : r.perBreakage) {
    per.push_back({{"breakageId", m.breakageId},
                   {"application", m.application},
                   {"stability", optional_fraction(m.stability)},
                   {"ecBefore", optional_fraction(m.ecBefore)},
                   {"ecAfter", optional_fraction(m.ecAfter)},
                   {"gtRank", m.gtRank ? Json(*m.gtRank) : Json(nullptr)},
                   {"matchBefore", m.matchBefore},
                   {"repairBefore", m.repairBefore},
                   {"matchAfter", m.matchAfter},
                   {"repairAfter", m.repairAfter},
                   {"selfCorrected", m.selfCorrected},
                   {"verdict", m.verdict},
                   {"fixPattern", m.pattern},
                   {"errors", m.errors}});
  }
  Json apps = Json::array();
  for (const auto& a : r.perApplication) apps.push_back(counts_json(a));
  Json hr = Json::array();
  for (const auto& [k, v] : r.hitRatio) hr.push_back({{"k", k}, {"hitRatio", optional_number(v)}});
  Json j = {{"mode", std::string(to_string(r.mode))},
            {"total", counts_json(r.total)},
            {"perApplication", apps},
            {"hitRatio", hr},
            {"stabilityMean", optional_number(r.stabilityMean)},
            {"attributes",
             {{"structural", mention_json(r.structural)},
              {"nonStructural", mention_json(r.nonStructural)},
              {"all", mention_json(r.all)}}},
            {"gtSelectedRate", optional_fraction(r.gtSelectedRate)},
            {"rPbi", optional_number(r.rPbi)},
            {"rPbiNote", r.rPbiNote},
            {"meanEc", optional_number(r.meanEc)},
            {"breakagesWithErrors", r.breakagesWithErrors},
            {"perBreakage", per}};
  return j.dump(2) + "\n";
}

std::string format_report_table(const MetricsReport& r) {
  std::string out;
  char line[256];
  out += "credit mode: " + std::string(to_string(r.mode)) + "\n\n";
  std::snprintf(line, sizeof line, "%-20s %9s %10s %10s %10s %10s %6s\n", "application", "breakages", "match(pre)",
                "repair(pre)", "match(SC)", "repair(SC)", "SC");
  out += line;
  auto row = [&](const AppCounts& c) {
    std::snprintf(line, sizeof line, "%-20s %9zu %10zu %10zu %10zu %10zu %6zu\n", c.application.c_str(), c.breakages,
                  c.matchingBefore, c.repairBefore, c.matchingAfter, c.repairAfter, c.selfCorrected);
    out += line;
  };
  for (const auto& a : r.perApplication) row(a);
  row(r.total);
  out += "\n";
  for (const auto& [k, v] : r.hitRatio) out += "HR@" + std::to_string(k) + ": " + format_rate(v) + "\n";
  out += "stability mean: " + format_rate(r.stabilityMean) + "\n";
  out += "GT selected rate: " + (r.gtSelectedRate ? r.gtSelectedRate->to_string() : std::string("undefined")) + "\n";
  out += "mean EC: " + format_rate(r.meanEc) + "\n";
  out += "r_pbi: " + format_rate(r.rPbi) + (r.rPbiNote.empty() ? "" : " (" + r.rPbiNote + ")") + "\n";
  for (const auto& [name, s] : {std::pair<const char*, const MentionStats*>{"structural", &r.structural},
                                {"nonStructural", &r.nonStructural},
                                {"all", &r.all}}) {
    out += std::string("attributes[") + name + "]: mention " + std::to_string(s->mention) + ", valid " +
           std::to_string(s->valid) + ", mentionRate " + format_rate(s->mentionRate) + ", validRate " +
           format_rate(s->validRate) + ", correctRateTotal " + format_rate(s->correctRateTotal) +
           ", correctRateValid " + format_rate(s->correctRateValid) + "\n";
  }
  out += "breakages with errors: " + std::to_string(r.breakagesWithErrors) + "\n";
  return out;
}

}  // namespace uirepair
