#include <gtest/gtest.h>

#include <map>
#include <random>

#include <json.hpp>

#include "support.h"
#include "uirepair/evaluation.h"

using namespace uirepair;
using testsupport::code_of;
using testsupport::element;

namespace {

MatchDecision pick(std::int64_t id) {
  MatchDecision d;
  d.selectedNumericId = id;
  return d;
}

ConsistencyReport report_with(const std::vector<std::pair<std::string, bool>>& attrs) {
  ConsistencyReport r;
  std::int64_t ok = 0;
  for (const auto& [name, consistent] : attrs) {
    r.perAttribute.push_back({name, consistent, {}});
    ok += consistent;
    if (!consistent) r.inconsistentAttributes.push_back(name);
  }
  r.mentionedCount = attrs.size();
  if (!attrs.empty()) r.ec = Fraction(ok, static_cast<std::int64_t>(attrs.size()));
  return r;
}

CandidateRanking three_candidates() {
  CandidateRanking r;
  r.entries = {{element(0, "/a"), 0}, {element(1, "/gt"), 0}, {element(2, "/c"), 0}};
  return r;
}

RepairAttempt repair_with(RepairVerdict verdict) {
  RepairAttempt a;
  a.assessment = RepairAssessment{};
  a.assessment->verdict = verdict;
  a.assessment->fixPattern = FixPattern::kModifyLocatorValue;
  return a;
}

// One breakage with the given per-run selections; the aggregate follows the
// first selection and its repair gets `verdict`.
BreakageOutcome outcome(const std::string& id, const std::string& app, const std::vector<std::int64_t>& picks,
                        RepairVerdict verdict) {
  BreakageOutcome o;
  o.breakageId = id;
  o.application = app;
  o.targetXpath = "/old";
  o.groundTruthXpath = "/gt";
  o.ranking = three_candidates();
  MatchPhase p;
  for (auto id_pick : picks) {
    MatchRun run;
    run.decision = pick(id_pick);
    run.consistency = report_with({{"xpath", id_pick == 1}, {"text", true}});
    run.consistency->selectedNumericId = id_pick;
    p.runs.push_back(run);
  }
  p.decision = pick(picks.front());
  p.consistency = p.runs.front().consistency;
  p.stability = stability(picks);
  p.repair = repair_with(verdict);
  o.initial = p;
  return o;
}

}  // namespace

TEST(Stability, MatchesModalCountOracle) {
  std::mt19937_64 rng(51);
  for (int i = 0; i < 500; ++i) {
    std::vector<std::int64_t> ids(1 + rng() % 6);
    for (auto& id : ids) id = static_cast<std::int64_t>(rng() % 5);
    std::map<std::int64_t, std::int64_t> counts;
    for (auto id : ids) ++counts[id];
    std::int64_t modal = 0;
    for (const auto& [id, c] : counts) modal = std::max(modal, c);
    const auto n = static_cast<std::int64_t>(ids.size());
    const Fraction expected = (n >= 2 && modal == 1) ? Fraction(0) : Fraction(modal, n);
    EXPECT_EQ(stability(ids), expected);
  }
  const std::vector<std::int64_t> one = {7};
  EXPECT_EQ(stability(one), Fraction(1));
  const std::vector<std::int64_t> three_of_four = {2, 2, 5, 2};
  EXPECT_EQ(stability(three_of_four).to_string(), "3/4");
  EXPECT_EQ(code_of([] { stability({}); }), ErrorCode::kDegenerateInput);
}

TEST(PointBiserial, EqualsPearsonOnZeroOneCoding) {
  std::mt19937_64 rng(52);
  std::uniform_real_distribution<double> v(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> x(3 + rng() % 20);
    std::vector<bool> y(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = v(rng);
      y[i] = i < 2 ? i == 0 : rng() % 2 == 0;
    }
    EXPECT_NEAR(point_biserial(x, y), testsupport::oracle_pearson(x, y), 1e-9);
  }
}

TEST(PointBiserial, DegenerateInputs) {
  EXPECT_EQ(code_of([] { point_biserial({0.5}, {true}); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(code_of([] { point_biserial({0.5, 1.0}, {true}); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(code_of([] { point_biserial({0.5, 1.0}, {true, true}); }), ErrorCode::kDegenerateInput);
  EXPECT_EQ(code_of([] { point_biserial({0.5, 0.5}, {true, false}); }), ErrorCode::kDegenerateInput);
  EXPECT_NEAR(point_biserial({1.0, 0.0}, {true, false}), 1.0, 1e-12);
}

TEST(Mentions, CountsPerMode) {
  const std::vector<std::optional<ConsistencyReport>> reports = {
      report_with({{"xpath", true}, {"text", false}, {"location", true}}),
      report_with({{"text", true}}),
      std::nullopt,
      report_with({}),
  };
  const auto s = mention_valid_correct(reports, AttributeMode::kStructural);
  EXPECT_EQ(s.responses, 4u);
  EXPECT_EQ(s.mention, 4u);
  EXPECT_EQ(s.valid, 2u);
  EXPECT_EQ(s.correctInMention, 3u);
  EXPECT_EQ(s.correctInValid, 2u);
  EXPECT_EQ(s.responsesMentioning, 2u);
  EXPECT_EQ(s.responsesValid, 1u);
  EXPECT_DOUBLE_EQ(*s.correctRateTotal, 0.75);
  EXPECT_DOUBLE_EQ(*s.correctRateValid, 1.0);
  EXPECT_DOUBLE_EQ(*s.mentionRate, 0.5);
  EXPECT_DOUBLE_EQ(*s.validRate, 0.25);
  EXPECT_DOUBLE_EQ(*s.meanMentionedPerResponse, 1.0);

  const auto ns = mention_valid_correct(reports, AttributeMode::kNonStructural);
  EXPECT_EQ(ns.valid, 2u);
  EXPECT_EQ(ns.correctInValid, 1u);
  const auto all = mention_valid_correct(reports, AttributeMode::kAll);
  EXPECT_EQ(all.valid, all.mention);

  const auto empty = mention_valid_correct({}, AttributeMode::kAll);
  EXPECT_FALSE(empty.correctRateTotal);
  EXPECT_FALSE(empty.mentionRate);
}

TEST(Mentions, StructuralAndNonStructuralPartitionTheMentions) {
  std::mt19937_64 rng(53);
  const std::vector<std::string> vocabulary = {"id", "name", "class", "xpath", "text", "tagName", "linkText",
                                               "x",  "y",    "width", "height", "isLeaf", "location", "size"};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::optional<ConsistencyReport>> reports;
    for (int i = 0; i < 5; ++i) {
      if (rng() % 5 == 0) {
        reports.push_back(std::nullopt);
        continue;
      }
      std::vector<std::pair<std::string, bool>> attrs;
      for (std::size_t j = rng() % 4; j > 0; --j) attrs.emplace_back(vocabulary[rng() % vocabulary.size()], rng() % 2);
      reports.push_back(report_with(attrs));
    }
    const auto s = mention_valid_correct(reports, AttributeMode::kStructural);
    const auto n = mention_valid_correct(reports, AttributeMode::kNonStructural);
    EXPECT_EQ(s.valid + n.valid, s.mention);
    EXPECT_EQ(s.correctInValid + n.correctInValid, s.correctInMention);
    EXPECT_LE(s.correctInValid, s.valid);
  }
}

TEST(GroundTruthSelection, RateAndErrors) {
  const auto ranking = three_candidates();
  const std::vector<MatchDecision> d = {pick(1), pick(0), pick(1), pick(42)};
  EXPECT_EQ(gt_selected_rate(d, ranking, "/gt"), Fraction(1, 2));
  EXPECT_EQ(code_of([&] { gt_selected_rate(d, ranking, ""); }), ErrorCode::kMissingGroundTruth);
  EXPECT_EQ(code_of([&] { gt_selected_rate({}, ranking, "/gt"); }), ErrorCode::kDegenerateInput);
}

TEST(Credit, BestOfAndMajorityAgreeWithCountingOracle) {
  std::mt19937_64 rng(54);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<RunResult> runs(1 + rng() % 5);
    std::size_t m = 0, r = 0;
    for (auto& run : runs) {
      run.matchCorrect = rng() % 2;
      run.verdict = static_cast<RepairVerdict>(rng() % 3);
      m += run.matchCorrect;
      r += run.matchCorrect && run.verdict == RepairVerdict::kCorrect;
    }
    const auto best = best_of_runs(runs, CreditMode::kBestOf);
    EXPECT_EQ(best.matching, m >= 1);
    EXPECT_EQ(best.repair, r >= 1);
    const auto maj = best_of_runs(runs, CreditMode::kMajority);
    EXPECT_EQ(maj.matching, m * 2 > runs.size());
    EXPECT_EQ(maj.repair, r * 2 > runs.size());
    EXPECT_LE(maj.repair, best.repair);
    EXPECT_LE(best.repair, best.matching);
  }
  EXPECT_EQ(parse_credit_mode("best-of"), CreditMode::kBestOf);
  EXPECT_EQ(code_of([] { parse_credit_mode("oracle"); }), ErrorCode::kInvalidArgument);
}

TEST(GroundTruthFile, Parse) {
  const auto entries = parse_ground_truth("# id\tapp\ttarget\tgt\n\nb1\tMantisBT\t/old\t/new\r\nb2\t\t/x\t/y");
  ASSERT_EQ(entries.size(), 2u);
  EXPECT_EQ(entries[0].application, "MantisBT");
  EXPECT_EQ(entries[0].gtXpath, "/new");
  EXPECT_EQ(entries[1].gtXpath, "/y");
  EXPECT_EQ(code_of([] { parse_ground_truth("b1\tapp\t/x\n"); }), ErrorCode::kMalformedGroundTruth);
  EXPECT_EQ(code_of([] { parse_ground_truth("b1\tapp\t/x\t\n"); }), ErrorCode::kMalformedGroundTruth);
  EXPECT_EQ(code_of([] { parse_ground_truth("b1\ta\t/x\t/y\nb1\ta\t/x\t/z\n"); }), ErrorCode::kMalformedGroundTruth);
}

TEST(Report, AggregatesOutcomes) {
  std::vector<BreakageOutcome> outcomes = {
      outcome("a1", "Alpha", {1, 1, 0, 1}, RepairVerdict::kCorrect),
      outcome("a2", "Alpha", {0, 0, 1, 2}, RepairVerdict::kCorrect),
      outcome("b1", "Beta", {1, 1, 1, 1}, RepairVerdict::kIncorrect),
  };
  // a2 self-corrects onto the right element.
  outcomes[1].selfCorrected = true;
  MatchPhase corrected = *outcomes[1].initial;
  corrected.decision = pick(1);
  corrected.repair = repair_with(RepairVerdict::kCorrect);
  outcomes[1].corrected = corrected;

  const std::vector<std::size_t> grid = {1, 2, 3};
  const MetricsReport r = build_report(outcomes, {}, grid);
  EXPECT_EQ(r.total.breakages, 3u);
  EXPECT_EQ(r.total.matchingBefore, 2u);
  EXPECT_EQ(r.total.repairBefore, 1u);
  EXPECT_EQ(r.total.matchingAfter, 3u);
  EXPECT_EQ(r.total.repairAfter, 2u);
  EXPECT_EQ(r.total.selfCorrected, 1u);
  ASSERT_EQ(r.perApplication.size(), 2u);
  EXPECT_EQ(r.perApplication[0].application, "Alpha");
  EXPECT_EQ(r.perApplication[0].matchingAfter, 2u);
  ASSERT_EQ(r.hitRatio.size(), 3u);
  EXPECT_DOUBLE_EQ(*r.hitRatio[0].second, 0.0);
  EXPECT_DOUBLE_EQ(*r.hitRatio[1].second, 1.0);
  EXPECT_EQ(r.perBreakage[0].gtRank, 2u);
  EXPECT_EQ(r.gtSelectedRate, Fraction(2, 3));
  EXPECT_NEAR(*r.stabilityMean, (0.75 + 0.5 + 1.0) / 3.0, 1e-12);
  EXPECT_EQ(r.all.responses, 12u);

  const auto best = build_report(outcomes, {}, grid, CreditMode::kBestOf);
  EXPECT_EQ(best.total.matchingBefore, 3u);
}

TEST(Report, GroundTruthFileOverridesOutcomeXpath) {
  std::vector<BreakageOutcome> outcomes = {outcome("a1", "", {0}, RepairVerdict::kCorrect)};
  const std::map<std::string, GroundTruthEntry> truth = {{"a1", {"a1", "Alpha", "/old", "/a"}}};
  const std::vector<std::size_t> grid = {1};
  const auto r = build_report(outcomes, truth, grid);
  EXPECT_EQ(r.total.matchingBefore, 1u);
  EXPECT_EQ(r.perApplication[0].application, "Alpha");
  EXPECT_DOUBLE_EQ(*r.hitRatio[0].second, 1.0);
}

TEST(Report, TotalsEqualSumOverApplications) {
  std::mt19937_64 rng(55);
  std::vector<BreakageOutcome> outcomes;
  for (int i = 0; i < 40; ++i) {
    std::vector<std::int64_t> picks(1 + rng() % 4);
    for (auto& p : picks) p = static_cast<std::int64_t>(rng() % 3);
    outcomes.push_back(outcome("c" + std::to_string(i), "App" + std::to_string(rng() % 5), picks,
                               static_cast<RepairVerdict>(rng() % 3)));
  }
  const std::vector<std::size_t> grid = {1, 3};
  for (CreditMode mode : {CreditMode::kAggregate, CreditMode::kBestOf, CreditMode::kMajority}) {
    const auto r = build_report(outcomes, {}, grid, mode);
    AppCounts sum;
    for (const auto& a : r.perApplication) {
      sum.breakages += a.breakages;
      sum.matchingBefore += a.matchingBefore;
      sum.repairBefore += a.repairBefore;
      sum.matchingAfter += a.matchingAfter;
      sum.repairAfter += a.repairAfter;
    }
    EXPECT_EQ(sum.breakages, r.total.breakages);
    EXPECT_EQ(sum.matchingBefore, r.total.matchingBefore);
    EXPECT_EQ(sum.repairBefore, r.total.repairBefore);
    EXPECT_EQ(sum.matchingAfter, r.total.matchingAfter);
    EXPECT_EQ(sum.repairAfter, r.total.repairAfter);
    EXPECT_LE(r.total.repairBefore, r.total.matchingBefore);
  }
}

TEST(Report, JsonAndTableRendering) {
  const std::vector<BreakageOutcome> outcomes = {outcome("a1", "Alpha", {1, 0, 1}, RepairVerdict::kCorrect)};
  const std::vector<std::size_t> grid = {1, 10};
  const auto r = build_report(outcomes, {}, grid);
  const auto j = nlohmann::json::parse(report_to_json(r));
  EXPECT_EQ(j["mode"], "aggregate");
  EXPECT_EQ(j["total"]["breakages"], 1);
  EXPECT_EQ(j["perBreakage"][0]["stability"]["fraction"], "2/3");
  EXPECT_EQ(j["hitRatio"][1]["k"], 10);
  EXPECT_TRUE(j["rPbi"].is_null() || j["rPbi"].is_number());
  const std::string table = format_report_table(r);
  EXPECT_NE(table.find("Alpha"), std::string::npos);
  EXPECT_NE(table.find("credit mode: aggregate"), std::string::npos);
}

TEST(OutcomeLog, RoundTrips) {
  std::vector<BreakageOutcome> outcomes = {outcome("a1", "Alpha", {1, 0, 1}, RepairVerdict::kCorrect),
                                           outcome("a2", "Beta", {2}, RepairVerdict::kNeedsManualReview)};
  outcomes[1].errors.push_back({"match", "MalformedResponse", "no numericId"});
  outcomes[1].initial->runs[0].response = "quote \" and\nnewline";
  const std::string log = serialize_outcome_log(outcomes);
  const auto back = parse_outcome_log(log);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(serialize_outcome_log(back), log);
  EXPECT_EQ(back[1].errors, outcomes[1].errors);
  EXPECT_EQ(back[0].final_verdict(), RepairVerdict::kCorrect);
  EXPECT_EQ(back[0].initial->stability, Fraction(2, 3));
  EXPECT_EQ(code_of([] { outcome_from_json_line("{\"breakageId\": 3}"); }), ErrorCode::kMalformedOutcomeLog);
  EXPECT_EQ(code_of([] { parse_outcome_log("not json\n"); }), ErrorCode::kMalformedOutcomeLog);
}
