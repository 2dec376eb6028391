// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero when any criterion fails.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "support.h"
#include "synthetic.h"
#include "uirepair/cli.h"
#include "uirepair/dom_snapshot.h"
#include "uirepair/evaluation.h"
#include "uirepair/evolution_analyzer.h"
#include "uirepair/explanation_validator.h"
#include "uirepair/llm_bridge.h"
#include "uirepair/matchers.h"
#include "uirepair/pipeline.h"
#include "uirepair/statement_tools.h"

using namespace uirepair;
using namespace testsupport;

namespace {

struct Check {
  std::vector<std::string> failures;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
};

CandidateRanking ranking_of(const std::vector<WebElementRecord>& elements) {
  CandidateRanking r;
  for (const auto& e : elements) r.entries.push_back({e, 0.0});
  r.k = elements.size();
  return r;
}

MatchDecision decision(std::int64_t id, std::vector<std::string> attributes) {
  MatchDecision d;
  d.selectedNumericId = id;
  d.mentionedAttributes = std::move(attributes);
  return d;
}

PageSnapshot fixture_page(const std::string& name) { return load_page(data_path(name)); }

void explanation_consistency_cases(Check& c) {
  // MantisBT target with candidates 1 and 6; the answer names xpath and text.
  const PageSnapshot mantis_old = load_page(data_path("mantisbt/old.html"), data_path("mantisbt/old.layout"));
  const PageSnapshot mantis_new = load_page(data_path("mantisbt/new.html"), data_path("mantisbt/new.layout"));
  const auto* target = mantis_old.find_by_xpath("/html[1]/body[1]/div[4]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]");
  const auto ranking = water_rank(*target, mantis_new);
  const auto* six = mantis_new.find_by_xpath("/html[1]/body[1]/div[3]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]");
  const auto r1 = explanation_consistency(decision(six->numericId, {"xpath", "text"}), *target, ranking);
  c.expect(r1.ec == Fraction(1), "MantisBT (xpath, text) EC should be 1, got " + (r1.ec ? r1.ec->to_string() : "none"));

  const PageSnapshot col_old = fixture_page("collabtive/old.html");
  const PageSnapshot col_new = fixture_page("collabtive/new.html");
  const auto* link = col_old.find_by_xpath("/html[1]/body[1]/div[1]/div[2]/div[1]/ul[1]/li[3]/a[1]");
  const auto col_ranking = water_rank(*link, col_new);
  const auto* wrong = col_new.find_by_xpath("/html[1]/body[1]/div[1]/div[2]/div[1]/ul[1]/li[1]/a[1]");
  const auto* right = col_new.find_by_xpath("/html[1]/body[1]/div[1]/div[2]/div[2]/div[1]/div[4]/div[1]/h2[1]/a[1]");
  const std::vector<std::string> four = {"xpath", "text", "tagName", "linkText"};
  const auto r2 = explanation_consistency(decision(wrong->numericId, four), *link, col_ranking);
  c.expect(r2.ec == Fraction(1, 2), "text/linkText inconsistent should give 1/2");
  c.expect(r2.inconsistentAttributes == std::vector<std::string>{"text", "linkText"},
           "inconsistent attributes should be text, linkText");
  const auto r3 = explanation_consistency(decision(right->numericId, four), *link, col_ranking);
  c.expect(r3.ec == Fraction(3, 4), "only xpath inconsistent should give 3/4");
  c.expect(r3.inconsistentAttributes == std::vector<std::string>{"xpath"}, "inconsistent attribute should be xpath");
}

void stability_cases(Check& c) {
  const std::vector<std::int64_t> aaa = {7, 7, 7}, aab = {7, 7, 9}, abc = {7, 8, 9};
  c.expect(stability(aaa) == Fraction(1), "[a,a,a] should be 1");
  c.expect(stability(aab) == Fraction(2, 3), "[a,a,b] should be 2/3");
  c.expect(stability(abc) == Fraction(0), "[a,b,c] should be 0");
}

void prompt_fidelity(Check& c) {
  WebElementRecord target;
  target.numericId = 70;
  target.name = "new_category";
  target.xpath = "/html[1]/body[1]/div[4]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]";
  target.text = "Category1";
  target.tagName = "input";
  target.x = 363;
  target.y = 278;
  target.width = 261;
  target.height = 21;
  target.isLeaf = true;
  WebElementRecord first;
  first.numericId = 20;
  first.className = "button-small";
  first.xpath = "/html[1]/body[1]/table[1]/tbody[1]/tr[1]/td[3]/form[1]/input[1]";
  first.text = "Switch";
  first.tagName = "input";
  first.x = 951;
  first.y = 121;
  first.width = 51;
  first.height = 20;
  first.isLeaf = true;
  WebElementRecord sixth = target;
  sixth.name = "name";
  sixth.xpath = "/html[1]/body[1]/div[3]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]";
  sixth.x = 403;
  sixth.y = 295;

  const ChatPrompt matching = build_matching_prompt(target, ranking_of({first, sixth}));
  c.expect(render_prompt(matching) == read_text_file(data_path("prompts/matching.txt")), "matching prompt differs");
  const ChatPrompt repair =
      build_repair_prompt(sixth, R"(driver.findElement(By.name("new_category")).sendKeys("Category1");)");
  c.expect(render_prompt(repair) == read_text_file(data_path("prompts/repair.txt")), "repair prompt differs");
  const std::vector<std::string> inconsistent = {"text", "linkText"};
  const ChatPrompt correction = build_self_correction_prompt(
      matching,
      "The most similar element's numericId: 20. Because they share the most similar attributes: xpath, text, "
      "tagName, linkText.",
      inconsistent);
  c.expect(render_prompt(correction) == read_text_file(data_path("prompts/self_correction.txt")),
           "self-correction prompt differs");
  c.expect(matching.front().content == "You are a web UI test script repair tool.", "system sentence differs");
}

void matcher_oracles(Check& c) {
  std::mt19937_64 rng(20240501);
  for (int trial = 0; trial < 200; ++trial) {
    const PageSnapshot page = random_page(rng, 50);
    const WebElementRecord target = element(999, random_xpath(rng));
    std::vector<std::pair<std::size_t, std::int64_t>> oracle;
    for (const auto& e : page.elements) oracle.emplace_back(oracle_levenshtein(target.xpath, e.xpath), e.numericId);
    std::sort(oracle.begin(), oracle.end());
    for (std::size_t k : {std::size_t{10}, std::size_t{50}}) {
      const auto ranking = rank_by_xpath_edit_distance(target, page, k);
      bool same = ranking.entries.size() == k;
      for (std::size_t i = 0; same && i < k; ++i) {
        same = ranking.entries[i].element.numericId == oracle[i].second &&
               ranking.entries[i].score == static_cast<double>(oracle[i].first);
      }
      c.expect(same, "edit-distance ranking differs from full sort (trial " + std::to_string(trial) + ")");
    }
  }

  std::uniform_int_distribution<std::size_t> size(3, 12), extra(0, 30);
  double worst = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t th = size(rng), tw = size(rng);
    const GrayImage templ = random_image(rng, th, tw);
    const GrayImage image = random_image(rng, th + extra(rng), tw + extra(rng));
    const GrayImage expected = oracle_ncc(templ, image);
    for (NccMethod method : {NccMethod::kDirect, NccMethod::kFft}) {
      const NccResult got = ncc_match(templ, image, method);
      for (std::size_t i = 0; i < expected.pixels().size(); ++i) {
        worst = std::max(worst, std::abs(got.score_map.pixels()[i] - expected.pixels()[i]));
      }
    }
  }
  c.expect(worst <= 1e-9, "NCC deviates from the double-loop oracle by " + std::to_string(worst));

  const GrayImage scene = random_image(rng, 60, 80);
  const GrayImage patch = scene.crop(17, 29, 12, 15);
  for (NccMethod method : {NccMethod::kDirect, NccMethod::kFft}) {
    const NccResult peak = ncc_match(patch, scene, method);
    c.expect(std::abs(peak.peak_score - 1.0) <= 1e-6 && peak.peak_row == 17 && peak.peak_col == 29,
             "perfect sub-window should peak at 1.0 at (17, 29)");
  }
}

void repair_round_trip(Check& c) {
  std::mt19937_64 rng(77);
  std::size_t failures = 0;
  for (int i = 0; i < 500; ++i) {
    const GeneratedStatement g = random_statement(rng);
    WebElementRecord e = element(i, random_xpath(rng), random_word(rng), "input");
    const std::string original = g.text();
    const TestStatement parsed = parse_statement(original);
    const std::string repaired = generate_repair(parsed, e);
    const std::string expected = g.before + "xpath" + g.between + quote_java(e.xpath) + g.after;
    const std::vector<std::string> list = {repaired};
    const RepairAssessment a = assess_repair(original, list, e);
    if (repaired != expected || a.verdict != RepairVerdict::kCorrect) {
      if (++failures <= 3) {
        c.expect(false, "round trip failed for: " + original + " -> " + repaired + " (" +
                            std::string(to_string(a.verdict)) + ": " + a.note + ")");
      }
    }
  }
  c.expect(failures == 0, std::to_string(failures) + " of 500 statements failed the round trip");
}

void fixture_repairs(Check& c) {
  PipelineConfig config;
  for (const std::string app : {"mantisbt", "collabtive"}) {
    const auto cases = load_manifest(data_path(app + "/manifest.jsonl"));
    MockBackend mock = MockBackend::from_file(data_path(app + "/mock.json"));
    const BreakageOutcome o = run_breakage(cases.at(0), config, mock);
    c.expect(o.errors.empty(), app + ": unexpected stage errors");
    c.expect(o.final_verdict() == RepairVerdict::kCorrect, app + ": final verdict should be CORRECT");
    if (app == "mantisbt") {
      c.expect(!o.selfCorrected, "mantisbt: no self-correction expected");
      c.expect(o.final_pattern() == FixPattern::kDifferentLocatorAndValue,
               "mantisbt: pattern should be DIFFERENT_LOCATOR_AND_VALUE");
    } else {
      c.expect(o.selfCorrected, "collabtive: self-correction expected");
      c.expect(o.initial && o.initial->consistency && o.initial->consistency->ec == Fraction(1, 2),
               "collabtive: initial EC should be 1/2");
      c.expect(o.corrected && o.corrected->consistency && o.corrected->consistency->ec == Fraction(3, 4),
               "collabtive: corrected EC should be 3/4");
      c.expect(o.initial && o.initial->verdict() == RepairVerdict::kIncorrect,
               "collabtive: repair before self-correction should be INCORRECT");
    }
  }
}

void point_biserial_cases(Check& c) {
  std::mt19937_64 rng(4242);
  std::uniform_real_distribution<double> ec(0.0, 1.0);
  std::bernoulli_distribution coin(0.4);
  std::vector<double> x;
  std::vector<bool> y;
  for (int i = 0; i < 1000; ++i) {
    x.push_back(ec(rng));
    y.push_back(coin(rng) || x.back() > 0.8);
  }
  const double r = point_biserial(x, y);
  c.expect(std::abs(r - oracle_pearson(x, y)) <= 1e-9, "r_pbi differs from Pearson oracle");
  const std::vector<double> separated = {1.0, 1.0, 1.0, 0.0, 0.0, 0.0};
  const std::vector<bool> labels = {true, true, true, false, false, false};
  c.expect(std::abs(point_biserial(separated, labels) - 1.0) <= 1e-12, "perfect separation should give 1.0");
}

void hit_ratio_cases(Check& c) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> coin(0, 14);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<CandidateRanking> rankings;
    std::map<std::string, std::string> truth;
    for (int b = 0; b < 20; ++b) {
      CandidateRanking r;
      r.targetXpath = "/t" + std::to_string(b);
      const int gt_at = coin(rng);
      for (int i = 0; i < 10; ++i) {
        r.entries.push_back({element(i, i == gt_at ? "/gt" : "/c" + std::to_string(i)), 0.0});
      }
      truth[r.targetXpath] = "/gt";
      rankings.push_back(std::move(r));
    }
    double previous = 0.0;
    for (std::size_t k = 1; k <= 12; ++k) {
      const double hr = hit_ratio_at_k(rankings, truth, k);
      c.expect(hr >= previous, "HR@k decreased at k=" + std::to_string(k));
      previous = hr;
    }
  }
  std::vector<CandidateRanking> placed;
  std::map<std::string, std::string> truth;
  for (int rank = 1; rank <= 10; ++rank) {
    CandidateRanking r;
    r.targetXpath = "/target" + std::to_string(rank);
    for (int i = 1; i <= 10; ++i) r.entries.push_back({element(i, i == rank ? "/gt" : "/other"), 0.0});
    truth[r.targetXpath] = "/gt";
    placed.push_back(std::move(r));
  }
  for (std::size_t k = 1; k <= 10; ++k) {
    c.expect(hit_ratio_at_k(placed, truth, k) == static_cast<double>(k) / 10.0,
             "rank placement HR@" + std::to_string(k) + " should be k/10");
  }
}

void diff_classification(Check& c) {
  const auto chunks = split_diff_chunks(read_text_file(data_path("diffs/corpus.diff")));
  std::istringstream expected(read_text_file(data_path("diffs/corpus.expected")));
  std::string line;
  std::size_t i = 0, mismatches = 0;
  while (std::getline(expected, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream row(line);
    std::string file, kind, type;
    std::getline(row, file, '\t');
    std::getline(row, kind, '\t');
    std::getline(row, type, '\t');
    if (i >= chunks.size()) {
      ++mismatches;
      ++i;
      continue;
    }
    const auto& chunk = chunks[i++];
    const bool ok = chunk.file == file && to_string(chunk.kind) == kind && chunk.types.size() == 1 &&
                    to_string(*chunk.types.begin()) == type;
    if (!ok && mismatches < 3) {
      c.expect(false, "chunk " + std::to_string(i) + ": got " + chunk.file + " " + std::string(to_string(chunk.kind)) +
                          " with " + std::to_string(chunk.types.size()) + " types");
    }
    mismatches += !ok;
  }
  c.expect(i == 12 && chunks.size() == 12, "corpus should contain 12 chunks, got " + std::to_string(chunks.size()));
  c.expect(mismatches == 0, std::to_string(mismatches) + " chunk classification mismatches");
}

void determinism_offline(Check& c) {
  const auto dir = std::filesystem::temp_directory_path() / ("uirepair-acceptance-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  const SyntheticCorpus corpus = write_synthetic_corpus(dir, 62);
  c.expect(corpus.cases == 62, "synthetic corpus should hold 62 cases");
  auto recorder = std::make_shared<RecordingTransport>();
  cli::Environment env;
  env.getenv = [](const std::string&) -> std::optional<std::string> { return std::nullopt; };
  env.transport = recorder;
  std::vector<std::string> logs;
  for (const char* parallelism : {"8", "1"}) {
    const std::string out = (dir / (std::string("outcomes-") + parallelism + ".jsonl")).string();
    const std::string manifest = corpus.manifest.string(), script = corpus.mockScript.string();
    const char* argv[] = {"uirepair", "repair", manifest.c_str(), "--backend", "mock", "--mock-script",
                          script.c_str(), "--parallelism", parallelism, "-o", out.c_str()};
    std::ostringstream sout, serr;
    const int code = cli::run(static_cast<int>(std::size(argv)), argv, sout, serr, env);
    c.expect(code == 0, "repair run failed: " + serr.str());
    logs.push_back(read_text_file(out));
  }
  c.expect(logs.size() == 2 && logs[0] == logs[1] && !logs[0].empty(), "outcome logs differ between runs");
  c.expect(recorder->connection_count() == 0, "transport recorder saw network connections");
  std::filesystem::remove_all(dir);
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    std::string name;
    double limitSeconds;
    std::function<void(Check&)> run;
  };
  const std::vector<Criterion> criteria = {
      {1, "explanation consistency exact values", 1, explanation_consistency_cases},
      {2, "stability exact values", 1, stability_cases},
      {3, "prompt fidelity against golden files", 1, prompt_fidelity},
      {4, "matcher oracles (edit distance, NCC, perfect peak)", 30, matcher_oracles},
      {5, "repair round trip on 500 generated statements", 10, repair_round_trip},
      {6, "MantisBT and Collabtive repair fixtures", 5, fixture_repairs},
      {7, "point-biserial against Pearson oracle", 5, point_biserial_cases},
      {8, "hit ratio monotonicity and rank placement", 5, hit_ratio_cases},
      {9, "diff chunk classification corpus", 1, diff_classification},
      {10, "determinism and offline guarantee over 62 breakages", 60, determinism_offline},
  };
  int failed = 0;
  for (const auto& criterion : criteria) {
    Check check;
    const auto started = std::chrono::steady_clock::now();
    try {
      criterion.run(check);
    } catch (const std::exception& e) {
      check.failures.push_back(std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (seconds > criterion.limitSeconds) {
      check.failures.push_back("took longer than " + std::to_string(criterion.limitSeconds) + " s");
    }
    const bool ok = check.failures.empty();
    failed += !ok;
    std::cout << (ok ? "PASS" : "FAIL") << "  criterion " << criterion.id << ": " << criterion.name << " ("
              << seconds << " s)\n";
    for (const auto& f : check.failures) std::cout << "      " << f << '\n';
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}
