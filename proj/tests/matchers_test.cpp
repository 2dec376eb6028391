#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <sstream>

#include "support.h"
#include "uirepair/matchers.h"

using namespace uirepair;
using namespace testsupport;

TEST(Levenshtein, KnownValues) {
  EXPECT_EQ(levenshtein("", ""), 0u);
  EXPECT_EQ(levenshtein("abc", ""), 3u);
  EXPECT_EQ(levenshtein("kitten", "sitting"), 3u);
  EXPECT_EQ(levenshtein("/html[1]/body[1]/div[4]", "/html[1]/body[1]/div[3]"), 1u);
  EXPECT_DOUBLE_EQ(normalized_similarity("", ""), 1.0);
  EXPECT_DOUBLE_EQ(normalized_similarity("abcd", "abcf"), 0.75);
}

TEST(Levenshtein, AgreesWithMatrixOracleAndIsSymmetric) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const std::string a = random_xpath(rng), b = random_xpath(rng);
    EXPECT_EQ(levenshtein(a, b), oracle_levenshtein(a, b));
    EXPECT_EQ(levenshtein(a, b), levenshtein(b, a));
    EXPECT_EQ(levenshtein(a, a), 0u);
  }
}

TEST(EditDistanceRanking, IdenticalPageRanksTargetFirstWithDistanceZero) {
  const PageSnapshot page = load_page(data_path("mantisbt/old.html"));
  for (const auto& target : page.elements) {
    const auto ranking = rank_by_xpath_edit_distance(target, page);
    ASSERT_FALSE(ranking.entries.empty());
    EXPECT_EQ(ranking.entries[0].element.xpath, target.xpath);
    EXPECT_EQ(ranking.entries[0].score, 0.0);
  }
}

TEST(EditDistanceRanking, TopKIsSortedAndTiesBreakByNumericId) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const PageSnapshot page = random_page(rng, 30);
    const auto target = element(500, random_xpath(rng));
    const auto ranking = rank_by_xpath_edit_distance(target, page, 7);
    ASSERT_EQ(ranking.entries.size(), 7u);
    for (std::size_t i = 1; i < ranking.entries.size(); ++i) {
      const auto& a = ranking.entries[i - 1];
      const auto& b = ranking.entries[i];
      EXPECT_TRUE(a.score < b.score || (a.score == b.score && a.element.numericId < b.element.numericId));
    }
  }
}

TEST(EditDistanceRanking, FewerElementsThanKAndErrors) {
  PageSnapshot page;
  page.elements = {element(0, "/a"), element(1, "/b")};
  EXPECT_EQ(rank_by_xpath_edit_distance(element(9, "/a"), page, 10).entries.size(), 2u);
  EXPECT_EQ(code_of([&] { rank_by_xpath_edit_distance(element(9, "/a"), page, 0); }), ErrorCode::kInvalidArgument);
  EXPECT_EQ(code_of([&] { rank_by_xpath_edit_distance(element(9, "/a"), PageSnapshot{}, 3); }), ErrorCode::kEmptyPage);
}

TEST(Water, ExactMatchesComeFirstInPriorityOrder) {
  auto target = element(0, "/html[1]/body[1]/form[1]/input[1]", "Go", "input");
  target.id = "go";
  target.name = "submit";
  PageSnapshot page;
  auto by_name = element(0, "/x/input[1]", "", "input");
  by_name.name = "submit";
  auto by_id = element(1, "/y/input[1]", "", "input");
  by_id.id = "go";
  auto by_xpath = element(2, target.xpath, "", "input");
  auto similar = element(3, "/html[1]/body[1]/form[1]/input[2]", "Go", "input");
  auto other_tag = element(4, "/html[1]/body[1]/form[1]/a[1]", "Go", "a");
  page.elements = {by_name, by_id, by_xpath, similar, other_tag};
  const auto ranking = water_rank(target, page);
  ASSERT_EQ(ranking.entries.size(), 4u);
  EXPECT_EQ(ranking.entries[0].element.numericId, 1);
  EXPECT_EQ(ranking.entries[1].element.numericId, 2);
  EXPECT_EQ(ranking.entries[2].element.numericId, 0);
  EXPECT_EQ(ranking.entries[3].element.numericId, 3);
  EXPECT_DOUBLE_EQ(ranking.entries[0].score, water_exact_match_score(0));
  EXPECT_GT(water_exact_match_score(4), 1.0);
  EXPECT_GT(water_exact_match_score(0), water_exact_match_score(1));
}

TEST(Water, SimilarityFollowsWeightedFormula) {
  auto target = element(0, "/html[1]/body[1]/div[4]/input[1]", "Category1", "input");
  target.x = 363;
  target.y = 278;
  auto candidate = element(1, "/html[1]/body[1]/div[3]/input[1]", "Category", "input");
  candidate.x = 366;
  candidate.y = 282;
  const double xpath_sim = 1.0 - 1.0 / 32.0;
  const double text_sim = 1.0 - 1.0 / 9.0;
  const double expected = 0.9 * xpath_sim + 0.1 * (0.0 + 1.0 / 6.0 + text_sim) / 3.0;
  EXPECT_NEAR(water_similarity(target, candidate), expected, 1e-12);
  candidate.text = "Category1";
  EXPECT_NEAR(water_similarity(target, candidate), 0.9 * xpath_sim + 0.1 * (1.0 + 1.0 / 6.0 + 1.0) / 3.0, 1e-12);
}

TEST(Water, StageTwoScoresStayInUnitInterval) {
  std::mt19937_64 rng(13);
  for (int i = 0; i < 200; ++i) {
    const PageSnapshot page = random_page(rng, 2);
    const double s = water_similarity(page.elements[0], page.elements[1]);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
  }
}

TEST(Water, MotivatingExampleRanksCandidateSixAmongCandidates) {
  const PageSnapshot old_page = load_page(data_path("mantisbt/old.html"), data_path("mantisbt/old.layout"));
  const PageSnapshot new_page = load_page(data_path("mantisbt/new.html"), data_path("mantisbt/new.layout"));
  const auto* target = old_page.find_by_xpath("/html[1]/body[1]/div[4]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]");
  const auto ranking = water_rank(*target, new_page);
  EXPECT_TRUE(ranking.rank_of_xpath("/html[1]/body[1]/div[3]/form[1]/table[1]/tbody[1]/tr[2]/td[2]/input[1]"));
  for (const auto& e : ranking.entries) EXPECT_EQ(e.element.tagName, "input");
}

TEST(Ncc, DirectAndFftMatchOracle) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 20; ++trial) {
    const GrayImage t = random_image(rng, 5 + trial % 4, 6);
    const GrayImage img = random_image(rng, 20, 17 + trial);
    const GrayImage expected = oracle_ncc(t, img);
    for (NccMethod m : {NccMethod::kDirect, NccMethod::kFft, NccMethod::kAuto}) {
      const NccResult r = ncc_match(t, img, m);
      ASSERT_EQ(r.score_map.rows(), expected.rows());
      ASSERT_EQ(r.score_map.cols(), expected.cols());
      for (std::size_t i = 0; i < expected.pixels().size(); ++i) {
        EXPECT_NEAR(r.score_map.pixels()[i], expected.pixels()[i], 1e-9);
      }
    }
  }
}

TEST(Ncc, ScoresAreBoundedAndPeakIsFirstMaximum) {
  std::mt19937_64 rng(15);
  const GrayImage t = random_image(rng, 4, 4);
  GrayImage img(12, 12, 0.5);
  for (std::size_t r = 0; r < 4; ++r) {
    for (std::size_t c = 0; c < 4; ++c) {
      img.at(1 + r, 2 + c) = t.at(r, c);
      img.at(7 + r, 6 + c) = t.at(r, c);
    }
  }
  const NccResult r = ncc_match(t, img, NccMethod::kDirect);
  EXPECT_EQ(r.peak_row, 1u);
  EXPECT_EQ(r.peak_col, 2u);
  EXPECT_NEAR(r.peak_score, 1.0, 1e-9);
  for (double v : r.score_map.pixels()) {
    EXPECT_GE(v, -1.0);
    EXPECT_LE(v, 1.0);
  }
  // Flat windows score zero.
  EXPECT_EQ(r.score_map.at(0, 6), 0.0);
}

TEST(Ncc, InvariantToBrightnessAndContrast) {
  std::mt19937_64 rng(16);
  const GrayImage t = random_image(rng, 5, 5);
  const GrayImage img = random_image(rng, 15, 15);
  GrayImage scaled = img;
  for (std::size_t r = 0; r < img.rows(); ++r) {
    for (std::size_t c = 0; c < img.cols(); ++c) scaled.at(r, c) = 0.3 * img.at(r, c) + 0.2;
  }
  const auto a = ncc_match(t, img, NccMethod::kDirect);
  const auto b = ncc_match(t, scaled, NccMethod::kDirect);
  for (std::size_t i = 0; i < a.score_map.pixels().size(); ++i) {
    EXPECT_NEAR(a.score_map.pixels()[i], b.score_map.pixels()[i], 1e-9);
  }
}

TEST(Ncc, Errors) {
  EXPECT_EQ(code_of([] { ncc_match(GrayImage(3, 3, 0.4), GrayImage(9, 9, 0.1)); }), ErrorCode::kZeroVarianceTemplate);
  std::mt19937_64 rng(17);
  const GrayImage big = random_image(rng, 10, 4);
  EXPECT_EQ(code_of([&] { ncc_match(big, random_image(rng, 8, 8)); }), ErrorCode::kTemplateLargerThanImage);
}

namespace {

// Old and new screenshots share a textured patch; in the new version it moved
// by (+40, +25).
struct VistaScene {
  PageSnapshot oldPage;
  PageSnapshot newPage;
  WebElementRecord target;
};

VistaScene vista_scene() {
  std::mt19937_64 rng(18);
  VistaScene s;
  GrayImage old_img(120, 160, 0.2);
  GrayImage new_img(120, 160, 0.2);
  const GrayImage patch = random_image(rng, 20, 30);
  for (std::size_t r = 0; r < 20; ++r) {
    for (std::size_t c = 0; c < 30; ++c) {
      old_img.at(30 + r, 20 + c) = patch.at(r, c);
      new_img.at(55 + r, 60 + c) = patch.at(r, c);
    }
  }
  s.target = element(0, "/html[1]/body[1]/button[1]", "Save", "button");
  s.target.x = 20;
  s.target.y = 30;
  s.target.width = 30;
  s.target.height = 20;
  s.oldPage.elements = {s.target};
  s.oldPage.screenshot = old_img;

  auto body = element(0, "/html[1]/body[1]", "", "body");
  body.width = 160;
  body.height = 120;
  auto form = element(1, "/html[1]/body[1]/form[1]", "", "form");
  form.x = 50;
  form.y = 50;
  form.width = 60;
  form.height = 40;
  auto button = element(2, "/html[1]/body[1]/form[1]/button[1]", "Save", "button");
  button.x = 60;
  button.y = 55;
  button.width = 30;
  button.height = 20;
  auto far = element(3, "/html[1]/body[1]/a[1]", "Help", "a");
  far.x = 140;
  far.y = 5;
  far.width = 15;
  far.height = 10;
  s.newPage.elements = {body, form, button, far};
  s.newPage.screenshot = new_img;
  return s;
}

}  // namespace

TEST(Vista, InnermostElementContainingThePeakRanksFirst) {
  const VistaScene s = vista_scene();
  const auto ranking = vista_rank(s.target, s.oldPage, s.newPage);
  ASSERT_EQ(ranking.entries.size(), 4u);
  EXPECT_EQ(ranking.entries[0].element.numericId, 2);
  EXPECT_NEAR(ranking.entries[0].score, 1.0, 1e-6);
  EXPECT_EQ(ranking.entries[1].element.numericId, 1);
  EXPECT_EQ(ranking.entries[2].element.numericId, 0);
  EXPECT_EQ(ranking.entries[3].element.numericId, 3);
  EXPECT_LT(ranking.entries[3].score, -1.0);
}

TEST(Vista, Errors) {
  VistaScene s = vista_scene();
  PageSnapshot no_shot = s.newPage;
  no_shot.screenshot.reset();
  EXPECT_EQ(code_of([&] { vista_rank(s.target, s.oldPage, no_shot); }), ErrorCode::kMissingScreenshot);
  auto flat = s.target;
  flat.width = 0;
  EXPECT_EQ(code_of([&] { vista_rank(flat, s.oldPage, s.newPage); }), ErrorCode::kDegenerateTargetRect);
  auto outside = s.target;
  outside.x = 500;
  EXPECT_EQ(code_of([&] { vista_rank(outside, s.oldPage, s.newPage); }), ErrorCode::kDegenerateTargetRect);
}

TEST(HitRatio, CountsRankWithinK) {
  std::vector<CandidateRanking> rankings(2);
  rankings[0].targetXpath = "/a";
  rankings[0].entries = {{element(0, "/x"), 0}, {element(1, "/gt-a"), 0}};
  rankings[1].targetXpath = "/b";
  rankings[1].entries = {{element(0, "/gt-b"), 0}};
  const std::map<std::string, std::string> truth = {{"/a", "/gt-a"}, {"/b", "/gt-b"}};
  EXPECT_DOUBLE_EQ(hit_ratio_at_k(rankings, truth, 1), 0.5);
  EXPECT_DOUBLE_EQ(hit_ratio_at_k(rankings, truth, 2), 1.0);
  EXPECT_EQ(code_of([&] { hit_ratio_at_k(rankings, {{"/a", "/gt-a"}}, 1); }), ErrorCode::kMissingGroundTruth);
  EXPECT_EQ(code_of([&] { hit_ratio_at_k({}, truth, 1); }), ErrorCode::kDegenerateInput);
}

TEST(Matchers, ParseAndDispatch) {
  EXPECT_EQ(parse_matcher("Edit-Distance"), MatcherAlgorithm::kEditDistance);
  EXPECT_EQ(parse_matcher("WATER"), MatcherAlgorithm::kWater);
  EXPECT_EQ(parse_matcher("vista"), MatcherAlgorithm::kVista);
  EXPECT_EQ(code_of([] { parse_matcher("sift"); }), ErrorCode::kInvalidArgument);

  const PageSnapshot old_page = load_page(data_path("collabtive/old.html"));
  const PageSnapshot new_page = load_page(data_path("collabtive/new.html"));
  const auto& target = *old_page.find_by_xpath("/html[1]/body[1]/div[1]/div[2]/div[1]/ul[1]/li[3]/a[1]");
  const auto direct = rank_by_xpath_edit_distance(target, new_page, 3);
  const auto via = rank_candidates(MatcherAlgorithm::kEditDistance, target, old_page, new_page, 3);
  EXPECT_EQ(format_ranking_report(via), format_ranking_report(direct));
  std::istringstream lines(format_ranking_report(via));
  std::string line;
  std::size_t n = 0;
  while (std::getline(lines, line)) ++n;
  EXPECT_EQ(n, 3u);
}
