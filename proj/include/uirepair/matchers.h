#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/dom_snapshot.h"

namespace uirepair {

enum class MatcherAlgorithm { kEditDistance, kWater, kVista };

std::string_view to_string(MatcherAlgorithm algorithm);
// Accepts "edit-distance", "water", "vista" (case-insensitive).
MatcherAlgorithm parse_matcher(std::string_view name);

struct RankedCandidate {
  WebElementRecord element;
  double score = 0.0;
};

// Top-K candidates of the new page for one old-page target. Entries are
// best-first: ascending distance for edit distance, descending similarity
// for WATER and VISTA.
struct CandidateRanking {
  std::string targetXpath;
  MatcherAlgorithm algorithm = MatcherAlgorithm::kEditDistance;
  std::vector<RankedCandidate> entries;
  std::size_t k = 10;

  const RankedCandidate* find(std::int64_t numeric_id) const;
  // 1-based rank of the element with this xpath, if present.
  std::optional<std::size_t> rank_of_xpath(std::string_view xpath) const;
};

inline constexpr std::size_t kDefaultCandidateCount = 10;

std::size_t levenshtein(std::string_view a, std::string_view b);

// 1 - lev(a, b) / max(|a|, |b|); two empty strings are identical (1).
double normalized_similarity(std::string_view a, std::string_view b);

CandidateRanking rank_by_xpath_edit_distance(const WebElementRecord& target, const PageSnapshot& page,
                                             std::size_t k = kDefaultCandidateCount);

inline constexpr double kWaterXpathWeight = 0.9;

// Stage-1 score for an exact attribute match at priority index p (0 = id,
// 1 = xpath, 2 = class, 3 = linkText, 4 = name). Always above any stage-2
// score, which lies in [0, 1].
double water_exact_match_score(std::size_t priority);

// 0.9 * sim(xpath) + 0.1 * mean(text-hash equality, position proximity,
// sim(text)).
double water_similarity(const WebElementRecord& target, const WebElementRecord& candidate);

CandidateRanking water_rank(const WebElementRecord& target, const PageSnapshot& page,
                            std::size_t k = kDefaultCandidateCount);

struct NccResult {
  std::size_t peak_row = 0;
  std::size_t peak_col = 0;
  double peak_score = 0.0;
  GrayImage score_map;  // (image.rows - template.rows + 1) x (image.cols - template.cols + 1)
};

enum class NccMethod { kAuto, kDirect, kFft };

// Zero-normalized cross-correlation of the template against every window
// of the image. Windows with zero variance score 0.
NccResult ncc_match(const GrayImage& templ, const GrayImage& image, NccMethod method = NccMethod::kAuto);

CandidateRanking vista_rank(const WebElementRecord& target, const PageSnapshot& old_snapshot,
                            const PageSnapshot& new_snapshot, std::size_t k = kDefaultCandidateCount);

// Fraction of rankings whose first min(k, |entries|) entries contain the
// ground-truth xpath. ground_truth maps target xpath to ground-truth xpath.
double hit_ratio_at_k(std::span<const CandidateRanking> rankings,
                      const std::map<std::string, std::string>& ground_truth, std::size_t k);

// One line per entry: algorithm, target xpath, rank, numericId, score
// (tab-separated).
std::string format_ranking_report(const CandidateRanking& ranking);

CandidateRanking rank_candidates(MatcherAlgorithm algorithm, const WebElementRecord& target,
                                 const PageSnapshot& old_snapshot, const PageSnapshot& new_snapshot,
                                 std::size_t k = kDefaultCandidateCount);

}  // namespace uirepair
