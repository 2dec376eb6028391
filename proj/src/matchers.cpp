#include "uirepair/matchers.h"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <functional>
#include <numeric>

#include "uirepair/error.h"

namespace uirepair {
namespace {

void require_k(std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be at least 1");
}

void require_elements(const PageSnapshot& page) {
  if (page.elements.empty()) throw Error(ErrorCode::kEmptyPage, "page '" + page.label + "' has no elements");
}

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), res.ptr);
}

// Exact-match attributes checked by WATER's first stage, in priority order.
const std::array<std::string WebElementRecord::*, 5> kWaterExactAttributes = {
    &WebElementRecord::id, &WebElementRecord::xpath, &WebElementRecord::className,
    &WebElementRecord::linkText, &WebElementRecord::name};

std::optional<std::size_t> water_exact_priority(const WebElementRecord& target, const WebElementRecord& e) {
  for (std::size_t p = 0; p < kWaterExactAttributes.size(); ++p) {
    const std::string& want = target.*kWaterExactAttributes[p];
    if (!want.empty() && want == e.*kWaterExactAttributes[p]) return p;
  }
  return std::nullopt;
}

}  // namespace

std::string_view to_string(MatcherAlgorithm algorithm) {
  switch (algorithm) {
    case MatcherAlgorithm::kEditDistance: return "edit-distance";
    case MatcherAlgorithm::kWater: return "water";
    case MatcherAlgorithm::kVista: return "vista";
  }
  return "unknown";
}

MatcherAlgorithm parse_matcher(std::string_view name) {
  std::string lower(name);
  std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
  if (lower == "edit-distance" || lower == "edit_distance" || lower == "editdistance" || lower == "xpath") {
    return MatcherAlgorithm::kEditDistance;
  }
  if (lower == "water") return MatcherAlgorithm::kWater;
  if (lower == "vista") return MatcherAlgorithm::kVista;
  throw Error(ErrorCode::kInvalidArgument, "unknown matcher '" + std::string(name) + "'");
}

const RankedCandidate* CandidateRanking::find(std::int64_t numeric_id) const {
  for (const auto& entry : entries) {
    if (entry.element.numericId == numeric_id) return &entry;
  }
  return nullptr;
}

std::optional<std::size_t> CandidateRanking::rank_of_xpath(std::string_view xpath) const {
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].element.xpath == xpath) return i + 1;
  }
  return std::nullopt;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  // Common affixes never contribute to the distance.
  while (!a.empty() && !b.empty() && a.front() == b.front()) {
    a.remove_prefix(1);
    b.remove_prefix(1);
  }
  while (!a.empty() && !b.empty() && a.back() == b.back()) {
    a.remove_suffix(1);
    b.remove_suffix(1);
  }
  if (a.size() < b.size()) std::swap(a, b);
  if (b.empty()) return a.size();

  std::vector<std::size_t> row(b.size() + 1);
  std::iota(row.begin(), row.end(), std::size_t{0});
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diagonal = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t above = row[j];
      const std::size_t substitution = diagonal + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({above + 1, row[j - 1] + 1, substitution});
      diagonal = above;
    }
  }
  return row[b.size()];
}

double normalized_similarity(std::string_view a, std::string_view b) {
  const std::size_t longest = std::max(a.size(), b.size());
  if (longest == 0) return 1.0;
  return 1.0 - static_cast<double>(levenshtein(a, b)) / static_cast<double>(longest);
}

CandidateRanking rank_by_xpath_edit_distance(const WebElementRecord& target, const PageSnapshot& page,
                                             std::size_t k) {
  require_k(k);
  require_elements(page);
  struct Scored {
    std::size_t distance;
    const WebElementRecord* element;
  };
  std::vector<Scored> scored;
  scored.reserve(page.elements.size());
  for (const auto& e : page.elements) scored.push_back({levenshtein(target.xpath, e.xpath), &e});
  const std::size_t keep = std::min(k, scored.size());
  std::partial_sort(scored.begin(), scored.begin() + static_cast<std::ptrdiff_t>(keep), scored.end(),
                    [](const Scored& l, const Scored& r) {
                      if (l.distance != r.distance) return l.distance < r.distance;
                      return l.element->numericId < r.element->numericId;
                    });
  CandidateRanking ranking{target.xpath, MatcherAlgorithm::kEditDistance, {}, k};
  for (std::size_t i = 0; i < keep; ++i) {
    ranking.entries.push_back({*scored[i].element, static_cast<double>(scored[i].distance)});
  }
  return ranking;
}

double water_exact_match_score(std::size_t priority) {
  return 1.0 + static_cast<double>(kWaterExactAttributes.size() - priority) / kWaterExactAttributes.size();
}

double water_similarity(const WebElementRecord& target, const WebElementRecord& candidate) {
  const std::hash<std::string> hasher;
  const double hash_equal = hasher(target.text) == hasher(candidate.text) ? 1.0 : 0.0;
  const double dx = static_cast<double>(target.x - candidate.x);
  const double dy = static_cast<double>(target.y - candidate.y);
  const double proximity = 1.0 / (1.0 + std::sqrt(dx * dx + dy * dy));
  const double text_sim = normalized_similarity(target.text, candidate.text);
  const double secondary = (hash_equal + proximity + text_sim) / 3.0;
  return kWaterXpathWeight * normalized_similarity(target.xpath, candidate.xpath) +
         (1.0 - kWaterXpathWeight) * secondary;
}

CandidateRanking water_rank(const WebElementRecord& target, const PageSnapshot& page, std::size_t k) {
  require_k(k);
  require_elements(page);
  struct Scored {
    bool exact;
    std::size_t priority;
    double score;
    const WebElementRecord* element;
  };
  std::vector<Scored> scored;
  for (const auto& e : page.elements) {
    if (auto p = water_exact_priority(target, e)) {
      scored.push_back({true, *p, water_exact_match_score(*p), &e});
    } else if (e.tagName == target.tagName) {
      scored.push_back({false, 0, water_similarity(target, e), &e});
    }
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& l, const Scored& r) {
    if (l.exact != r.exact) return l.exact;
    if (l.exact && l.priority != r.priority) return l.priority < r.priority;
    if (!l.exact && l.score != r.score) return l.score > r.score;
    return l.element->numericId < r.element->numericId;
  });
  CandidateRanking ranking{target.xpath, MatcherAlgorithm::kWater, {}, k};
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
    ranking.entries.push_back({*scored[i].element, scored[i].score});
  }
  return ranking;
}

CandidateRanking vista_rank(const WebElementRecord& target, const PageSnapshot& old_snapshot,
                            const PageSnapshot& new_snapshot, std::size_t k) {
  require_k(k);
  require_elements(new_snapshot);
  if (!old_snapshot.screenshot || !new_snapshot.screenshot) {
    throw Error(ErrorCode::kMissingScreenshot, "VISTA needs screenshots of both page versions");
  }
  if (target.width <= 0 || target.height <= 0) {
    throw Error(ErrorCode::kDegenerateTargetRect, "target '" + target.xpath + "' has no positive size");
  }
  const GrayImage& old_image = *old_snapshot.screenshot;
  const auto clamp = [](std::int64_t v, std::size_t hi) {
    return static_cast<std::size_t>(std::clamp<std::int64_t>(v, 0, static_cast<std::int64_t>(hi)));
  };
  const std::size_t col0 = clamp(target.x, old_image.cols());
  const std::size_t row0 = clamp(target.y, old_image.rows());
  const std::size_t col1 = clamp(target.x + target.width, old_image.cols());
  const std::size_t row1 = clamp(target.y + target.height, old_image.rows());
  if (col1 <= col0 || row1 <= row0) {
    throw Error(ErrorCode::kDegenerateTargetRect, "target rectangle lies outside the old screenshot");
  }
  const GrayImage templ = old_image.crop(row0, col0, row1 - row0, col1 - col0);
  const NccResult match = ncc_match(templ, *new_snapshot.screenshot);

  const double peak_x = static_cast<double>(match.peak_col) + static_cast<double>(templ.cols()) / 2.0;
  const double peak_y = static_cast<double>(match.peak_row) + static_cast<double>(templ.rows()) / 2.0;

  struct Scored {
    bool contains;
    double distance;
    std::int64_t area;
    const WebElementRecord* element;
  };
  std::vector<Scored> scored;
  scored.reserve(new_snapshot.elements.size());
  for (const auto& e : new_snapshot.elements) {
    const bool contains = e.width > 0 && e.height > 0 && peak_x >= static_cast<double>(e.x) &&
                          peak_x < static_cast<double>(e.x + e.width) && peak_y >= static_cast<double>(e.y) &&
                          peak_y < static_cast<double>(e.y + e.height);
    const double cx = static_cast<double>(e.x) + static_cast<double>(e.width) / 2.0;
    const double cy = static_cast<double>(e.y) + static_cast<double>(e.height) / 2.0;
    scored.push_back({contains, std::hypot(cx - peak_x, cy - peak_y), e.width * e.height, &e});
  }
  std::sort(scored.begin(), scored.end(), [](const Scored& l, const Scored& r) {
    if (l.contains != r.contains) return l.contains;
    if (l.distance != r.distance) return l.distance < r.distance;
    if (l.area != r.area) return l.area < r.area;  // innermost first
    return l.element->numericId < r.element->numericId;
  });
  CandidateRanking ranking{target.xpath, MatcherAlgorithm::kVista, {}, k};
  for (std::size_t i = 0; i < scored.size() && i < k; ++i) {
    // Non-containing scores sit below -1 so they never overtake a
    // containing element, whatever the sign of the peak score.
    const double score = scored[i].contains ? match.peak_score : -(1.0 + scored[i].distance);
    ranking.entries.push_back({*scored[i].element, score});
  }
  return ranking;
}

double hit_ratio_at_k(std::span<const CandidateRanking> rankings,
                      const std::map<std::string, std::string>& ground_truth, std::size_t k) {
  require_k(k);
  if (rankings.empty()) throw Error(ErrorCode::kDegenerateInput, "no rankings to evaluate");
  std::size_t hits = 0;
  for (const auto& ranking : rankings) {
    auto gt = ground_truth.find(ranking.targetXpath);
    if (gt == ground_truth.end()) {
      throw Error(ErrorCode::kMissingGroundTruth, "no ground truth for target '" + ranking.targetXpath + "'");
    }
    const auto rank = ranking.rank_of_xpath(gt->second);
    if (rank && *rank <= k) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(rankings.size());
}

std::string format_ranking_report(const CandidateRanking& ranking) {
  std::string out;
  for (std::size_t i = 0; i < ranking.entries.size(); ++i) {
    const auto& entry = ranking.entries[i];
    out += std::string(to_string(ranking.algorithm)) + '\t' + ranking.targetXpath + '\t' + std::to_string(i + 1) +
           '\t' + std::to_string(entry.element.numericId) + '\t' + format_double(entry.score) + '\n';
  }
  return out;
}

CandidateRanking rank_candidates(MatcherAlgorithm algorithm, const WebElementRecord& target,
                                 const PageSnapshot& old_snapshot, const PageSnapshot& new_snapshot,
                                 std::size_t k) {
  switch (algorithm) {
    case MatcherAlgorithm::kEditDistance: return rank_by_xpath_edit_distance(target, new_snapshot, k);
    case MatcherAlgorithm::kWater: return water_rank(target, new_snapshot, k);
    case MatcherAlgorithm::kVista: return vista_rank(target, old_snapshot, new_snapshot, k);
  }
  throw Error(ErrorCode::kInvalidArgument, "unknown matcher");
}

}  // namespace uirepair
