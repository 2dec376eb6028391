#include "uirepair/pipeline.h"

#include <atomic>
#include <chrono>
#include <map>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "uirepair/error.h"
#include "uirepair/explanation_validator.h"
#include "uirepair/statement_tools.h"

namespace uirepair {
namespace {

using Json = nlohmann::json;

StageError stage_error(std::string stage, const Error& e) {
  return {std::move(stage), std::string(to_string(e.code())), e.what()};
}

StageError stage_error(std::string stage, const std::exception& e) {
  return {std::move(stage), "InternalError", e.what()};
}

class BreakageRunner {
 public:
  BreakageRunner(const BreakageCase& c, const PipelineConfig& config, ChatBackend& backend, BreakageOutcome& out)
      : case_(c), config_(config), backend_(backend), out_(out) {}

  void run() {
    const WebElementRecord* target = resolve_target();
    if (target == nullptr) return;
    target_ = target;
    if (!rank()) return;
    if (case_.groundTruthXpath && case_.newSnapshot) gt_element_ = case_.newSnapshot->find_by_xpath(*case_.groundTruthXpath);

    out_.initial = match_phase(build_matching_prompt(*target_, *out_.ranking), "match");
    request_repairs(*out_.initial, "repair");

    const MatchPhase& first = *out_.initial;
    if (!config_.selfCorrect || !first.decision || !first.consistency) return;
    const std::optional<bool> known = config_.evaluationMode ? first.matchCorrect : std::nullopt;
    if (!should_self_correct(*first.consistency, known)) return;
    out_.selfCorrected = true;
    ChatPrompt prompt = build_self_correction_prompt(first.prompt, first.decision->rawText,
                                                     first.consistency->inconsistentAttributes);
    out_.corrected = match_phase(std::move(prompt), "self-correct");
    request_repairs(*out_.corrected, "repair-after-correction");
  }

 private:
  void record(StageError e) { out_.errors.push_back(std::move(e)); }

  const WebElementRecord* resolve_target() {
    if (!case_.oldSnapshot || !case_.newSnapshot) {
      record({"extract", std::string(to_string(ErrorCode::kInvalidArgument)), "page snapshot not loaded"});
      return nullptr;
    }
    try {
      parse_statement(case_.brokenStatement);
    } catch (const Error& e) {
      record(stage_error("extract", e));
    }
    const WebElementRecord* t = case_.oldSnapshot->find_by_xpath(case_.targetXpath);
    if (t == nullptr) {
      record({"extract", std::string(to_string(ErrorCode::kTargetNotFound)),
              "target xpath not found in old page: " + case_.targetXpath});
    }
    return t;
  }

  bool rank() {
    try {
      CandidateRanking r =
          rank_candidates(case_.matcher, *target_, *case_.oldSnapshot, *case_.newSnapshot, config_.candidateK);
      if (r.entries.empty()) throw Error(ErrorCode::kEmptyCandidates, "matcher returned no candidates");
      for (const auto& c : r.entries) order_.push_back(c.element.numericId);
      out_.ranking = std::move(r);
      return true;
    } catch (const Error& e) {
      record(stage_error("rank", e));
    } catch (const std::exception& e) {
      record(stage_error("rank", e));
    }
    return false;
  }

  std::optional<bool> correctness(const MatchDecision& d) const {
    if (!case_.groundTruthXpath) return std::nullopt;
    const RankedCandidate* c = out_.ranking->find(d.selectedNumericId);
    return c != nullptr && c->element.xpath == *case_.groundTruthXpath;
  }

  MatchPhase match_phase(ChatPrompt prompt, const std::string& stage) {
    MatchPhase phase;
    phase.prompt = std::move(prompt);
    std::vector<MatchDecision> decisions;
    for (std::size_t i = 0; i < config_.llm.runsPerBreakage; ++i) {
      MatchRun run;
      try {
        run.response = chat_send(backend_, phase.prompt, config_.llm);
        run.decision = parse_match_response(run.response);
        decisions.push_back(*run.decision);
        run.matchCorrect = correctness(*run.decision);
        run.consistency = explanation_consistency(*run.decision, *target_, *out_.ranking);
      } catch (const Error& e) {
        run.error = stage_error(stage, e);
        record(*run.error);
      }
      phase.runs.push_back(std::move(run));
    }
    if (decisions.empty()) {
      record({stage, std::string(to_string(ErrorCode::kMalformedResponse)), "no run produced a usable selection"});
      return phase;
    }
    AggregatedDecision agg = aggregate_runs(decisions, order_);
    std::vector<std::int64_t> ids;
    for (const auto& d : decisions) ids.push_back(d.selectedNumericId);
    phase.stability = stability(ids);
    phase.agreement = agg.agreement;
    phase.decision = std::move(agg.decision);
    phase.matchCorrect = correctness(*phase.decision);
    try {
      phase.consistency = explanation_consistency(*phase.decision, *target_, *out_.ranking);
    } catch (const Error& e) {
      record(stage_error(stage, e));
    }
    return phase;
  }

  RepairAttempt repair(const MatchDecision& decision, const std::string& stage) {
    RepairAttempt attempt;
    try {
      const RankedCandidate* selected = out_.ranking->find(decision.selectedNumericId);
      if (selected == nullptr) {
        throw Error(ErrorCode::kSelectionNotInCandidates,
                    "numericId " + std::to_string(decision.selectedNumericId) + " is not a candidate");
      }
      attempt.prompt = build_repair_prompt(selected->element, case_.brokenStatement);
      attempt.response = chat_send(backend_, attempt.prompt, config_.llm);
      attempt.statements = parse_repair_response(attempt.response);
      const WebElementRecord& reference = gt_element_ != nullptr ? *gt_element_ : selected->element;
      attempt.assessment = assess_repair(case_.brokenStatement, attempt.statements, reference);
    } catch (const Error& e) {
      attempt.error = stage_error(stage, e);
      record(*attempt.error);
    }
    return attempt;
  }

  void request_repairs(MatchPhase& phase, const std::string& stage) {
    if (phase.decision) phase.repair = repair(*phase.decision, stage);
    if (!config_.perRunRepair) return;
    for (auto& run : phase.runs) {
      if (run.decision) run.repair = repair(*run.decision, stage);
    }
  }

  const BreakageCase& case_;
  const PipelineConfig& config_;
  ChatBackend& backend_;
  BreakageOutcome& out_;
  const WebElementRecord* target_ = nullptr;
  const WebElementRecord* gt_element_ = nullptr;
  std::vector<std::int64_t> order_;
};

std::string required_string(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) {
    throw Error(ErrorCode::kMalformedManifest,
                "manifest line " + std::to_string(line) + ": missing string field '" + key + "'");
  }
  return it->get<std::string>();
}

std::string optional_string(const Json& j, const char* key, std::size_t line) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) {
    throw Error(ErrorCode::kMalformedManifest,
                "manifest line " + std::to_string(line) + ": field '" + key + "' must be a string");
  }
  return it->get<std::string>();
}

class SnapshotCache {
 public:
  explicit SnapshotCache(std::filesystem::path base) : base_(std::move(base)) {}

  std::shared_ptr<const PageSnapshot> get(const std::string& page, const std::string& layout,
                                          const std::string& screenshot) {
    auto key = std::make_tuple(resolve(page), resolve(layout), resolve(screenshot));
    auto it = cache_.find(key);
    if (it != cache_.end()) return it->second;
    auto snapshot = std::make_shared<const PageSnapshot>(
        load_page(std::get<0>(key), std::get<1>(key), std::get<2>(key)));
    cache_.emplace(std::move(key), snapshot);
    return snapshot;
  }

 private:
  std::filesystem::path resolve(const std::string& p) const {
    if (p.empty()) return {};
    std::filesystem::path path(p);
    return path.is_absolute() ? path : base_ / path;
  }

  std::filesystem::path base_;
  std::map<std::tuple<std::filesystem::path, std::filesystem::path, std::filesystem::path>,
           std::shared_ptr<const PageSnapshot>>
      cache_;
};

}  // namespace

void PipelineConfig::validate() const {
  llm.validate();
  if (candidateK == 0) throw Error(ErrorCode::kInvalidArgument, "candidate count must be at least 1");
}

std::vector<BreakageCase> parse_manifest(std::string_view text, const std::filesystem::path& base_dir,
                                         MatcherAlgorithm default_matcher) {
  SnapshotCache cache(base_dir);
  std::vector<BreakageCase> cases;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string_view::npos || line[first] == '#') continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::kMalformedManifest, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (!j.is_object()) {
      throw Error(ErrorCode::kMalformedManifest, "manifest line " + std::to_string(line_no) + ": not an object");
    }
    BreakageCase c;
    c.breakageId = required_string(j, "id", line_no);
    c.application = optional_string(j, "app", line_no);
    c.targetXpath = required_string(j, "target_xpath", line_no);
    c.brokenStatement = required_string(j, "statement", line_no);
    const std::string matcher = optional_string(j, "matcher", line_no);
    try {
      c.matcher = matcher.empty() ? default_matcher : parse_matcher(matcher);
    } catch (const Error& e) {
      throw Error(ErrorCode::kMalformedManifest, "manifest line " + std::to_string(line_no) + ": " + e.what());
    }
    if (std::string gt = optional_string(j, "gt_xpath", line_no); !gt.empty()) c.groundTruthXpath = std::move(gt);
    c.oldSnapshot = cache.get(required_string(j, "old", line_no), optional_string(j, "old_layout", line_no),
                              optional_string(j, "old_screenshot", line_no));
    c.newSnapshot = cache.get(required_string(j, "new", line_no), optional_string(j, "new_layout", line_no),
                              optional_string(j, "new_screenshot", line_no));
    cases.push_back(std::move(c));
    if (end == text.size()) break;
  }
  return cases;
}

std::vector<BreakageCase> load_manifest(const std::filesystem::path& path, MatcherAlgorithm default_matcher) {
  return parse_manifest(read_text_file(path), path.parent_path(), default_matcher);
}

BreakageOutcome run_breakage(const BreakageCase& breakage, const PipelineConfig& config, ChatBackend& backend) {
  const auto started = std::chrono::steady_clock::now();
  BreakageOutcome out;
  out.breakageId = breakage.breakageId;
  out.application = breakage.application;
  out.matcher = breakage.matcher;
  out.targetXpath = breakage.targetXpath;
  out.groundTruthXpath = breakage.groundTruthXpath;
  out.brokenStatement = breakage.brokenStatement;
  try {
    BreakageRunner(breakage, config, backend, out).run();
  } catch (const Error& e) {
    out.errors.push_back(stage_error("pipeline", e));
  } catch (const std::exception& e) {
    out.errors.push_back(stage_error("pipeline", e));
  }
  out.elapsedSeconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

BatchResult run_batch(std::span<const BreakageCase> cases, const PipelineConfig& config, ChatBackend& backend,
                      std::size_t parallelism, CreditMode mode) {
  if (parallelism == 0) throw Error(ErrorCode::kInvalidArgument, "parallelism must be at least 1");
  BatchResult result;
  result.outcomes.resize(cases.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < cases.size(); i = next++) {
      std::shared_ptr<ChatBackend> session = backend.session();
      result.outcomes[i] = run_breakage(cases[i], config, *session);
    }
  };
  const std::size_t threads = std::min(parallelism, std::max<std::size_t>(cases.size(), 1));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  result.report = build_report(result.outcomes, {}, kDefaultHitRatioGrid, mode);
  return result;
}

}  // namespace uirepair
