#include "uirepair/outcome.h"

#include <json.hpp>

#include "uirepair/error.h"

namespace uirepair {
namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void malformed(const std::string& what) { throw Error(ErrorCode::kMalformedOutcomeLog, what); }

template <typename T, typename F>
Json optional_json(const std::optional<T>& value, F&& convert) {
  return value ? convert(*value) : Json(nullptr);
}

Json fraction_json(const Fraction& f) { return f.to_string(); }

Fraction parse_fraction(const Json& j) {
  const std::string s = j.get<std::string>();
  const std::size_t slash = s.find('/');
  try {
    if (slash == std::string::npos) return Fraction(std::stoll(s));
    const std::int64_t den = std::stoll(s.substr(slash + 1));
    if (den == 0) malformed("zero denominator in '" + s + "'");
    return Fraction(std::stoll(s.substr(0, slash)), den);
  } catch (const std::logic_error&) {
    malformed("bad fraction '" + s + "'");
  }
}

Json prompt_json(const ChatPrompt& prompt) {
  Json out = Json::array();
  for (const auto& m : prompt) out.push_back({{"role", std::string(to_string(m.role))}, {"content", m.content}});
  return out;
}

ChatPrompt parse_prompt(const Json& j) {
  ChatPrompt out;
  for (const auto& m : j) out.push_back({parse_chat_role(m.at("role").get<std::string>()), m.at("content").get<std::string>()});
  return out;
}

Json error_json(const StageError& e) { return {{"stage", e.stage}, {"code", e.code}, {"message", e.message}}; }

StageError parse_error(const Json& j) {
  return {j.at("stage").get<std::string>(), j.at("code").get<std::string>(), j.at("message").get<std::string>()};
}

Json decision_json(const MatchDecision& d) {
  return {{"selectedNumericId", d.selectedNumericId},
          {"mentionedAttributes", d.mentionedAttributes},
          {"unrecognizedAttributes", d.unrecognizedAttributes}};
}

MatchDecision parse_decision(const Json& j, const std::string& raw) {
  MatchDecision d;
  d.selectedNumericId = j.at("selectedNumericId").get<std::int64_t>();
  d.mentionedAttributes = j.at("mentionedAttributes").get<std::vector<std::string>>();
  d.unrecognizedAttributes = j.at("unrecognizedAttributes").get<std::vector<std::string>>();
  d.rawText = raw;
  return d;
}

Json consistency_json(const ConsistencyReport& r) {
  Json per = Json::array();
  for (const auto& a : r.perAttribute) {
    per.push_back({{"attribute", a.attribute}, {"consistent", a.consistent}, {"mostSimilarIds", a.mostSimilarIds}});
  }
  return {{"selectedNumericId", r.selectedNumericId},
          {"ec", optional_json(r.ec, fraction_json)},
          {"perAttribute", per},
          {"inconsistentAttributes", r.inconsistentAttributes},
          {"unrecognizedAttributes", r.unrecognizedAttributes},
          {"mentionedCount", r.mentionedCount}};
}

ConsistencyReport parse_consistency(const Json& j) {
  ConsistencyReport r;
  r.selectedNumericId = j.at("selectedNumericId").get<std::int64_t>();
  if (!j.at("ec").is_null()) r.ec = parse_fraction(j.at("ec"));
  for (const auto& a : j.at("perAttribute")) {
    r.perAttribute.push_back({a.at("attribute").get<std::string>(), a.at("consistent").get<bool>(),
                              a.at("mostSimilarIds").get<std::set<std::int64_t>>()});
  }
  r.inconsistentAttributes = j.at("inconsistentAttributes").get<std::vector<std::string>>();
  r.unrecognizedAttributes = j.at("unrecognizedAttributes").get<std::vector<std::string>>();
  r.mentionedCount = j.at("mentionedCount").get<std::size_t>();
  return r;
}

FixPattern parse_pattern(const std::string& s) {
  for (auto p : {FixPattern::kModifyLocatorValue, FixPattern::kModifyAssertionValue,
                 FixPattern::kDifferentAssertionAndValue, FixPattern::kDifferentLocatorAndValue,
                 FixPattern::kMultiStatement, FixPattern::kUnclassified}) {
    if (to_string(p) == s) return p;
  }
  malformed("unknown fix pattern '" + s + "'");
}

RepairVerdict parse_verdict(const std::string& s) {
  for (auto v : {RepairVerdict::kCorrect, RepairVerdict::kIncorrect, RepairVerdict::kNeedsManualReview}) {
    if (to_string(v) == s) return v;
  }
  malformed("unknown verdict '" + s + "'");
}

Json assessment_json(const RepairAssessment& a) {
  return {{"verdict", std::string(to_string(a.verdict))},
          {"fixPattern", std::string(to_string(a.fixPattern))},
          {"locatorStrategyChanged", a.locatorStrategyChanged},
          {"locatorValueCorrect", a.locatorValueCorrect},
          {"nonLocatorPreserved", a.nonLocatorPreserved},
          {"addedStatements", a.addedStatements},
          {"noOp", a.noOp},
          {"note", a.note}};
}

RepairAssessment parse_assessment(const Json& j) {
  RepairAssessment a;
  a.verdict = parse_verdict(j.at("verdict").get<std::string>());
  a.fixPattern = parse_pattern(j.at("fixPattern").get<std::string>());
  a.locatorStrategyChanged = j.at("locatorStrategyChanged").get<bool>();
  a.locatorValueCorrect = j.at("locatorValueCorrect").get<bool>();
  a.nonLocatorPreserved = j.at("nonLocatorPreserved").get<bool>();
  a.addedStatements = j.at("addedStatements").get<std::size_t>();
  a.noOp = j.at("noOp").get<bool>();
  a.note = j.at("note").get<std::string>();
  return a;
}

Json repair_json(const RepairAttempt& r) {
  return {{"prompt", prompt_json(r.prompt)},
          {"response", r.response},
          {"statements", r.statements},
          {"assessment", optional_json(r.assessment, assessment_json)},
          {"error", optional_json(r.error, error_json)}};
}

RepairAttempt parse_repair(const Json& j) {
  RepairAttempt r;
  r.prompt = parse_prompt(j.at("prompt"));
  r.response = j.at("response").get<std::string>();
  r.statements = j.at("statements").get<std::vector<std::string>>();
  if (!j.at("assessment").is_null()) r.assessment = parse_assessment(j.at("assessment"));
  if (!j.at("error").is_null()) r.error = parse_error(j.at("error"));
  return r;
}

Json optional_bool(const std::optional<bool>& b) { return b ? Json(*b) : Json(nullptr); }

std::optional<bool> parse_optional_bool(const Json& j) {
  if (j.is_null()) return std::nullopt;
  return j.get<bool>();
}

Json phase_json(const MatchPhase& p) {
  Json runs = Json::array();
  for (const auto& r : p.runs) {
    runs.push_back({{"response", r.response},
                    {"decision", optional_json(r.decision, decision_json)},
                    {"consistency", optional_json(r.consistency, consistency_json)},
                    {"matchCorrect", optional_bool(r.matchCorrect)},
                    {"repair", optional_json(r.repair, repair_json)},
                    {"error", optional_json(r.error, error_json)}});
  }
  return {{"prompt", prompt_json(p.prompt)},
          {"runs", runs},
          {"decision", optional_json(p.decision, decision_json)},
          {"agreement", optional_json(p.agreement, fraction_json)},
          {"stability", optional_json(p.stability, fraction_json)},
          {"consistency", optional_json(p.consistency, consistency_json)},
          {"matchCorrect", optional_bool(p.matchCorrect)},
          {"repair", optional_json(p.repair, repair_json)}};
}

MatchPhase parse_phase(const Json& j) {
  MatchPhase p;
  p.prompt = parse_prompt(j.at("prompt"));
  for (const auto& r : j.at("runs")) {
    MatchRun run;
    run.response = r.at("response").get<std::string>();
    if (!r.at("decision").is_null()) run.decision = parse_decision(r.at("decision"), run.response);
    if (!r.at("consistency").is_null()) run.consistency = parse_consistency(r.at("consistency"));
    run.matchCorrect = parse_optional_bool(r.at("matchCorrect"));
    if (!r.at("repair").is_null()) run.repair = parse_repair(r.at("repair"));
    if (!r.at("error").is_null()) run.error = parse_error(r.at("error"));
    p.runs.push_back(std::move(run));
  }
  if (!j.at("decision").is_null()) {
    // The aggregate reuses the earliest run carrying the modal id.
    const auto id = j.at("decision").at("selectedNumericId").get<std::int64_t>();
    std::string raw;
    for (const auto& r : p.runs) {
      if (r.decision && r.decision->selectedNumericId == id) {
        raw = r.response;
        break;
      }
    }
    p.decision = parse_decision(j.at("decision"), raw);
  }
  if (!j.at("agreement").is_null()) p.agreement = parse_fraction(j.at("agreement"));
  if (!j.at("stability").is_null()) p.stability = parse_fraction(j.at("stability"));
  if (!j.at("consistency").is_null()) p.consistency = parse_consistency(j.at("consistency"));
  p.matchCorrect = parse_optional_bool(j.at("matchCorrect"));
  if (!j.at("repair").is_null()) p.repair = parse_repair(j.at("repair"));
  return p;
}

Json ranking_json(const CandidateRanking& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) entries.push_back({{"score", e.score}, {"element", serialize_element(e.element)}});
  return {{"targetXpath", r.targetXpath},
          {"algorithm", std::string(to_string(r.algorithm))},
          {"k", r.k},
          {"entries", entries}};
}

CandidateRanking parse_ranking(const Json& j) {
  CandidateRanking r;
  r.targetXpath = j.at("targetXpath").get<std::string>();
  r.algorithm = parse_matcher(j.at("algorithm").get<std::string>());
  r.k = j.at("k").get<std::size_t>();
  for (const auto& e : j.at("entries")) {
    r.entries.push_back({deserialize_element(e.at("element").get<std::string>()), e.at("score").get<double>()});
  }
  return r;
}

}  // namespace

std::optional<RepairVerdict> MatchPhase::verdict() const {
  if (!repair || !repair->assessment) return std::nullopt;
  return repair->assessment->verdict;
}

std::string MatchPhase::selected_xpath(const CandidateRanking& ranking) const {
  if (!decision) return {};
  const RankedCandidate* c = ranking.find(decision->selectedNumericId);
  return c ? c->element.xpath : std::string();
}

const MatchPhase* BreakageOutcome::final_phase() const {
  if (corrected) return &*corrected;
  if (initial) return &*initial;
  return nullptr;
}

RepairVerdict BreakageOutcome::final_verdict() const {
  const MatchPhase* p = final_phase();
  if (p == nullptr) return RepairVerdict::kIncorrect;
  return p->verdict().value_or(RepairVerdict::kIncorrect);
}

std::optional<FixPattern> BreakageOutcome::final_pattern() const {
  const MatchPhase* p = final_phase();
  if (p == nullptr || !p->repair || !p->repair->assessment) return std::nullopt;
  return p->repair->assessment->fixPattern;
}

std::string to_json_line(const BreakageOutcome& o) {
  Json errors = Json::array();
  for (const auto& e : o.errors) errors.push_back(error_json(e));
  const auto pattern = o.final_pattern();
  Json j = {{"breakageId", o.breakageId},
            {"application", o.application},
            {"matcher", std::string(to_string(o.matcher))},
            {"targetXpath", o.targetXpath},
            {"groundTruthXpath", o.groundTruthXpath ? Json(*o.groundTruthXpath) : Json(nullptr)},
            {"brokenStatement", o.brokenStatement},
            {"verdict", std::string(to_string(o.final_verdict()))},
            {"fixPattern", pattern ? Json(std::string(to_string(*pattern))) : Json(nullptr)},
            {"selfCorrected", o.selfCorrected},
            {"ranking", optional_json(o.ranking, ranking_json)},
            {"initial", optional_json(o.initial, phase_json)},
            {"corrected", optional_json(o.corrected, phase_json)},
            {"errors", errors}};
  return j.dump();
}

BreakageOutcome outcome_from_json_line(std::string_view line) {
  try {
    const Json j = Json::parse(line);
    BreakageOutcome o;
    o.breakageId = j.at("breakageId").get<std::string>();
    o.application = j.at("application").get<std::string>();
    o.matcher = parse_matcher(j.at("matcher").get<std::string>());
    o.targetXpath = j.at("targetXpath").get<std::string>();
    if (!j.at("groundTruthXpath").is_null()) o.groundTruthXpath = j.at("groundTruthXpath").get<std::string>();
    o.brokenStatement = j.at("brokenStatement").get<std::string>();
    o.selfCorrected = j.at("selfCorrected").get<bool>();
    if (!j.at("ranking").is_null()) o.ranking = parse_ranking(j.at("ranking"));
    if (!j.at("initial").is_null()) o.initial = parse_phase(j.at("initial"));
    if (!j.at("corrected").is_null()) o.corrected = parse_phase(j.at("corrected"));
    for (const auto& e : j.at("errors")) o.errors.push_back(parse_error(e));
    return o;
  } catch (const nlohmann::json::exception& e) {
    malformed(std::string("bad outcome record: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedOutcomeLog) throw;
    malformed(std::string("bad outcome record: ") + e.what());
  }
}

std::string serialize_outcome_log(const std::vector<BreakageOutcome>& outcomes) {
  std::string out;
  for (const auto& o : outcomes) {
    out += to_json_line(o);
    out += '\n';
  }
  return out;
}

std::vector<BreakageOutcome> parse_outcome_log(std::string_view text) {
  std::vector<BreakageOutcome> out;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    const std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    try {
      out.push_back(outcome_from_json_line(line));
    } catch (const Error& e) {
      malformed("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace uirepair
