#include "uirepair/cli.h"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <ostream>
#include <sstream>
#include <vector>

#include <CLI11.hpp>

#include "uirepair/dom_snapshot.h"
#include "uirepair/evaluation.h"
#include "uirepair/evolution_analyzer.h"
#include "uirepair/outcome.h"
#include "uirepair/pipeline.h"

namespace uirepair::cli {
namespace {

namespace fs = std::filesystem;

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorCode::kUsage, message); }

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::string lower(std::string_view s) {
  std::string r(s);
  std::transform(r.begin(), r.end(), r.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return r;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  std::size_t n = 0;
  const std::string v = trim(value);
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), n);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) {
    usage(std::string(key) + ": expected a non-negative integer, got '" + std::string(value) + "'");
  }
  return n;
}

double parse_real(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size()) {
    usage(std::string(key) + ": expected a number, got '" + std::string(value) + "'");
  }
  return d;
}

bool parse_bool(std::string_view key, std::string_view value) {
  const std::string v = lower(trim(value));
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  usage(std::string(key) + ": expected true or false, got '" + std::string(value) + "'");
}

std::string file_or_dash(const std::string& path) {
  if (path == "-") {
    std::ostringstream ss;
    ss << std::cin.rdbuf();
    return ss.str();
  }
  return read_text_file(path);
}

void emit(std::ostream& out, const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_text_file(path, text);
  }
}

std::vector<fs::path> files_under(const fs::path& root, const std::vector<std::string>& extensions) {
  std::vector<fs::path> files;
  if (fs::is_regular_file(root)) return {root};
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, "not a file or directory: " + root.string());
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (extensions.empty() || std::find(extensions.begin(), extensions.end(), ext) != extensions.end()) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  return files;
}

std::vector<std::size_t> parse_k_grid(const std::string& text) {
  std::vector<std::size_t> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::size_t k = parse_count("k-grid", item);
    if (k == 0) usage("k-grid values must be at least 1");
    grid.push_back(k);
  }
  if (grid.empty()) usage("k-grid is empty");
  return grid;
}

struct ExtractArgs {
  std::string page, layout, screenshot, output;
};

struct MatchArgs {
  std::string oldPage, newPage, targetXpath;
  std::string oldLayout, newLayout, oldScreenshot, newScreenshot;
};

struct RepairArgs {
  std::string manifest, config, outcomes, report;
  bool evaluation = false;
  bool perRunRepair = false;
};

struct EvaluateArgs {
  std::string outcomes, groundTruth, mode = "aggregate", kGrid = "1,3,5,10", output;
  bool json = false;
};

struct AnalyzeArgs {
  std::string changeRatio, classifyDiffs, complexity;
  std::string oldPage, newPage, oldLayout, newLayout;
  bool listChunks = false;
};

int cmd_extract(const ExtractArgs& a, std::ostream& out) {
  PageSnapshot snapshot = load_page(a.page, a.layout, a.screenshot);
  emit(out, a.output, serialize_snapshot(snapshot));
  return 0;
}

int cmd_match(const MatchArgs& a, const ToolConfig& config, std::ostream& out) {
  const PageSnapshot old_page = load_page(a.oldPage, a.oldLayout, a.oldScreenshot);
  const PageSnapshot new_page = load_page(a.newPage, a.newLayout, a.newScreenshot);
  const WebElementRecord* target = old_page.find_by_xpath(a.targetXpath);
  if (target == nullptr) throw Error(ErrorCode::kTargetNotFound, "target xpath not found in old page: " + a.targetXpath);
  out << format_ranking_report(rank_candidates(config.matcher, *target, old_page, new_page, config.candidateK));
  return 0;
}

std::shared_ptr<ChatBackend> make_backend(const ToolConfig& config, const Environment& env) {
  if (config.backend == BackendKind::kMock) {
    if (config.mockScript.empty()) usage("the mock backend needs --mock-script (or mock_script in the config file)");
    return std::make_shared<MockBackend>(MockBackend::from_file(config.mockScript));
  }
  LiveBackendOptions options;
  if (auto key = env.getenv("OPENAI_API_KEY")) options.apiKey = *key;
  if (auto endpoint = env.getenv("UIREPAIR_ENDPOINT"); endpoint && !endpoint->empty()) options.endpoint = *endpoint;
  if (options.apiKey.empty()) throw Error(ErrorCode::kAuthError, "OPENAI_API_KEY is not set");
  options.maxInFlight = std::max<std::size_t>(config.parallelism, 1);
  auto transport = env.transport ? env.transport : std::make_shared<HttplibTransport>();
  return std::make_shared<LiveBackend>(options, transport);
}

int cmd_repair(const RepairArgs& a, const ToolConfig& config, const Environment& env, std::ostream& out) {
  PipelineConfig pipeline;
  pipeline.llm.modelId = config.modelId;
  pipeline.llm.temperature = config.temperature;
  pipeline.llm.runsPerBreakage = config.runsPerBreakage;
  pipeline.llm.maxRetries = config.maxRetries;
  pipeline.llm.requestTimeoutSeconds = config.requestTimeoutSeconds;
  pipeline.candidateK = config.candidateK;
  pipeline.selfCorrect = config.selfCorrect;
  pipeline.evaluationMode = a.evaluation;
  pipeline.perRunRepair = a.perRunRepair;
  pipeline.validate();

  std::shared_ptr<ChatBackend> backend = make_backend(config, env);
  const std::vector<BreakageCase> cases = load_manifest(a.manifest, config.matcher);
  const BatchResult result = run_batch(cases, pipeline, *backend, config.parallelism);

  for (const auto& o : result.outcomes) {
    const auto pattern = o.final_pattern();
    out << o.breakageId << '\t' << to_string(o.final_verdict()) << '\t'
        << (pattern ? std::string(to_string(*pattern)) : std::string("-")) << '\t'
        << (o.selfCorrected ? "self-corrected" : "-") << '\t' << o.errors.size() << " errors\n";
  }
  if (!a.outcomes.empty()) write_text_file(a.outcomes, serialize_outcome_log(result.outcomes));
  if (!a.report.empty()) write_text_file(a.report, report_to_json(result.report));
  return 0;
}

int cmd_evaluate(const EvaluateArgs& a, std::ostream& out) {
  const std::vector<BreakageOutcome> outcomes = parse_outcome_log(file_or_dash(a.outcomes));
  std::map<std::string, GroundTruthEntry> truth;
  if (!a.groundTruth.empty()) {
    for (auto& entry : parse_ground_truth(read_text_file(a.groundTruth))) truth.emplace(entry.breakageId, entry);
  }
  CreditMode mode;
  try {
    mode = parse_credit_mode(a.mode);
  } catch (const Error& e) {
    usage(e.what());
  }
  const std::vector<std::size_t> grid = parse_k_grid(a.kGrid);
  const MetricsReport report = build_report(outcomes, truth, grid, mode);
  emit(out, a.output, a.json ? report_to_json(report) : format_report_table(report));
  return 0;
}

int cmd_analyze(const AnalyzeArgs& a, std::ostream& out) {
  const int chosen = !a.changeRatio.empty() + !a.classifyDiffs.empty() + !a.complexity.empty();
  if (chosen != 1) usage("analyze needs exactly one of --change-ratio, --classify-diffs, --complexity");
  if (!a.changeRatio.empty()) {
    if (a.oldPage.empty() || a.newPage.empty()) usage("--change-ratio needs --old and --new");
    const PageSnapshot old_page = load_page(a.oldPage, a.oldLayout);
    const PageSnapshot new_page = load_page(a.newPage, a.newLayout);
    const auto rows = parse_pairing_file(read_text_file(a.changeRatio));
    out << format_change_ratio_table(derive_pairings(old_page, new_page, rows));
    return 0;
  }
  if (!a.classifyDiffs.empty()) {
    std::vector<DiffChunk> chunks;
    for (const auto& file : files_under(a.classifyDiffs, {".diff", ".patch"})) {
      for (auto& chunk : split_diff_chunks(read_text_file(file))) chunks.push_back(std::move(chunk));
    }
    if (a.listChunks) {
      for (const auto& c : chunks) {
        out << c.file << '\t' << to_string(c.kind) << '\t';
        bool first = true;
        for (RepairType t : c.types) {
          out << (first ? "" : ",") << to_string(t);
          first = false;
        }
        out << (first ? "-" : "") << '\n';
      }
    }
    out << format_repair_type_table(chunks);
    return 0;
  }
  TestComplexity total;
  for (const auto& file : files_under(a.complexity, {".java"})) {
    const TestComplexity c = test_complexity(read_text_file(file));
    out << file.string() << '\t' << c.loc << '\t' << c.events << '\n';
    total.loc += c.loc;
    total.events += c.events;
  }
  out << "total\t" << total.loc << '\t' << total.events << '\n';
  return 0;
}

}  // namespace

void ToolConfig::set(std::string_view key, std::string_view value) {
  const std::string v = trim(value);
  if (key == "model") {
    if (v.empty()) usage("model must not be empty");
    modelId = v;
  } else if (key == "temperature") {
    temperature = parse_real(key, v);
  } else if (key == "runs") {
    runsPerBreakage = parse_count(key, v);
  } else if (key == "k") {
    candidateK = parse_count(key, v);
  } else if (key == "matcher") {
    try {
      matcher = parse_matcher(v);
    } catch (const Error& e) {
      usage(e.what());
    }
  } else if (key == "backend") {
    const std::string b = lower(v);
    if (b == "mock") {
      backend = BackendKind::kMock;
    } else if (b == "live") {
      backend = BackendKind::kLive;
    } else {
      usage("backend must be mock or live, got '" + v + "'");
    }
  } else if (key == "parallelism") {
    parallelism = parse_count(key, v);
  } else if (key == "mock_script") {
    mockScript = v;
  } else if (key == "self_correct") {
    selfCorrect = parse_bool(key, v);
  } else if (key == "max_retries") {
    maxRetries = parse_count(key, v);
  } else if (key == "timeout") {
    requestTimeoutSeconds = parse_real(key, v);
  } else {
    usage("unknown configuration key '" + std::string(key) + "'");
  }
}

void ToolConfig::validate() const {
  if (candidateK < 1) usage("k must be at least 1");
  if (!(temperature >= 0.0 && temperature <= 2.0)) usage("temperature must lie in [0, 2]");
  if (runsPerBreakage < 1) usage("runs must be at least 1");
  if (parallelism < 1) usage("parallelism must be at least 1");
  if (!(requestTimeoutSeconds > 0.0)) usage("timeout must be positive");
}

std::map<std::string, std::string> parse_config_text(std::string_view text) {
  std::map<std::string, std::string> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) usage("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(std::string_view(t).substr(0, eq));
    if (key.empty()) usage("config line " + std::to_string(line_no) + ": empty key");
    entries[key] = trim(std::string_view(t).substr(eq + 1));
  }
  return entries;
}

Environment Environment::process() {
  Environment env;
  env.getenv = [](const std::string& name) -> std::optional<std::string> {
    const char* v = std::getenv(name.c_str());
    if (v == nullptr) return std::nullopt;
    return std::string(v);
  };
  return env;
}

int exit_code_for(ErrorCategory category) {
  switch (category) {
    case ErrorCategory::kUsage: return 2;
    case ErrorCategory::kIo: return 3;
    case ErrorCategory::kBackend: return 4;
    case ErrorCategory::kData: return 5;
  }
  return 5;
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, const Environment& env) {
  CLI::App app{"Repairs broken locators in web UI tests with a chat model"};
  app.require_subcommand(1);

  std::map<std::string, std::string> flags;
  std::string config_path;
  auto add_setting = [&](CLI::App* cmd, const std::string& name, const std::string& key, const std::string& help) {
    cmd->add_option_function<std::string>(name, [&flags, key](const std::string& v) { flags[key] = v; }, help);
  };

  ExtractArgs ea;
  CLI::App* extract = app.add_subcommand("extract", "Extract an element snapshot from an HTML page");
  extract->add_option("page", ea.page, "HTML page or snapshot file")->required();
  extract->add_option("--layout", ea.layout, "Layout sidecar with element geometry");
  extract->add_option("--screenshot", ea.screenshot, "Page screenshot (PNG or PGM)");
  extract->add_option("-o,--output", ea.output, "Output file (default stdout)");

  MatchArgs ma;
  CLI::App* match = app.add_subcommand("match", "Rank new-page candidates for an old-page element");
  match->add_option("old", ma.oldPage, "Old page")->required();
  match->add_option("new", ma.newPage, "New page")->required();
  match->add_option("--target-xpath", ma.targetXpath, "Target element on the old page")->required();
  match->add_option("--old-layout", ma.oldLayout);
  match->add_option("--new-layout", ma.newLayout);
  match->add_option("--old-screenshot", ma.oldScreenshot);
  match->add_option("--new-screenshot", ma.newScreenshot);
  add_setting(match, "--matcher", "matcher", "edit-distance, water or vista");
  add_setting(match, "--k", "k", "Number of candidates");
  match->add_option("--config", config_path, "key = value configuration file");

  RepairArgs ra;
  CLI::App* repair = app.add_subcommand("repair", "Run the repair pipeline over a manifest");
  repair->add_option("manifest", ra.manifest, "JSON-lines breakage manifest")->required();
  repair->add_option("--config", config_path, "key = value configuration file");
  add_setting(repair, "--backend", "backend", "mock or live");
  add_setting(repair, "--mock-script", "mock_script", "Mock backend script");
  add_setting(repair, "--model", "model", "Chat model id");
  add_setting(repair, "--temperature", "temperature", "Sampling temperature");
  add_setting(repair, "--runs", "runs", "Matching runs per breakage");
  add_setting(repair, "--k", "k", "Number of candidates");
  add_setting(repair, "--matcher", "matcher", "Default matcher");
  add_setting(repair, "--parallelism", "parallelism", "Breakages processed concurrently");
  repair->add_flag_callback("--self-correct", [&flags] { flags["self_correct"] = "true"; }, "Enable self-correction");
  repair->add_flag_callback("--no-self-correct", [&flags] { flags["self_correct"] = "false"; },
                            "Disable self-correction");
  repair->add_flag("--evaluation", ra.evaluation, "Use ground truth to decide on self-correction");
  repair->add_flag("--per-run-repair", ra.perRunRepair, "Request a repair for every run");
  repair->add_option("-o,--outcomes", ra.outcomes, "Outcome log output (JSON lines)");
  repair->add_option("--report", ra.report, "Metrics report output (JSON)");

  EvaluateArgs va;
  CLI::App* evaluate = app.add_subcommand("evaluate", "Compute metrics from an outcome log");
  evaluate->add_option("outcomes", va.outcomes, "Outcome log ('-' for stdin)")->required();
  evaluate->add_option("--ground-truth", va.groundTruth, "Ground-truth TSV");
  evaluate->add_option("--mode", va.mode, "aggregate, best-of or majority");
  evaluate->add_option("--k-grid", va.kGrid, "Comma-separated hit-ratio cutoffs");
  evaluate->add_flag("--json", va.json, "Print JSON instead of a table");
  evaluate->add_option("-o,--output", va.output, "Output file (default stdout)");

  AnalyzeArgs aa;
  CLI::App* analyze = app.add_subcommand("analyze", "Page evolution and test repair history analyses");
  analyze->add_option("--change-ratio", aa.changeRatio, "Element pairing TSV");
  analyze->add_option("--old", aa.oldPage, "Old page for --change-ratio");
  analyze->add_option("--new", aa.newPage, "New page for --change-ratio");
  analyze->add_option("--old-layout", aa.oldLayout);
  analyze->add_option("--new-layout", aa.newLayout);
  analyze->add_option("--classify-diffs", aa.classifyDiffs, "Directory of unified diffs");
  analyze->add_flag("--list-chunks", aa.listChunks, "Print every chunk before the table");
  analyze->add_option("--complexity", aa.complexity, "Directory of test sources");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    ToolConfig config;
    if (env.getenv) {
      for (const auto& [var, key] : kEnvironmentKeys) {
        if (auto v = env.getenv(std::string(var)); v && !v->empty()) config.set(key, *v);
      }
    }
    if (!config_path.empty()) {
      for (const auto& [key, value] : parse_config_text(read_text_file(config_path))) config.set(key, value);
    }
    for (const auto& [key, value] : flags) config.set(key, value);
    config.validate();

    if (extract->parsed()) return cmd_extract(ea, out);
    if (match->parsed()) return cmd_match(ma, config, out);
    if (repair->parsed()) return cmd_repair(ra, config, env, out);
    if (evaluate->parsed()) return cmd_evaluate(va, out);
    if (analyze->parsed()) return cmd_analyze(aa, out);
    usage("no subcommand");
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code_for(e.category());
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
}

}  // namespace uirepair::cli
