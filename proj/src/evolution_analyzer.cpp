#include "uirepair/evolution_analyzer.h"

#include <cstdio>
#include <map>
#include <regex>

#include "uirepair/error.h"

namespace uirepair {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = nl + 1;
  }
  return lines;
}

// Tracks /* */ blocks across lines and reports whether a line carries code.
class CommentTracker {
 public:
  bool is_code(std::string_view line) {
    std::string_view t = trim(line);
    if (in_block_) {
      const std::size_t end = t.find("*/");
      if (end == std::string_view::npos) return false;
      in_block_ = false;
      t = trim(t.substr(end + 2));
    }
    while (t.starts_with("/*")) {
      const std::size_t end = t.find("*/", 2);
      if (end == std::string_view::npos) {
        in_block_ = true;
        return false;
      }
      t = trim(t.substr(end + 2));
    }
    if (t.empty() || t.starts_with("//")) return false;
    const std::size_t open = t.rfind("/*");
    if (open != std::string_view::npos && t.find("*/", open + 2) == std::string_view::npos) in_block_ = true;
    return true;
  }

 private:
  bool in_block_ = false;
};

const std::regex& event_regex() {
  static const std::regex re(
      R"(\b(click|doubleClick|contextClick|sendKeys|clear|submit|input|moveToElement|dragAndDrop|selectByVisibleText|selectByValue|selectByIndex)\s*\()");
  return re;
}

const std::regex& locator_regex() {
  static const std::regex re(R"re(By\s*\.\s*\w+\s*\(\s*"(?:[^"\\]|\\.)*"\s*\)|@FindBy\s*\([^)]*\))re");
  return re;
}

std::string collapse_spaces(std::string_view s) {
  std::string out;
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) out += c;
  }
  return out;
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  std::string lower(haystack);
  for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  std::string n(needle);
  for (auto& c : n) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return lower.find(n) != std::string::npos;
}

std::string strip_diff_path(std::string_view path) {
  path = trim(path);
  const std::size_t tab = path.find('\t');
  if (tab != std::string_view::npos) path = path.substr(0, tab);
  if (path.starts_with("a/") || path.starts_with("b/")) path.remove_prefix(2);
  return std::string(path);
}

std::string parent_xpath(const std::string& xpath) {
  const std::size_t slash = xpath.rfind('/');
  if (slash == std::string::npos || slash == 0) return {};
  return xpath.substr(0, slash);
}

}  // namespace

std::string_view to_string(ElementProperty property) {
  switch (property) {
    case ElementProperty::kId: return "id";
    case ElementProperty::kText: return "text";
    case ElementProperty::kXpath: return "xpath";
    case ElementProperty::kTag: return "tag";
    case ElementProperty::kClass: return "class";
    case ElementProperty::kStructure: return "structure";
  }
  return "id";
}

ElementProperty parse_element_property(std::string_view name) {
  for (auto p : kAllElementProperties) {
    if (to_string(p) == name) return p;
  }
  if (name == "tagName") return ElementProperty::kTag;
  if (name == "className") return ElementProperty::kClass;
  throw Error(ErrorCode::kInvalidArgument, "unknown element property '" + std::string(name) + "'");
}

bool possesses(const ElementPairing& p, ElementProperty property) {
  const auto either = [&](const std::string WebElementRecord::*field) {
    return !(p.oldElement.*field).empty() || (p.newElement && !((*p.newElement).*field).empty());
  };
  switch (property) {
    case ElementProperty::kId: return either(&WebElementRecord::id);
    case ElementProperty::kText: return either(&WebElementRecord::text);
    case ElementProperty::kClass: return either(&WebElementRecord::className);
    case ElementProperty::kXpath:
    case ElementProperty::kTag:
    case ElementProperty::kStructure: return true;
  }
  return true;
}

Fraction change_ratio(std::span<const ElementPairing> pairings, ElementProperty property) {
  std::int64_t possessing = 0;
  std::int64_t changed = 0;
  for (const auto& p : pairings) {
    if (!p.newElement || !possesses(p, property)) continue;
    ++possessing;
    changed += p.changedProperties.contains(property);
  }
  if (possessing == 0) {
    throw Error(ErrorCode::kNoElementsWithProperty,
                "no paired element has property '" + std::string(to_string(property)) + "'");
  }
  return Fraction(changed, possessing);
}

std::vector<XpathPairing> parse_pairing_file(std::string_view text) {
  std::vector<XpathPairing> out;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(text)) {
    ++line_no;
    if (trim(line).empty() || line.front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const std::string where = "pairing line " + std::to_string(line_no);
    if (fields.size() < 2 || fields.size() > 3) {
      throw Error(ErrorCode::kMalformedPairing, where + ": expected 2 or 3 tab-separated fields");
    }
    XpathPairing row;
    row.oldXpath = std::string(trim(fields[0]));
    if (row.oldXpath.empty()) throw Error(ErrorCode::kMalformedPairing, where + ": empty old xpath");
    const std::string_view partner = trim(fields[1]);
    if (partner.empty()) throw Error(ErrorCode::kMalformedPairing, where + ": empty new xpath (use NONE)");
    if (partner != "NONE") row.newXpath = std::string(partner);
    if (fields.size() == 3) {
      std::set<ElementProperty> changes;
      std::string_view list = trim(fields[2]);
      while (!list.empty()) {
        const std::size_t comma = list.find(',');
        const std::string_view item = trim(list.substr(0, comma));
        if (!item.empty()) {
          try {
            changes.insert(parse_element_property(item));
          } catch (const Error&) {
            throw Error(ErrorCode::kMalformedPairing, where + ": unknown property '" + std::string(item) + "'");
          }
        }
        if (comma == std::string_view::npos) break;
        list.remove_prefix(comma + 1);
      }
      row.declaredChanges = std::move(changes);
    }
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<ElementPairing> derive_pairings(const PageSnapshot& old_snapshot, const PageSnapshot& new_snapshot,
                                            std::span<const XpathPairing> rows) {
  std::map<std::string, std::optional<std::string>> partner;
  for (const auto& row : rows) {
    if (!partner.emplace(row.oldXpath, row.newXpath).second) {
      throw Error(ErrorCode::kMalformedPairing, "old xpath '" + row.oldXpath + "' is paired twice");
    }
  }
  std::vector<ElementPairing> out;
  for (const auto& row : rows) {
    const WebElementRecord* old_el = old_snapshot.find_by_xpath(row.oldXpath);
    if (old_el == nullptr) {
      throw Error(ErrorCode::kMalformedPairing, "old xpath '" + row.oldXpath + "' not found in " + old_snapshot.label);
    }
    ElementPairing p;
    p.oldElement = *old_el;
    if (row.newXpath) {
      const WebElementRecord* new_el = new_snapshot.find_by_xpath(*row.newXpath);
      if (new_el == nullptr) {
        throw Error(ErrorCode::kMalformedPairing,
                    "new xpath '" + *row.newXpath + "' not found in " + new_snapshot.label);
      }
      p.newElement = *new_el;
    }
    if (row.declaredChanges) {
      p.changedProperties = *row.declaredChanges;
    } else if (p.newElement) {
      const WebElementRecord& a = p.oldElement;
      const WebElementRecord& b = *p.newElement;
      if (a.id != b.id) p.changedProperties.insert(ElementProperty::kId);
      if (a.text != b.text) p.changedProperties.insert(ElementProperty::kText);
      if (a.xpath != b.xpath) p.changedProperties.insert(ElementProperty::kXpath);
      if (a.tagName != b.tagName) p.changedProperties.insert(ElementProperty::kTag);
      if (a.className != b.className) p.changedProperties.insert(ElementProperty::kClass);
      const std::string old_parent = parent_xpath(a.xpath);
      const std::string new_parent = parent_xpath(b.xpath);
      bool same_parent = false;
      if (auto it = partner.find(old_parent); it != partner.end()) {
        same_parent = it->second && *it->second == new_parent;
      } else {
        same_parent = old_parent == new_parent;
      }
      if (!same_parent) p.changedProperties.insert(ElementProperty::kStructure);
    }
    out.push_back(std::move(p));
  }
  return out;
}

std::string format_change_ratio_table(std::span<const ElementPairing> pairings) {
  std::string out = "property\tchanged\tpossessing\tratio\n";
  for (auto property : kAllElementProperties) {
    std::size_t possessing = 0;
    std::size_t changed = 0;
    for (const auto& p : pairings) {
      if (!p.newElement || !possesses(p, property)) continue;
      ++possessing;
      changed += p.changedProperties.contains(property);
    }
    std::string ratio = "undefined";
    if (possessing > 0) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(changed) / static_cast<double>(possessing));
      ratio = buf;
    }
    out += std::string(to_string(property)) + '\t' + std::to_string(changed) + '\t' + std::to_string(possessing) +
           '\t' + ratio + '\n';
  }
  return out;
}

std::string_view to_string(ChunkKind kind) {
  switch (kind) {
    case ChunkKind::kAdded: return "added";
    case ChunkKind::kDeleted: return "deleted";
    case ChunkKind::kModified: return "modified";
  }
  return "added";
}

std::string_view to_string(RepairType type) {
  switch (type) {
    case RepairType::kI: return "I";
    case RepairType::kII: return "II";
    case RepairType::kIII: return "III";
    case RepairType::kIV: return "IV";
    case RepairType::kV: return "V";
    case RepairType::kVI: return "VI";
  }
  return "I";
}

std::vector<DiffChunk> split_diff_chunks(std::string_view unified_diff) {
  struct Run {
    char sign;
    std::vector<std::string> lines;
  };
  std::vector<DiffChunk> chunks;
  std::vector<Run> runs;  // runs of the current hunk
  std::string file;
  bool in_hunk = false;
  bool run_open = false;  // false once a context line ends the last run
  CommentTracker old_side;
  CommentTracker new_side;

  const auto flush_hunk = [&]() {
    for (std::size_t i = 0; i < runs.size(); ++i) {
      DiffChunk chunk;
      chunk.file = file;
      if (i + 1 < runs.size() && runs[i].sign != runs[i + 1].sign) {
        chunk.kind = ChunkKind::kModified;
        chunk.lines = runs[i].lines;
        chunk.lines.insert(chunk.lines.end(), runs[i + 1].lines.begin(), runs[i + 1].lines.end());
        ++i;
      } else {
        chunk.kind = runs[i].sign == '+' ? ChunkKind::kAdded : ChunkKind::kDeleted;
        chunk.lines = runs[i].lines;
      }
      chunk.types = classify_chunk(chunk);
      chunks.push_back(std::move(chunk));
    }
    runs.clear();
    run_open = false;
  };

  // Remaining old/new lines of the current hunk, when its header states them.
  bool counted = false;
  long old_left = 0;
  long new_left = 0;
  std::size_t line_no = 0;
  for (std::string_view line : split_lines(unified_diff)) {
    ++line_no;
    if (in_hunk && counted && old_left <= 0 && new_left <= 0) {
      flush_hunk();
      in_hunk = false;
    }
    if (line.starts_with("diff ") || (!in_hunk && (line.starts_with("--- ") || line.starts_with("+++ ")))) {
      flush_hunk();
      in_hunk = false;
      if (line.starts_with("+++ ") || line.starts_with("--- ")) {
        const std::string path = strip_diff_path(line.substr(4));
        if (path != "/dev/null") file = path;
      }
      continue;
    }
    if (line.starts_with("@@")) {
      flush_hunk();
      if (line.find("@@", 2) == std::string_view::npos) {
        throw Error(ErrorCode::kMalformedDiff, "line " + std::to_string(line_no) + ": bad hunk header");
      }
      static const std::regex header(R"(^@@ -\d+(?:,(\d+))? \+\d+(?:,(\d+))? @@)");
      std::match_results<std::string_view::const_iterator> m;
      if (std::regex_search(line.begin(), line.end(), m, header)) {
        counted = true;
        old_left = m[1].matched ? std::stol(m[1].str()) : 1;
        new_left = m[2].matched ? std::stol(m[2].str()) : 1;
      } else {
        counted = false;
      }
      in_hunk = true;
      old_side = CommentTracker();
      new_side = CommentTracker();
      continue;
    }
    if (!in_hunk) {
      if (line.starts_with("+") || line.starts_with("-")) {
        throw Error(ErrorCode::kMalformedDiff,
                    "line " + std::to_string(line_no) + ": change line outside any hunk (missing @@ header)");
      }
      continue;  // preamble such as "index ..." or commit text
    }
    if (line.starts_with("\\")) continue;  // "\ No newline at end of file"
    const char sign = line.empty() ? ' ' : line.front();
    const std::string_view body = line.empty() ? line : line.substr(1);
    if (sign == '+' || sign == '-') {
      --(sign == '+' ? new_left : old_left);
      CommentTracker& side = sign == '+' ? new_side : old_side;
      if (!side.is_code(body)) continue;
      if (!run_open || runs.empty() || runs.back().sign != sign) runs.push_back({sign, {}});
      runs.back().lines.push_back(std::string(line));
      run_open = true;
    } else if (sign == ' ') {
      --old_left;
      --new_left;
      const bool old_code = old_side.is_code(body);
      const bool new_code = new_side.is_code(body);
      if (old_code || new_code) run_open = false;
    } else {
      // Anything else ends the hunk (e.g. the next commit's header text).
      flush_hunk();
      in_hunk = false;
    }
  }
  flush_hunk();
  return chunks;
}

std::set<RepairType> classify_chunk(const DiffChunk& chunk) {
  std::set<RepairType> types;
  std::set<std::string> locators;
  std::set<std::string> events;
  bool any_event = false;
  for (const auto& raw : chunk.lines) {
    const std::string_view line =
        !raw.empty() && (raw.front() == '+' || raw.front() == '-') ? std::string_view(raw).substr(1) : raw;
    const std::string text(line);
    for (auto it = std::sregex_iterator(text.begin(), text.end(), locator_regex()); it != std::sregex_iterator(); ++it) {
      locators.insert(collapse_spaces(it->str()));
    }
    for (auto it = std::sregex_iterator(text.begin(), text.end(), event_regex()); it != std::sregex_iterator(); ++it) {
      events.insert((*it)[1].str());
      any_event = true;
    }
    if (contains_ci(text, "assert")) types.insert(RepairType::kV);
    if (contains_ci(text, "sleep") || contains_ci(text, "implicitlywait") || contains_ci(text, "refresh")) {
      types.insert(RepairType::kVI);
    }
  }
  if (chunk.kind == ChunkKind::kModified && locators.size() >= 2) types.insert(RepairType::kI);
  if (chunk.kind == ChunkKind::kAdded && any_event) types.insert(RepairType::kII);
  if (chunk.kind == ChunkKind::kDeleted && any_event) types.insert(RepairType::kIII);
  if (chunk.kind == ChunkKind::kModified && events.size() >= 2) types.insert(RepairType::kIV);
  return types;
}

std::string format_repair_type_table(std::span<const DiffChunk> chunks) {
  std::map<RepairType, std::size_t> counts;
  std::size_t unclassified = 0;
  for (const auto& c : chunks) {
    for (auto t : c.types) ++counts[t];
    unclassified += c.types.empty();
  }
  std::string out = "type\tchunks\tshare\n";
  for (auto t : {RepairType::kI, RepairType::kII, RepairType::kIII, RepairType::kIV, RepairType::kV, RepairType::kVI}) {
    std::string share = "undefined";
    if (!chunks.empty()) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4f", static_cast<double>(counts[t]) / static_cast<double>(chunks.size()));
      share = buf;
    }
    out += "Type-" + std::string(to_string(t)) + '\t' + std::to_string(counts[t]) + '\t' + share + '\n';
  }
  out += "unclassified\t" + std::to_string(unclassified) + "\n";
  out += "total chunks\t" + std::to_string(chunks.size()) + "\n";
  return out;
}

TestComplexity test_complexity(std::string_view source) {
  TestComplexity c;
  CommentTracker tracker;
  for (std::string_view line : split_lines(source)) {
    if (!tracker.is_code(line)) continue;
    ++c.loc;
    const std::string text(line);
    c.events += static_cast<std::size_t>(
        std::distance(std::sregex_iterator(text.begin(), text.end(), event_regex()), std::sregex_iterator()));
  }
  return c;
}

}  // namespace uirepair
