#include "uirepair/dom_snapshot.h"

#include <charconv>
#include <fstream>
#include <sstream>

#include "uirepair/error.h"

namespace uirepair {
namespace {

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    const std::size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    if (nl == std::string_view::npos) break;
    start = nl + 1;
  }
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
  s = trim(s);
  std::int64_t value = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || s.empty()) return std::nullopt;
  return value;
}

void append_quoted(std::string& out, std::string_view value) {
  out += '\'';
  for (char c : value) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\'': out += "\\'"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default: out += c;
    }
  }
  out += '\'';
}

// Cursor over the "{key=value, ...}" record notation.
class RecordReader {
 public:
  explicit RecordReader(std::string_view text) : in_(text) {}

  void expect(char c) {
    skip_space();
    if (pos_ >= in_.size() || in_[pos_] != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void expect_key(std::string_view key) {
    skip_space();
    if (in_.substr(pos_, key.size()) != key) fail("missing field '" + std::string(key) + "'");
    pos_ += key.size();
    expect('=');
  }

  std::string quoted() {
    skip_space();
    // Accept a backtick opener as well, the way the attribute tables print it.
    if (pos_ >= in_.size() || (in_[pos_] != '\'' && in_[pos_] != '`')) fail("expected quoted value");
    ++pos_;
    std::string out;
    while (pos_ < in_.size() && in_[pos_] != '\'') {
      char c = in_[pos_++];
      if (c == '\\') {
        if (pos_ >= in_.size()) fail("dangling escape");
        const char e = in_[pos_++];
        switch (e) {
          case 'n': c = '\n'; break;
          case 'r': c = '\r'; break;
          case 't': c = '\t'; break;
          case '\\':
          case '\'': c = e; break;
          default: fail(std::string("unknown escape \\") + e);
        }
      }
      out += c;
    }
    if (pos_ >= in_.size()) fail("unterminated quoted value");
    ++pos_;
    return out;
  }

  std::int64_t integer() {
    skip_space();
    const std::size_t start = pos_;
    if (pos_ < in_.size() && (in_[pos_] == '-' || in_[pos_] == '+')) ++pos_;
    while (pos_ < in_.size() && in_[pos_] >= '0' && in_[pos_] <= '9') ++pos_;
    auto value = parse_int(in_.substr(start, pos_ - start));
    if (!value) fail("expected integer");
    return *value;
  }

  bool boolean() {
    skip_space();
    if (in_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (in_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    fail("expected true or false");
  }

  void expect_end() {
    skip_space();
    if (pos_ != in_.size()) fail("trailing characters");
  }

 private:
  void skip_space() {
    while (pos_ < in_.size() && is_space(in_[pos_])) ++pos_;
  }

  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kMalformedRecord, what + " at offset " + std::to_string(pos_));
  }

  std::string_view in_;
  std::size_t pos_ = 0;
};

WebElementRecord record_from_node(const DomNode& node, std::int64_t numeric_id) {
  WebElementRecord r;
  r.numericId = numeric_id;
  r.id = std::string(node.attribute("id").value_or(""));
  r.name = std::string(node.attribute("name").value_or(""));
  r.className = normalize_whitespace(node.attribute("class").value_or(""));
  r.xpath = compute_xpath(node);
  r.tagName = node.tag;
  r.text = subtree_text(node);
  if (r.text.empty() && node.tag == "input") {
    r.text = normalize_whitespace(node.attribute("value").value_or(""));
  }
  r.linkText = node.tag == "a" ? r.text : std::string();
  r.isLeaf = node.element_children().empty();
  return r;
}

}  // namespace

GrayImage::GrayImage(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), pixels_(rows * cols, fill) {}

GrayImage::GrayImage(std::size_t rows, std::size_t cols, std::vector<double> pixels)
    : rows_(rows), cols_(cols), pixels_(std::move(pixels)) {
  if (pixels_.size() != rows_ * cols_) {
    throw Error(ErrorCode::kInvalidArgument, "pixel buffer does not match image dimensions");
  }
}

GrayImage GrayImage::crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const {
  if (row + rows > rows_ || col + cols > cols_) {
    throw Error(ErrorCode::kInvalidArgument, "crop rectangle outside image");
  }
  GrayImage out(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = at(row + r, col + c);
  }
  return out;
}

std::vector<Rect> PageSnapshot::element_bounds() const {
  std::vector<Rect> out;
  out.reserve(elements.size());
  for (const auto& e : elements) out.push_back(bounds_of(e));
  return out;
}

const WebElementRecord* PageSnapshot::find_by_xpath(std::string_view xpath) const {
  for (const auto& e : elements) {
    if (e.xpath == xpath) return &e;
  }
  return nullptr;
}

const WebElementRecord* PageSnapshot::find_by_numeric_id(std::int64_t numeric_id) const {
  if (numeric_id < 0 || static_cast<std::size_t>(numeric_id) >= elements.size()) return nullptr;
  const WebElementRecord& e = elements[static_cast<std::size_t>(numeric_id)];
  return e.numericId == numeric_id ? &e : nullptr;
}

PageSnapshot parse_page(std::string_view html_text, std::string label, std::string source_path) {
  const DomDocument doc = parse_html_document(html_text);
  if (doc.document_element() == nullptr) {
    throw Error(ErrorCode::kEmptyDocument, "no <html> root could be recovered");
  }
  PageSnapshot snap;
  snap.label = std::move(label);
  snap.sourcePath = std::move(source_path);
  const auto nodes = doc.elements();
  snap.elements.reserve(nodes.size());
  for (const DomNode* node : nodes) {
    snap.elements.push_back(record_from_node(*node, static_cast<std::int64_t>(snap.elements.size())));
  }
  return snap;
}

std::vector<LayoutRow> parse_layout(std::string_view layout_text) {
  std::vector<LayoutRow> rows;
  const auto lines = split_lines(layout_text);
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const std::string_view line = lines[i];
    if (trim(line).empty() || trim(line).front() == '#') continue;
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
      const std::size_t tab = line.find('\t', start);
      fields.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
      if (tab == std::string_view::npos) break;
      start = tab + 1;
    }
    const std::string where = "line " + std::to_string(i + 1);
    if (fields.size() != 5) {
      throw Error(ErrorCode::kMalformedLayoutRow, where + ": expected 5 tab-separated fields");
    }
    LayoutRow row;
    row.xpath = std::string(trim(fields[0]));
    row.line = i + 1;
    std::int64_t* targets[] = {&row.x, &row.y, &row.width, &row.height};
    for (std::size_t f = 0; f < 4; ++f) {
      auto value = parse_int(fields[f + 1]);
      if (!value) {
        throw Error(ErrorCode::kMalformedLayoutRow,
                    where + ": non-numeric geometry '" + std::string(fields[f + 1]) + "'");
      }
      *targets[f] = *value;
    }
    if (row.width < 0 || row.height < 0) {
      throw Error(ErrorCode::kMalformedLayoutRow, where + ": negative width or height");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

LayoutResult load_layout(const PageSnapshot& snapshot, std::string_view layout_text) {
  LayoutResult result{snapshot, {}};
  for (LayoutRow& row : parse_layout(layout_text)) {
    bool matched = false;
    for (auto& e : result.snapshot.elements) {
      if (e.xpath != row.xpath) continue;
      e.x = row.x;
      e.y = row.y;
      e.width = row.width;
      e.height = row.height;
      matched = true;
      break;
    }
    if (!matched) result.unmatched.push_back(std::move(row));
  }
  return result;
}

std::string serialize_element(const WebElementRecord& r) {
  std::string out = "{numericId=" + std::to_string(r.numericId);
  out += ", id=";
  append_quoted(out, r.id);
  out += ", name=";
  append_quoted(out, r.name);
  out += ", class=";
  append_quoted(out, r.className);
  out += ", xpath=";
  append_quoted(out, r.xpath);
  out += ", text=";
  append_quoted(out, r.text);
  out += ", tagName=";
  append_quoted(out, r.tagName);
  out += ", linkText=";
  append_quoted(out, r.linkText);
  out += ", x=" + std::to_string(r.x);
  out += ", y=" + std::to_string(r.y);
  out += ", width=" + std::to_string(r.width);
  out += ", height=" + std::to_string(r.height);
  out += ", isLeaf=";
  out += r.isLeaf ? "true" : "false";
  out += '}';
  return out;
}

WebElementRecord deserialize_element(std::string_view text) {
  RecordReader in(text);
  WebElementRecord r;
  in.expect('{');
  in.expect_key("numericId");
  r.numericId = in.integer();
  const auto string_field = [&](std::string_view key, std::string& dst) {
    in.expect(',');
    in.expect_key(key);
    dst = in.quoted();
  };
  const auto int_field = [&](std::string_view key, std::int64_t& dst) {
    in.expect(',');
    in.expect_key(key);
    dst = in.integer();
  };
  string_field("id", r.id);
  string_field("name", r.name);
  string_field("class", r.className);
  string_field("xpath", r.xpath);
  string_field("text", r.text);
  string_field("tagName", r.tagName);
  string_field("linkText", r.linkText);
  int_field("x", r.x);
  int_field("y", r.y);
  int_field("width", r.width);
  int_field("height", r.height);
  in.expect(',');
  in.expect_key("isLeaf");
  r.isLeaf = in.boolean();
  in.expect('}');
  in.expect_end();
  if (r.numericId < 0) throw Error(ErrorCode::kMalformedRecord, "negative numericId");
  if (r.width < 0 || r.height < 0) throw Error(ErrorCode::kMalformedRecord, "negative width or height");
  return r;
}

std::string serialize_snapshot(const PageSnapshot& snapshot) {
  std::string out = "#snapshot label=";
  append_quoted(out, snapshot.label);
  out += " source=";
  append_quoted(out, snapshot.sourcePath);
  out += " elements=" + std::to_string(snapshot.elements.size()) + "\n";
  for (const auto& e : snapshot.elements) {
    out += serialize_element(e);
    out += '\n';
  }
  return out;
}

PageSnapshot deserialize_snapshot(std::string_view text) {
  const auto lines = split_lines(text);
  if (lines.empty() || lines[0].substr(0, 10) != "#snapshot ") {
    throw Error(ErrorCode::kMalformedSnapshot, "missing '#snapshot' header line");
  }
  PageSnapshot snap;
  std::size_t expected = 0;
  try {
    std::string_view header = lines[0].substr(10);
    // Reuse the record reader for the quoted header values.
    RecordReader in(header);
    in.expect_key("label");
    snap.label = in.quoted();
    in.expect_key("source");
    snap.sourcePath = in.quoted();
    in.expect_key("elements");
    const auto count = in.integer();
    in.expect_end();
    if (count < 0) throw Error(ErrorCode::kMalformedSnapshot, "negative element count");
    expected = static_cast<std::size_t>(count);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kMalformedSnapshot) throw;
    throw Error(ErrorCode::kMalformedSnapshot, std::string("bad header: ") + e.what());
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (trim(lines[i]).empty()) continue;
    WebElementRecord r = deserialize_element(lines[i]);
    if (r.numericId != static_cast<std::int64_t>(snap.elements.size())) {
      throw Error(ErrorCode::kMalformedSnapshot,
                  "numericIds must be dense from 0 in order; got " + std::to_string(r.numericId) + " at line " +
                      std::to_string(i + 1));
    }
    snap.elements.push_back(std::move(r));
  }
  if (snap.elements.size() != expected) {
    throw Error(ErrorCode::kMalformedSnapshot, "header declares " + std::to_string(expected) +
                                                   " elements, found " + std::to_string(snap.elements.size()));
  }
  return snap;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed for '" + path.string() + "'");
  return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed for '" + path.string() + "'");
}

PageSnapshot load_page(const std::filesystem::path& path, const std::filesystem::path& layout,
                       const std::filesystem::path& screenshot) {
  const std::string content = read_text_file(path);
  PageSnapshot snap = content.rfind("#snapshot ", 0) == 0
                          ? deserialize_snapshot(content)
                          : parse_page(content, path.stem().string(), path.string());
  if (!layout.empty()) snap = load_layout(snap, read_text_file(layout)).snapshot;
  if (!screenshot.empty()) snap.screenshot = load_grayscale_image(screenshot);
  return snap;
}

}  // namespace uirepair
