#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "uirepair/html_dom.h"

namespace uirepair {

// One DOM element described by the twelve extracted attributes plus a
// page-unique ordinal. This is the unit every matcher and prompt works on.
struct WebElementRecord {
  std::int64_t numericId = 0;
  std::string id;
  std::string name;
  std::string className;
  std::string xpath;
  std::string text;
  std::string tagName;
  std::string linkText;
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  bool isLeaf = false;

  friend bool operator==(const WebElementRecord&, const WebElementRecord&) = default;
};

struct Rect {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;

  friend bool operator==(const Rect&, const Rect&) = default;
};

inline Rect bounds_of(const WebElementRecord& r) { return {r.x, r.y, r.width, r.height}; }

// Row-major grayscale intensities in [0, 1].
class GrayImage {
 public:
  GrayImage() = default;
  GrayImage(std::size_t rows, std::size_t cols, double fill = 0.0);
  GrayImage(std::size_t rows, std::size_t cols, std::vector<double> pixels);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  double& at(std::size_t r, std::size_t c) { return pixels_[r * cols_ + c]; }
  double at(std::size_t r, std::size_t c) const { return pixels_[r * cols_ + c]; }
  const std::vector<double>& pixels() const { return pixels_; }

  // Sub-image; the rectangle must lie inside the image.
  GrayImage crop(std::size_t row, std::size_t col, std::size_t rows, std::size_t cols) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> pixels_;
};

// 8-bit (or 16-bit) PGM, P2 or P5, and PNG of any color type (converted to
// gray). Throws Error{kIo} or Error{kMalformedImage}.
GrayImage load_grayscale_image(const std::filesystem::path& path);
void write_pgm(const GrayImage& image, const std::filesystem::path& path);

struct PageSnapshot {
  std::string label;
  std::string sourcePath;
  std::vector<WebElementRecord> elements;
  std::optional<GrayImage> screenshot;

  std::vector<Rect> element_bounds() const;
  const WebElementRecord* find_by_xpath(std::string_view xpath) const;
  const WebElementRecord* find_by_numeric_id(std::int64_t numeric_id) const;
};

// Throws Error{kEmptyDocument} when the input contains no element at all.
PageSnapshot parse_page(std::string_view html_text, std::string label, std::string source_path = {});

struct LayoutRow {
  std::string xpath;
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::size_t line = 0;
};

struct LayoutResult {
  PageSnapshot snapshot;
  std::vector<LayoutRow> unmatched;
};

// Sidecar format: one "xpath<TAB>x<TAB>y<TAB>width<TAB>height" row per line;
// blank lines and lines starting with '#' are skipped.
std::vector<LayoutRow> parse_layout(std::string_view layout_text);
LayoutResult load_layout(const PageSnapshot& snapshot, std::string_view layout_text);

std::string serialize_element(const WebElementRecord& record);
WebElementRecord deserialize_element(std::string_view text);

// Header line "#snapshot label='..' source='..' elements=N" followed by one
// serialized record per line.
std::string serialize_snapshot(const PageSnapshot& snapshot);
PageSnapshot deserialize_snapshot(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

// Loads either a snapshot file or an HTML page (detected by content), then
// applies the optional layout sidecar and screenshot.
PageSnapshot load_page(const std::filesystem::path& path, const std::filesystem::path& layout = {},
                       const std::filesystem::path& screenshot = {});

}  // namespace uirepair
