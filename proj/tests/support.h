#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "uirepair/dom_snapshot.h"
#include "uirepair/error.h"
#include "uirepair/matchers.h"

namespace testsupport {

inline std::filesystem::path data_path(const std::string& relative) {
  return std::filesystem::path(UIREPAIR_TEST_DATA) / relative;
}

// The code of the Error thrown by f, or nullopt when f returns normally.
inline std::optional<uirepair::ErrorCode> code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const uirepair::Error& e) {
    return e.code();
  }
  return std::nullopt;
}

inline uirepair::WebElementRecord element(std::int64_t id, std::string xpath, std::string text = {},
                                          std::string tag = "div") {
  uirepair::WebElementRecord r;
  r.numericId = id;
  r.xpath = std::move(xpath);
  r.text = std::move(text);
  r.tagName = std::move(tag);
  r.isLeaf = true;
  return r;
}

// Full-matrix Levenshtein, written independently of the library.
inline std::size_t oracle_levenshtein(const std::string& a, const std::string& b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1)});
    }
  }
  return d[a.size()][b.size()];
}

inline std::string random_xpath(std::mt19937_64& rng) {
  static const char* tags[] = {"div", "span", "form", "table", "tr", "td", "a", "input", "ul", "li"};
  std::uniform_int_distribution<int> depth(2, 7);
  std::uniform_int_distribution<int> tag(0, 9);
  std::uniform_int_distribution<int> index(1, 4);
  std::string x = "/html[1]/body[1]";
  for (int i = depth(rng); i > 0; --i) x += "/" + std::string(tags[tag(rng)]) + "[" + std::to_string(index(rng)) + "]";
  return x;
}

inline std::string random_word(std::mt19937_64& rng, std::size_t max_len = 10) {
  std::uniform_int_distribution<std::size_t> len(1, max_len);
  std::uniform_int_distribution<int> ch('a', 'z');
  std::string s;
  for (std::size_t i = len(rng); i > 0; --i) s += static_cast<char>(ch(rng));
  return s;
}

inline uirepair::PageSnapshot random_page(std::mt19937_64& rng, std::size_t n) {
  uirepair::PageSnapshot page;
  page.label = "random";
  std::uniform_int_distribution<int> coord(0, 1200);
  for (std::size_t i = 0; i < n; ++i) {
    auto r = element(static_cast<std::int64_t>(i), random_xpath(rng), random_word(rng));
    r.x = coord(rng);
    r.y = coord(rng);
    r.width = coord(rng) / 10 + 1;
    r.height = coord(rng) / 20 + 1;
    page.elements.push_back(std::move(r));
  }
  return page;
}

inline uirepair::GrayImage random_image(std::mt19937_64& rng, std::size_t rows, std::size_t cols) {
  std::uniform_real_distribution<double> v(0.0, 1.0);
  uirepair::GrayImage img(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) img.at(r, c) = v(rng);
  }
  return img;
}

// Zero-normalized cross-correlation by explicit double loops.
inline uirepair::GrayImage oracle_ncc(const uirepair::GrayImage& t, const uirepair::GrayImage& img) {
  const std::size_t th = t.rows(), tw = t.cols();
  const double n = static_cast<double>(th * tw);
  double tmean = 0.0;
  for (std::size_t i = 0; i < th; ++i)
    for (std::size_t j = 0; j < tw; ++j) tmean += t.at(i, j);
  tmean /= n;
  double tvar = 0.0;
  for (std::size_t i = 0; i < th; ++i)
    for (std::size_t j = 0; j < tw; ++j) tvar += (t.at(i, j) - tmean) * (t.at(i, j) - tmean);
  uirepair::GrayImage out(img.rows() - th + 1, img.cols() - tw + 1);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double wmean = 0.0;
      for (std::size_t i = 0; i < th; ++i)
        for (std::size_t j = 0; j < tw; ++j) wmean += img.at(r + i, c + j);
      wmean /= n;
      double cross = 0.0, wvar = 0.0;
      for (std::size_t i = 0; i < th; ++i) {
        for (std::size_t j = 0; j < tw; ++j) {
          const double w = img.at(r + i, c + j) - wmean;
          cross += (t.at(i, j) - tmean) * w;
          wvar += w * w;
        }
      }
      out.at(r, c) = wvar <= 1e-12 * n ? 0.0 : std::clamp(cross / std::sqrt(tvar * wvar), -1.0, 1.0);
    }
  }
  return out;
}

// Pearson correlation with the boolean mapped to 0/1.
inline double oracle_pearson(const std::vector<double>& x, const std::vector<bool>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i] ? 1.0 : 0.0;
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dy = (y[i] ? 1.0 : 0.0) - my;
    sxy += (x[i] - mx) * dy;
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += dy * dy;
  }
  return sxy / std::sqrt(sxx * syy);
}

// A statement assembled from known pieces, so the expected repair can be
// spliced together without the library's spans.
struct GeneratedStatement {
  std::string before;    // up to and including "By."
  std::string strategy;
  std::string between;   // "(" up to the literal
  std::string literal;   // quotes included
  std::string after;

  std::string text() const { return before + strategy + between + literal + after; }
};

inline std::string quote_java(const std::string& v) {
  std::string out = "\"";
  for (char c : v) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

inline GeneratedStatement random_statement(std::mt19937_64& rng) {
  static const char* strategies[] = {"id", "name", "className", "linkText", "cssSelector", "xpath"};
  std::uniform_int_distribution<int> pick_strategy(0, 5);
  std::uniform_int_distribution<int> shape(0, 7);
  GeneratedStatement g;
  g.strategy = strategies[pick_strategy(rng)];
  g.between = "(";
  std::string value = g.strategy == std::string("xpath") ? "//*[@id=\"" + random_word(rng) + "\"]/div[2]" : random_word(rng);
  g.literal = quote_java(value);
  const std::string arg = quote_java(random_word(rng) + " " + random_word(rng));
  const std::string locate = "driver.findElement(By.";
  switch (shape(rng)) {
    case 0:
      g.before = locate;
      g.after = ")).click();";
      break;
    case 1:
      g.before = locate;
      g.after = ")).sendKeys(" + arg + ");";
      break;
    case 2:
      g.before = "WebElement " + random_word(rng, 6) + " = " + locate;
      g.after = "));";
      break;
    case 3:
      g.before = "assertEquals(" + arg + ", " + locate;
      g.after = ")).getText());";
      break;
    case 4:
      g.before = "Assert.assertTrue(" + locate;
      g.after = ")).getText().equals(" + arg + "));";
      break;
    case 5:
      g.before = "assertFalse(" + locate;
      g.after = ")).isDisplayed());";
      break;
    case 6:
      g.before = "driver.findElement( By.";
      g.between = " ( ";
      g.after = " ) ).clear() ;";
      break;
    default:
      g.before = "String value = " + locate;
      g.after = ")).getAttribute(\"value\");";
      break;
  }
  return g;
}

}  // namespace testsupport
