#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include "uirepair/error.h"
#include "uirepair/matchers.h"

namespace uirepair {
namespace {

// Variances below this (per pixel, intensities in [0, 1]) count as flat.
constexpr double kFlatVariance = 1e-12;
constexpr double kDirectWorkLimit = 4e7;

// FFTW's planner is not reentrant.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

struct Template {
  std::vector<double> centered;
  double norm_sq = 0.0;
};

Template center_template(const GrayImage& templ) {
  const auto n = static_cast<double>(templ.pixels().size());
  double mean = 0.0;
  for (double v : templ.pixels()) mean += v;
  mean /= n;
  Template t;
  t.centered.reserve(templ.pixels().size());
  for (double v : templ.pixels()) {
    t.centered.push_back(v - mean);
    t.norm_sq += (v - mean) * (v - mean);
  }
  if (t.norm_sq <= kFlatVariance * n) throw Error(ErrorCode::kZeroVarianceTemplate, "template is uniform");
  return t;
}

double finish_score(double cross, double template_norm_sq, double window_norm_sq, double n) {
  if (window_norm_sq <= kFlatVariance * n) return 0.0;
  return std::clamp(cross / std::sqrt(template_norm_sq * window_norm_sq), -1.0, 1.0);
}

void correlate_direct(const Template& t, std::size_t th, std::size_t tw, const GrayImage& image, GrayImage& out) {
  const auto n = static_cast<double>(th * tw);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      double mean = 0.0;
      for (std::size_t i = 0; i < th; ++i) {
        for (std::size_t j = 0; j < tw; ++j) mean += image.at(r + i, c + j);
      }
      mean /= n;
      double cross = 0.0;
      double window_sq = 0.0;
      for (std::size_t i = 0; i < th; ++i) {
        for (std::size_t j = 0; j < tw; ++j) {
          const double w = image.at(r + i, c + j) - mean;
          cross += t.centered[i * tw + j] * w;
          window_sq += w * w;
        }
      }
      out.at(r, c) = finish_score(cross, t.norm_sq, window_sq, n);
    }
  }
}

void correlate_fft(const Template& t, std::size_t th, std::size_t tw, const GrayImage& image, GrayImage& out) {
  const std::size_t rows = image.rows();
  const std::size_t cols = image.cols();
  const std::size_t half = cols / 2 + 1;
  const auto n = static_cast<double>(th * tw);

  double* spatial = fftw_alloc_real(rows * cols);
  fftw_complex* image_freq = fftw_alloc_complex(rows * half);
  fftw_complex* templ_freq = fftw_alloc_complex(rows * half);
  fftw_plan image_plan;
  fftw_plan templ_plan;
  fftw_plan inverse_plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    const int r = static_cast<int>(rows);
    const int c = static_cast<int>(cols);
    image_plan = fftw_plan_dft_r2c_2d(r, c, spatial, image_freq, FFTW_ESTIMATE);
    templ_plan = fftw_plan_dft_r2c_2d(r, c, spatial, templ_freq, FFTW_ESTIMATE);
    inverse_plan = fftw_plan_dft_c2r_2d(r, c, image_freq, spatial, FFTW_ESTIMATE);
  }

  std::copy(image.pixels().begin(), image.pixels().end(), spatial);
  fftw_execute(image_plan);
  std::fill(spatial, spatial + rows * cols, 0.0);
  for (std::size_t i = 0; i < th; ++i) {
    for (std::size_t j = 0; j < tw; ++j) spatial[i * cols + j] = t.centered[i * tw + j];
  }
  fftw_execute(templ_plan);
  // Cross-correlation: F(image) * conj(F(template)).
  for (std::size_t k = 0; k < rows * half; ++k) {
    const std::complex<double> a(image_freq[k][0], image_freq[k][1]);
    const std::complex<double> b(templ_freq[k][0], templ_freq[k][1]);
    const std::complex<double> p = a * std::conj(b);
    image_freq[k][0] = p.real();
    image_freq[k][1] = p.imag();
  }
  fftw_execute(inverse_plan);
  const double scale = 1.0 / static_cast<double>(rows * cols);

  // Summed-area tables for per-window sum and sum of squares.
  std::vector<long double> sum((rows + 1) * (cols + 1), 0.0L);
  std::vector<long double> sum_sq((rows + 1) * (cols + 1), 0.0L);
  const std::size_t stride = cols + 1;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const long double v = image.at(r, c);
      sum[(r + 1) * stride + c + 1] = v + sum[r * stride + c + 1] + sum[(r + 1) * stride + c] - sum[r * stride + c];
      sum_sq[(r + 1) * stride + c + 1] =
          v * v + sum_sq[r * stride + c + 1] + sum_sq[(r + 1) * stride + c] - sum_sq[r * stride + c];
    }
  }
  const auto box = [&](const std::vector<long double>& table, std::size_t r, std::size_t c) {
    return table[(r + th) * stride + c + tw] - table[r * stride + c + tw] - table[(r + th) * stride + c] +
           table[r * stride + c];
  };
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) {
      const long double s = box(sum, r, c);
      const long double window_sq = box(sum_sq, r, c) - s * s / static_cast<long double>(n);
      const double cross = spatial[r * cols + c] * scale;
      out.at(r, c) = finish_score(cross, t.norm_sq, static_cast<double>(std::max(window_sq, 0.0L)), n);
    }
  }

  {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(image_plan);
    fftw_destroy_plan(templ_plan);
    fftw_destroy_plan(inverse_plan);
  }
  fftw_free(spatial);
  fftw_free(image_freq);
  fftw_free(templ_freq);
}

}  // namespace

NccResult ncc_match(const GrayImage& templ, const GrayImage& image, NccMethod method) {
  if (templ.empty() || image.empty()) throw Error(ErrorCode::kInvalidArgument, "empty image passed to NCC");
  if (templ.rows() > image.rows() || templ.cols() > image.cols()) {
    throw Error(ErrorCode::kTemplateLargerThanImage, "template exceeds image in at least one dimension");
  }
  const Template t = center_template(templ);
  const std::size_t th = templ.rows();
  const std::size_t tw = templ.cols();
  NccResult result;
  result.score_map = GrayImage(image.rows() - th + 1, image.cols() - tw + 1);
  if (method == NccMethod::kAuto) {
    const double work = static_cast<double>(result.score_map.pixels().size()) * static_cast<double>(th * tw);
    method = work > kDirectWorkLimit ? NccMethod::kFft : NccMethod::kDirect;
  }
  if (method == NccMethod::kFft) {
    correlate_fft(t, th, tw, image, result.score_map);
  } else {
    correlate_direct(t, th, tw, image, result.score_map);
  }
  // First maximum in row-major order.
  result.peak_score = -2.0;
  for (std::size_t r = 0; r < result.score_map.rows(); ++r) {
    for (std::size_t c = 0; c < result.score_map.cols(); ++c) {
      if (result.score_map.at(r, c) > result.peak_score) {
        result.peak_score = result.score_map.at(r, c);
        result.peak_row = r;
        result.peak_col = c;
      }
    }
  }
  return result;
}

}  // namespace uirepair
