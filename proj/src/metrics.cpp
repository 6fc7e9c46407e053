#include "exwarp/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "exwarp/errors.hpp"

namespace exwarp {

namespace {

void require_same_size(const Frame& a, const Frame& b) {
  if (!a.same_size(b))
    throw DimensionError("frames differ in size: " + std::to_string(a.width()) + "x" +
                         std::to_string(a.height()) + " vs " + std::to_string(b.width()) + "x" +
                         std::to_string(b.height()));
}

std::array<double, kSsimWindow> gaussian_taps() {
  std::array<double, kSsimWindow> taps{};
  double sum = 0.0;
  for (int i = 0; i < kSsimWindow; ++i) {
    const double d = i - kSsimWindow / 2;
    taps[static_cast<std::size_t>(i)] = std::exp(-d * d / (2.0 * kSsimSigma * kSsimSigma));
    sum += taps[static_cast<std::size_t>(i)];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Separable valid-mode filter: (w - 10) x (h - 10) output.
std::vector<double> filter_valid(const std::vector<double>& img, int w, int h,
                                 const std::array<double, kSsimWindow>& taps) {
  const int ow = w - kSsimWindow + 1;
  const int oh = h - kSsimWindow + 1;
  std::vector<double> rows(static_cast<std::size_t>(ow) * h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k)
        acc += taps[static_cast<std::size_t>(k)] * img[static_cast<std::size_t>(y) * w + x + k];
      rows[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  std::vector<double> out(static_cast<std::size_t>(ow) * oh);
  for (int y = 0; y < oh; ++y)
    for (int x = 0; x < ow; ++x) {
      double acc = 0.0;
      for (int k = 0; k < kSsimWindow; ++k)
        acc += taps[static_cast<std::size_t>(k)] * rows[static_cast<std::size_t>(y + k) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = acc;
    }
  return out;
}

}  // namespace

double mse(const Frame& a, const Frame& b) {
  require_same_size(a, b);
  const auto pa = a.bytes();
  const auto pb = b.bytes();
  double sum = 0.0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    const double d = static_cast<double>(pa[i]) - static_cast<double>(pb[i]);
    sum += d * d;
  }
  return pa.empty() ? 0.0 : sum / static_cast<double>(pa.size());
}

double psnr(const Frame& a, const Frame& b) {
  const double e = mse(a, b);
  if (e == 0.0) return kPsnrCeiling;
  return std::min(kPsnrCeiling, 10.0 * std::log10(255.0 * 255.0 / e));
}

double ssim(const Frame& a, const Frame& b) {
  require_same_size(a, b);
  const int w = a.width();
  const int h = a.height();
  if (w < kSsimWindow || h < kSsimWindow)
    throw DimensionError("SSIM needs frames at least 11x11");
  const auto taps = gaussian_taps();
  const double c1 = (kSsimK1 * 255.0) * (kSsimK1 * 255.0);
  const double c2 = (kSsimK2 * 255.0) * (kSsimK2 * 255.0);
  const auto n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);

  double total = 0.0;
  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (int c = 0; c < 3; ++c) {
    for (std::size_t i = 0; i < n; ++i) {
      x[i] = a.pixels[i][static_cast<std::size_t>(c)];
      y[i] = b.pixels[i][static_cast<std::size_t>(c)];
      xx[i] = x[i] * x[i];
      yy[i] = y[i] * y[i];
      xy[i] = x[i] * y[i];
    }
    const auto mx = filter_valid(x, w, h, taps);
    const auto my = filter_valid(y, w, h, taps);
    const auto sxx = filter_valid(xx, w, h, taps);
    const auto syy = filter_valid(yy, w, h, taps);
    const auto sxy = filter_valid(xy, w, h, taps);
    double channel_sum = 0.0;
    for (std::size_t i = 0; i < mx.size(); ++i) {
      const double vx = sxx[i] - mx[i] * mx[i];
      const double vy = syy[i] - my[i] * my[i];
      const double cov = sxy[i] - mx[i] * my[i];
      channel_sum += ((2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2)) /
                     ((mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2));
    }
    total += channel_sum / static_cast<double>(mx.size());
  }
  return total / 3.0;
}

QualityPair quality(const Frame& a, const Frame& b) { return {psnr(a, b), ssim(a, b)}; }

}  // namespace exwarp
