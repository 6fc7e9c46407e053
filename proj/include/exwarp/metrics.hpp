#pragma once

#include "exwarp/grid.hpp"

namespace exwarp {

/// PSNR of identical frames, and the ceiling for every other pair.
inline constexpr double kPsnrCeiling = 100.0;

struct QualityPair {
  double psnr = 0.0;
  double ssim = 0.0;
};

/// 10 log10(255^2 / MSE) over all channels; MSE = 0 maps to 100 dB.
double psnr(const Frame& a, const Frame& b);

/// Mean squared error over all channels, in double precision.
double mse(const Frame& a, const Frame& b);

inline constexpr int kSsimWindow = 11;
inline constexpr double kSsimSigma = 1.5;
inline constexpr double kSsimK1 = 0.01;
inline constexpr double kSsimK2 = 0.03;

/// Single-scale SSIM with an 11x11 Gaussian window (sigma 1.5) over valid window positions,
/// computed per RGB channel and averaged.
double ssim(const Frame& a, const Frame& b);

QualityPair quality(const Frame& a, const Frame& b);

}  // namespace exwarp
