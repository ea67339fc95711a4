#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

struct Interval {
  double lo = 1e-3;
  double hi = 1.0;
};

struct FitReport {
  double max_rel_err = 0.0;
  double mean_rel_err = 0.0;
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
};

/// Polynomial approximant of 1/sqrt(x) on a sub-unit interval. Coefficients
/// are in ascending powers. Evaluating outside `domain` is allowed but
/// carries no accuracy guarantee.
struct PolyApprox {
  int degree = 0;
  std::vector<double> coeffs;
  Interval domain;
  FitReport fit_report;
};

/// Range of the scaled cosine denominator when both norm bounds are octave
/// bounds (see octave_norm_bound).
inline constexpr Interval kOctavePairDomain{1.0 / 16.0, 1.0};

inline constexpr std::size_t kDefaultReportSamples = 2000;
inline constexpr std::uint64_t kDefaultReportSeed = 20240601;

/// Relative-error weighted least squares on Chebyshev nodes of `domain`:
/// minimizes sum_k ((p(x_k) - 1/sqrt(x_k)) * sqrt(x_k))^2. The fit report is
/// filled by rel_error_report with the default sample count and seed.
/// Throws IllConditioned when the weighted Vandermonde system is rank
/// deficient at the requested degree.
PolyApprox fit_inv_sqrt(int degree, Interval domain, std::size_t n_nodes);

/// Horner evaluation.
double eval_poly_plain(double x, const PolyApprox& approx);

/// Slot-wise Horner: the leading step is a plaintext multiply and the rest
/// are ciphertext multiplies, so the result sits exactly `degree` levels
/// above the input. Coefficients enter through plaintext adds.
SlotVector eval_poly_encrypted(const SlotVector& x, const PolyApprox& approx);

/// Max and mean of |p(x) - 1/sqrt(x)| * sqrt(x) over n_samples uniform draws
/// from the approximant's domain.
FitReport rel_error_report(const PolyApprox& approx, std::size_t n_samples, std::uint64_t seed);

/// Rows of (x, p(x), rel_err) on a uniform grid, for plotting.
struct ApproxCurvePoint {
  double x;
  double px;
  double rel_err;
};
std::vector<ApproxCurvePoint> approx_curve(const PolyApprox& approx, std::size_t n_points);

}  // namespace fheprotect
