#pragma once

#include <cstddef>
#include <span>

#include "fheprotect/approx.hpp"
#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

/// a.b / (|a| |b|). Throws ZeroVector if either input is all zeros.
double cosine_plain(std::span<const double> a, std::span<const double> b);

/// Public constants that bring the encrypted numerator into [-1, 1] and the
/// denominator into (0, 1] before the inverse square root.
struct NormalizationPlan {
  double c_bound = 1.0;     ///< bound on |a.b|
  double d_bound = 1.0;     ///< bound on |a|^2 |b|^2
  double correction = 1.0;  ///< c_bound / sqrt(d_bound), undoes the scaling

  /// Plan for inputs whose L2 norms are at most `norm_bound`.
  static NormalizationPlan from_norm_bound(double norm_bound);
  /// Plan for a pair with |a| <= bound_a and |b| <= bound_b.
  static NormalizationPlan from_norm_bounds(double bound_a, double bound_b);
};

/// From a bound B on every element's magnitude over n elements:
/// c_bound = n B^2, d_bound = (n B^2)^2.
NormalizationPlan make_normalization_plan(double templates_bound, std::size_t n);

/// Smallest power of two >= norm. Publishing this bound reveals only the
/// octave of the norm, and for a pair of such bounds the scaled denominator
/// lies in (1/16, 1].
double octave_norm_bound(double norm);

/// |a|^2 |b|^2 / d_bound, the value fed to the inverse square root.
double scaled_denominator(std::span<const double> a, std::span<const double> b,
                          const NormalizationPlan& plan);

/// Plaintext enrollment-time check: throws DomainViolation if the scaled
/// denominator of (a, b) falls outside approx.domain.
void check_denominator_domain(std::span<const double> a, std::span<const double> b,
                              const NormalizationPlan& plan, const PolyApprox& approx);

/// Worst-case gap between the encrypted and plaintext score:
/// 2 * max_rel_err + 1e-6.
double cosine_tolerance(const PolyApprox& approx);

/// Encrypted cosine similarity of two ciphertexts each holding n values
/// (slots beyond next_pow2(n) zero). The score is in slot 0.
/// Consumes approx.degree + 5 levels above the deeper input.
SlotVector cosine_encrypted(const SlotVector& c1, const SlotVector& c2, std::size_t n,
                            const NormalizationPlan& plan, const PolyApprox& approx);

}  // namespace fheprotect
