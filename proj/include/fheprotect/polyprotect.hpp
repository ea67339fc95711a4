#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

/// User-specific PolyProtect parameters.
struct PolyProtectParams {
  int m = 5;        ///< terms per polynomial (window width)
  int overlap = 0;  ///< elements shared by consecutive windows, in [0, m-1]
  int c_range = 50; ///< coefficients are drawn from the nonzero integers in [-c_range, c_range]
  std::vector<int> coeffs;
  std::vector<int> exps;
  std::uint64_t seed = 0;
  std::string params_id;

  int stride() const noexcept { return m - overlap; }
  /// Throws InvalidParams when an invariant does not hold.
  void validate() const;
};

/// Stable identifier derived from (m, overlap, coeffs, exps).
std::string compute_params_id(const PolyProtectParams& p);

/// Coefficients: m distinct nonzero integers sampled without replacement from
/// [-c_range, c_range]. Exponents: a random permutation of {1..m}.
/// Deterministic in `seed`.
PolyProtectParams gen_params(int m, int overlap, int c_range, std::uint64_t seed);

/// k = ceil((n - m) / stride) + 1: windows over the tail-padded input.
std::size_t protected_length(std::size_t n, const PolyProtectParams& params);

/// Protected template in one of two forms. Plain form holds one value per
/// window. Encrypted form holds one ciphertext per window whose first m slots
/// all carry the mapped value.
struct ProtectedTemplate {
  std::string params_id;
  std::vector<double> values;
  std::vector<SlotVector> windows;

  bool encrypted() const noexcept { return !windows.empty(); }
  std::size_t k() const noexcept { return encrypted() ? windows.size() : values.size(); }
};

/// The m-wide windows (stride m - overlap) over v, zero-padded at the tail so
/// the last window is full.
std::vector<PlainVector> chunk_embedding(std::span<const double> v, const PolyProtectParams& params);

ProtectedTemplate protect_plain(std::span<const double> v, const PolyProtectParams& params);

/// Encrypted PolyProtect over windows produced by encrypting chunk_embedding.
///
/// Per window: the powers x^e are built by square-and-multiply on the whole
/// window, x^{e_i} is isolated and scaled in one plaintext multiply by
/// c_i * onehot_i, the terms are added, and the sum is spread over the first
/// m slots by a wrap copy followed by Fold and Add over next_pow2(m) slots.
/// Depth consumed: ceil(log2(max exp)) + 1.
ProtectedTemplate protect_encrypted(std::span<const SlotVector> windows,
                                    const PolyProtectParams& params, const EncryptionContext& ctx);

/// Encrypts every chunk of v and applies protect_encrypted.
ProtectedTemplate protect_embedding_encrypted(std::span<const double> v,
                                              const PolyProtectParams& params,
                                              const EncryptionContext& ctx);

/// Slot 0 of every window, i.e. the plain template.
std::vector<double> decrypt_template(const ProtectedTemplate& t, const EncryptionContext& ctx);

/// Gathers an encrypted template into one ciphertext with p_j in slot j and
/// zeros elsewhere. Costs k plaintext multiplies (one level) and k-1 rotations.
SlotVector pack_template(const ProtectedTemplate& t);

}  // namespace fheprotect
