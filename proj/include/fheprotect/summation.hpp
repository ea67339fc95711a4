#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

/// Smallest power of two >= n (1 for n <= 1).
std::size_t next_pow2(std::size_t n);
/// ceil(log2 n), 0 for n <= 1.
int ceil_log2(std::size_t n);

/// Running-sum rotation: n-1 rotations by one, each followed by an add.
/// Slot 0 ends up holding the sum of the first n slots. Every slot i < n holds
/// sum(c[i .. i+n-1]) over the full-capacity cycle, which equals the total
/// only when the data repeats with period n (e.g. n == capacity).
SlotVector naive_add_all(const SlotVector& c, std::size_t n);

/// Fold and Add: rotations by 2^i for i = ceil(log2 n)-1 down to 0.
/// Requires slots [n, next_pow2(n)) to be zero; only slot 0 is guaranteed.
SlotVector fold_add_all(const SlotVector& c, std::size_t n);

/// Sum as the DC coefficient of a DFT, evaluated as a homomorphic linear
/// transform with the diagonal method: sum_k diag_k * rot(c, k). For the
/// DFT's first row every diagonal is the slot-0 indicator, so this costs
/// n-1 rotations, n plaintext multiplications and one level.
SlotVector dft_sum(const SlotVector& c, std::size_t n);

/// Diagonal-method matrix-vector product y = M x for an n x n matrix given
/// by its generalized diagonals diag_k[i] = M[i][(i + k) mod n]. Zero
/// diagonals are skipped. Each diagonal must have `capacity` entries.
SlotVector linear_transform(const SlotVector& c, std::span<const std::vector<double>> diagonals);

enum class SumMethod { Naive, Dft, Fold };
std::string_view to_string(SumMethod m);

struct SumBenchRow {
  std::size_t n = 0;
  SumMethod method = SumMethod::Naive;
  std::uint64_t rotations = 0;
  std::uint64_t mults = 0;  // ciphertext and plaintext multiplications
  std::chrono::nanoseconds wall_time{0};
  double slot0 = 0.0;       // decrypted result, kept for checking
};

struct BenchOptions {
  int repeats = 5;  // wall time is the minimum over repeats
  std::uint64_t seed = 1;
};

std::vector<SumBenchRow> bench_summation(std::span<const std::size_t> sizes,
                                         const EncryptionContext& ctx, BenchOptions opts = {});

/// Header `n,method,rotations,mults,wall_ns`.
void write_bench_csv(std::ostream& os, std::span<const SumBenchRow> rows, bool include_wall = true);

}  // namespace fheprotect
