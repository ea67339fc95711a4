#include "fheprotect/summation.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <optional>
#include <ostream>
#include <random>

#include "fheprotect/error.hpp"

namespace fheprotect {

std::size_t next_pow2(std::size_t n) { return n <= 1 ? 1 : std::bit_ceil(n); }

int ceil_log2(std::size_t n) {
  return n <= 1 ? 0 : static_cast<int>(std::bit_width(n - 1));
}

namespace {

void check_window(const SlotVector& c, std::size_t n, const char* op) {
  if (n == 0) raise(ErrorKind::InvalidArgument, std::string(op) + ": n must be >= 1");
  if (n > c.capacity()) {
    raise(ErrorKind::CapacityExceeded, std::string(op) + ": n = " + std::to_string(n) +
                                           " exceeds capacity " + std::to_string(c.capacity()));
  }
}

}  // namespace

SlotVector naive_add_all(const SlotVector& c, std::size_t n) {
  check_window(c, n, "naive_add_all");
  SlotVector acc = c;
  SlotVector shifted = c;
  for (std::size_t step = 1; step < n; ++step) {
    shifted = rotate_left(shifted, 1);
    acc = add(acc, shifted);
  }
  return acc;
}

SlotVector fold_add_all(const SlotVector& c, std::size_t n) {
  check_window(c, n, "fold_add_all");
  if (next_pow2(n) > c.capacity()) {
    raise(ErrorKind::CapacityExceeded, "fold_add_all: padded window exceeds capacity");
  }
  SlotVector acc = c;
  // Inclusive of i = 0: the final rotation by one completes the sum.
  for (int i = ceil_log2(n) - 1; i >= 0; --i) {
    acc = add(acc, rotate_left(acc, std::size_t{1} << i));
  }
  return acc;
}

SlotVector linear_transform(const SlotVector& c, std::span<const std::vector<double>> diagonals) {
  if (diagonals.empty()) raise(ErrorKind::InvalidArgument, "linear_transform: no diagonals");
  std::optional<SlotVector> acc;
  for (std::size_t k = 0; k < diagonals.size(); ++k) {
    const auto& diag = diagonals[k];
    if (diag.size() != c.capacity()) {
      raise(ErrorKind::DimensionMismatch, "linear_transform: diagonal length != capacity");
    }
    if (std::all_of(diag.begin(), diag.end(), [](double v) { return v == 0.0; })) continue;
    SlotVector term = mult_plain(k == 0 ? c : rotate_left(c, k), diag);
    acc = acc ? add(*acc, term) : std::move(term);
  }
  if (!acc) return mult_plain(c, std::vector<double>{0.0});
  return *acc;
}

SlotVector dft_sum(const SlotVector& c, std::size_t n) {
  check_window(c, n, "dft_sum");
  // Row 0 of the DFT matrix is all ones, other rows are dropped: every
  // generalized diagonal is then e_0.
  std::vector<double> e0(c.capacity(), 0.0);
  e0[0] = 1.0;
  std::vector<std::vector<double>> diagonals(n, e0);
  return linear_transform(c, diagonals);
}

std::string_view to_string(SumMethod m) {
  switch (m) {
    case SumMethod::Naive: return "naive";
    case SumMethod::Dft: return "dft";
    case SumMethod::Fold: return "fold";
  }
  return "?";
}

std::vector<SumBenchRow> bench_summation(std::span<const std::size_t> sizes,
                                         const EncryptionContext& ctx, BenchOptions opts) {
  std::mt19937_64 rng(opts.seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<SumBenchRow> rows;
  for (std::size_t n : sizes) {
    if (n == 0 || n > ctx.slot_capacity()) {
      raise(ErrorKind::CapacityExceeded, "bench size " + std::to_string(n) + " exceeds capacity");
    }
    PlainVector data(n);
    for (double& v : data) v = dist(rng);
    const SlotVector c = encrypt(data, ctx);

    for (SumMethod method : {SumMethod::Naive, SumMethod::Dft, SumMethod::Fold}) {
      auto run = [&] {
        switch (method) {
          case SumMethod::Naive: return naive_add_all(c, n);
          case SumMethod::Dft: return dft_sum(c, n);
          case SumMethod::Fold: return fold_add_all(c, n);
        }
        return c;
      };
      auto best = std::chrono::nanoseconds::max();
      std::optional<SlotVector> result;
      for (int r = 0; r < std::max(1, opts.repeats); ++r) {
        const auto t0 = std::chrono::steady_clock::now();
        result = run();
        const auto t1 = std::chrono::steady_clock::now();
        best = std::min(best, std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0));
      }
      const OpCounts counts = result->op_counts();
      rows.push_back(SumBenchRow{n, method, counts.rotations, counts.mults + counts.plain_mults,
                                 best, decrypt_all_slots(*result, ctx)[0]});
    }
  }
  return rows;
}

void write_bench_csv(std::ostream& os, std::span<const SumBenchRow> rows, bool include_wall) {
  os << "n,method,rotations,mults,wall_ns\n";
  for (const auto& r : rows) {
    os << r.n << ',' << to_string(r.method) << ',' << r.rotations << ',' << r.mults << ',';
    if (include_wall) os << r.wall_time.count();
    os << '\n';
  }
}

}  // namespace fheprotect
