#include "fheprotect/polyprotect.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <sstream>

#include "fheprotect/error.hpp"
#include "fheprotect/summation.hpp"

namespace fheprotect {

namespace {

// Unbiased draw from [0, bound) with a portable algorithm, so parameter sets
// do not depend on the standard library's distribution implementation.
std::uint64_t bounded(std::mt19937_64& rng, std::uint64_t bound) {
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % bound;
  std::uint64_t r;
  do {
    r = rng();
  } while (r >= limit);
  return r % bound;
}

template <typename T>
void partial_shuffle(std::vector<T>& pool, std::size_t count, std::mt19937_64& rng) {
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + bounded(rng, pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
}

double ipow(double x, int e) {
  double r = 1.0;
  for (int i = 0; i < e; ++i) r *= x;
  return r;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// x^e for every requested exponent via square-and-multiply with memoization;
// x^e sits at depth ceil(log2 e) above x.
class PowerLadder {
 public:
  explicit PowerLadder(SlotVector x) { cache_.emplace(1, std::move(x)); }

  const SlotVector& get(int e) {
    if (auto it = cache_.find(e); it != cache_.end()) return it->second;
    const int hi = std::bit_floor(static_cast<unsigned>(e));
    SlotVector v = hi == e ? mult(get(e / 2), get(e / 2)) : mult(get(hi), get(e - hi));
    return cache_.emplace(e, std::move(v)).first->second;
  }

 private:
  std::map<int, SlotVector> cache_;
};

}  // namespace

void PolyProtectParams::validate() const {
  if (m < 2) raise(ErrorKind::InvalidParams, "m must be >= 2");
  if (overlap < 0 || overlap > m - 1) {
    raise(ErrorKind::InvalidParams, "overlap must be in [0, m-1], got " + std::to_string(overlap));
  }
  if (static_cast<int>(coeffs.size()) != m || static_cast<int>(exps.size()) != m) {
    raise(ErrorKind::InvalidParams, "coeffs and exps must both have m entries");
  }
  if (std::set<int>(coeffs.begin(), coeffs.end()).size() != coeffs.size() ||
      std::count(coeffs.begin(), coeffs.end(), 0) != 0) {
    raise(ErrorKind::InvalidParams, "coefficients must be nonzero and distinct");
  }
  if (std::set<int>(exps.begin(), exps.end()).size() != exps.size() ||
      std::any_of(exps.begin(), exps.end(), [](int e) { return e <= 0; })) {
    raise(ErrorKind::InvalidParams, "exponents must be positive and distinct");
  }
}

std::string compute_params_id(const PolyProtectParams& p) {
  std::ostringstream os;
  os << p.m << '|' << p.overlap << '|';
  for (int c : p.coeffs) os << c << ',';
  os << '|';
  for (int e : p.exps) os << e << ',';
  std::ostringstream id;
  id << "pp-" << std::hex << fnv1a(os.str());
  return id.str();
}

PolyProtectParams gen_params(int m, int overlap, int c_range, std::uint64_t seed) {
  if (m < 2) raise(ErrorKind::InvalidParams, "m must be >= 2");
  if (overlap < 0 || overlap > m - 1) {
    raise(ErrorKind::InvalidParams, "overlap must be in [0, m-1], got " + std::to_string(overlap));
  }
  // 2 * c_range nonzero integers are available.
  if (c_range < 1 || 2 * c_range < m) {
    raise(ErrorKind::InfeasibleParams, "c_range " + std::to_string(c_range) +
                                           " admits fewer than m = " + std::to_string(m) +
                                           " distinct nonzero coefficients");
  }
  std::mt19937_64 rng(seed);

  std::vector<int> pool;
  pool.reserve(2 * static_cast<std::size_t>(c_range));
  for (int c = -c_range; c <= c_range; ++c) {
    if (c != 0) pool.push_back(c);
  }
  partial_shuffle(pool, static_cast<std::size_t>(m), rng);

  std::vector<int> exps(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) exps[static_cast<std::size_t>(i)] = i + 1;
  partial_shuffle(exps, exps.size(), rng);

  PolyProtectParams p;
  p.m = m;
  p.overlap = overlap;
  p.c_range = c_range;
  p.coeffs.assign(pool.begin(), pool.begin() + m);
  p.exps = std::move(exps);
  p.seed = seed;
  p.params_id = compute_params_id(p);
  return p;
}

std::size_t protected_length(std::size_t n, const PolyProtectParams& params) {
  const auto m = static_cast<std::size_t>(params.m);
  if (n < m) {
    raise(ErrorKind::InputTooShort,
          "input of length " + std::to_string(n) + " is shorter than m = " + std::to_string(m));
  }
  const auto s = static_cast<std::size_t>(params.stride());
  return (n - m + s - 1) / s + 1;
}

std::vector<PlainVector> chunk_embedding(std::span<const double> v, const PolyProtectParams& params) {
  params.validate();
  const std::size_t k = protected_length(v.size(), params);
  const auto m = static_cast<std::size_t>(params.m);
  const auto s = static_cast<std::size_t>(params.stride());
  std::vector<PlainVector> windows(k, PlainVector(m, 0.0));
  for (std::size_t j = 0; j < k; ++j) {
    for (std::size_t i = 0; i < m && j * s + i < v.size(); ++i) windows[j][i] = v[j * s + i];
  }
  return windows;
}

ProtectedTemplate protect_plain(std::span<const double> v, const PolyProtectParams& params) {
  ProtectedTemplate t;
  t.params_id = params.params_id;
  for (const auto& w : chunk_embedding(v, params)) {
    double p = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) p += params.coeffs[i] * ipow(w[i], params.exps[i]);
    t.values.push_back(p);
  }
  return t;
}

ProtectedTemplate protect_encrypted(std::span<const SlotVector> windows,
                                    const PolyProtectParams& params, const EncryptionContext& ctx) {
  params.validate();
  if (windows.empty()) raise(ErrorKind::InvalidArgument, "protect_encrypted: no windows");
  const auto m = static_cast<std::size_t>(params.m);
  const std::size_t width = next_pow2(m);
  if (2 * width > ctx.slot_capacity()) {
    raise(ErrorKind::CapacityExceeded, "protect_encrypted needs capacity >= " +
                                           std::to_string(2 * width));
  }

  // c_i * onehot_i, one plaintext per term.
  std::vector<std::vector<double>> scaled_masks(m, std::vector<double>(ctx.slot_capacity(), 0.0));
  for (std::size_t i = 0; i < m; ++i) scaled_masks[i][i] = params.coeffs[i];

  ProtectedTemplate t;
  t.params_id = params.params_id;
  t.windows.reserve(windows.size());
  for (const SlotVector& w : windows) {
    if (w.key_id() != ctx.key_id()) {
      raise(ErrorKind::KeyMismatch, "window was encrypted under another key");
    }
    if (w.logical_len() > m) {
      raise(ErrorKind::InvalidArgument, "window holds more than m values");
    }
    PowerLadder powers(w);
    std::optional<SlotVector> terms;
    for (std::size_t i = 0; i < m; ++i) {
      SlotVector term = mult_plain(powers.get(params.exps[i]), scaled_masks[i]);
      terms = terms ? add(*terms, term) : std::move(term);
    }
    // Copy [0, width) to [width, 2*width) so the fold sees a periodic
    // sequence and every slot in [0, width] receives the full sum.
    SlotVector doubled = add(*terms, rotate_right(*terms, width));
    t.windows.push_back(fold_add_all(doubled, width));
  }
  return t;
}

ProtectedTemplate protect_embedding_encrypted(std::span<const double> v,
                                              const PolyProtectParams& params,
                                              const EncryptionContext& ctx) {
  std::vector<SlotVector> windows;
  for (const auto& chunk : chunk_embedding(v, params)) windows.push_back(encrypt(chunk, ctx));
  return protect_encrypted(windows, params, ctx);
}

std::vector<double> decrypt_template(const ProtectedTemplate& t, const EncryptionContext& ctx) {
  if (!t.encrypted()) return t.values;
  std::vector<double> out;
  out.reserve(t.windows.size());
  for (const auto& w : t.windows) out.push_back(decrypt(w, ctx).front());
  return out;
}

SlotVector pack_template(const ProtectedTemplate& t) {
  if (!t.encrypted()) raise(ErrorKind::InvalidArgument, "pack_template needs an encrypted template");
  const std::size_t cap = t.windows.front().capacity();
  if (t.k() > cap) raise(ErrorKind::CapacityExceeded, "template longer than slot capacity");
  std::vector<double> e0(cap, 0.0);
  e0[0] = 1.0;
  std::optional<SlotVector> packed;
  for (std::size_t j = 0; j < t.k(); ++j) {
    SlotVector isolated = mult_plain(t.windows[j], e0);
    if (j > 0) isolated = rotate_right(isolated, j);
    packed = packed ? add(*packed, isolated) : std::move(isolated);
  }
  return with_logical_len(*packed, t.k());
}

}  // namespace fheprotect
