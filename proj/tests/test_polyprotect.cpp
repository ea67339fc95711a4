#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <set>

#include "fheprotect/error.hpp"
#include "fheprotect/polyprotect.hpp"
#include "oracles.hpp"

using namespace fheprotect;

namespace {

PolyProtectParams make_params(std::vector<int> coeffs, std::vector<int> exps, int overlap) {
  PolyProtectParams p;
  p.m = static_cast<int>(coeffs.size());
  p.overlap = overlap;
  p.coeffs = std::move(coeffs);
  p.exps = std::move(exps);
  p.params_id = compute_params_id(p);
  return p;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::Io;
}

}  // namespace

TEST(GenParams, DeterministicAndValid) {
  const auto a = gen_params(5, 2, 50, 7);
  const auto b = gen_params(5, 2, 50, 7);
  EXPECT_EQ(a.coeffs, b.coeffs);
  EXPECT_EQ(a.exps, b.exps);
  EXPECT_EQ(a.params_id, b.params_id);
  EXPECT_NO_THROW(a.validate());
  std::vector<int> e = a.exps;
  std::sort(e.begin(), e.end());
  EXPECT_EQ(e, (std::vector<int>{1, 2, 3, 4, 5}));
  for (int c : a.coeffs) {
    EXPECT_NE(c, 0);
    EXPECT_LE(std::abs(c), 50);
  }
}

TEST(GenParams, SeedsGiveDifferentCoefficients) {
  int same = 0;
  for (std::uint64_t s = 0; s < 50; ++s) same += gen_params(5, 0, 50, s).coeffs == gen_params(5, 0, 50, s + 1000).coeffs;
  EXPECT_EQ(same, 0);
}

TEST(GenParams, BadArguments) {
  EXPECT_EQ(kind_of([] { gen_params(5, 5, 50, 1); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { gen_params(5, -1, 50, 1); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { gen_params(5, 0, 2, 1); }), ErrorKind::InfeasibleParams);
  EXPECT_NO_THROW(gen_params(5, 0, 3, 1));
}

TEST(ProtectPlain, OnesCollapseToCoefficientSum) {
  const auto p = make_params({3, -2, 7, 1, 5}, {4, 2, 5, 1, 3}, 0);
  const auto t = protect_plain(std::vector<double>(5, 1.0), p);
  EXPECT_EQ(t.values, (std::vector<double>{14.0}));
}

TEST(ProtectPlain, StrideWithoutOverlap) {
  const auto p = make_params({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 0);
  std::vector<double> v{9, 9, 9, 9, 9, 0.5, -0.2, 0.1, 0.3, -0.4};
  const auto t = protect_plain(v, p);
  ASSERT_EQ(t.values.size(), 2u);
  const std::vector<double> second(v.begin() + 5, v.end());
  EXPECT_DOUBLE_EQ(t.values[1], protect_plain(second, p).values[0]);
}

TEST(ProtectPlain, StrideWithMaxOverlap) {
  const auto p = make_params({1, 2, 3, 4, 5}, {1, 2, 3, 4, 5}, 4);
  std::vector<double> v{0.9, 0.5, -0.2, 0.1, 0.3, -0.4};
  const auto t = protect_plain(v, p);
  ASSERT_EQ(t.values.size(), 2u);
  const std::vector<double> second(v.begin() + 1, v.end());
  EXPECT_DOUBLE_EQ(t.values[1], protect_plain(second, p).values[0]);
}

TEST(ProtectPlain, MatchesScalarEvaluation) {
  const auto p = make_params({2, -3, 1, 4, -1}, {1, 2, 3, 4, 5}, 0);
  const std::vector<double> v{0.5, -0.2, 0.1, 0.3, -0.4};
  const double expected = 2 * 0.5 - 3 * 0.04 + 0.001 + 4 * 0.0081 - (-0.01024);
  EXPECT_NEAR(protect_plain(v, p).values[0], expected, 1e-15);
  EXPECT_NEAR(protect_plain(v, p).values[0], oracle::polyprotect(v, p.coeffs, p.exps, 0)[0], 1e-15);
}

TEST(ProtectPlain, TooShort) {
  const auto p = gen_params(5, 0, 50, 1);
  EXPECT_EQ(kind_of([&] { protect_plain(std::vector<double>{1, 2, 3}, p); }), ErrorKind::InputTooShort);
}

TEST(ChunkEmbedding, WindowCounts) {
  const std::vector<double> v10(10, 1.0), v5(5, 1.0);
  EXPECT_EQ(chunk_embedding(v10, gen_params(5, 0, 50, 1)).size(), 2u);
  EXPECT_EQ(chunk_embedding(v10, gen_params(5, 4, 50, 1)).size(), 6u);
  for (int ov = 0; ov < 5; ++ov) EXPECT_EQ(chunk_embedding(v5, gen_params(5, ov, 50, 1)).size(), 1u);
  // Tail padding: len 11, stride 5 -> 3 windows, the last one zero-padded.
  const auto w = chunk_embedding(std::vector<double>(11, 1.0), gen_params(5, 0, 50, 1));
  ASSERT_EQ(w.size(), 3u);
  EXPECT_EQ(w[2], (std::vector<double>{1, 0, 0, 0, 0}));
}

TEST(ProtectedLength, Formula) {
  for (int m = 2; m <= 7; ++m) {
    for (int ov = 0; ov < m; ++ov) {
      const auto p = gen_params(m, ov, 50, 3);
      for (std::size_t n = static_cast<std::size_t>(m); n <= 70; ++n) {
        const std::vector<double> v(n, 0.5);
        EXPECT_EQ(protected_length(n, p), oracle::polyprotect(v, p.coeffs, p.exps, ov).size());
      }
    }
  }
}

TEST(ProtectEncrypted, OnesWindowReplicated) {
  const auto ctx = EncryptionContext::create(ContextParams{16, 16, 0.0}, 1);
  const auto p = make_params({1, 1, 1, 1, 1}, {1, 2, 3, 4, 5}, 0);
  // Distinctness is validated, so check the mapping with the real params on a ones window.
  const auto q = make_params({1, 2, 3, 4, -5}, {1, 2, 3, 4, 5}, 0);
  const std::vector<SlotVector> windows{encrypt(std::vector<double>(5, 1.0), ctx)};
  const auto t = protect_encrypted(windows, q, ctx);
  const auto slots = decrypt_all_slots(t.windows[0], ctx);
  for (int i = 0; i < 5; ++i) EXPECT_NEAR(slots[static_cast<std::size_t>(i)], 5.0, 1e-12);
  EXPECT_EQ(kind_of([&] { protect_encrypted(windows, p, ctx); }), ErrorKind::InvalidParams);
}

TEST(ProtectEncrypted, MatchesPlainOracle) {
  const auto ctx = EncryptionContext::create(ContextParams{16, 16, 0.0}, 2);
  std::mt19937_64 rng(11);
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto p = gen_params(5, 4, 50, rng());
    const auto v = oracle::uniform_vector(5, rng);
    const std::vector<SlotVector> windows{encrypt(v, ctx)};
    const auto dec = decrypt_template(protect_encrypted(windows, p, ctx), ctx);
    worst = std::max(worst, std::abs(dec[0] - oracle::polyprotect(v, p.coeffs, p.exps, 4)[0]));
  }
  EXPECT_LE(worst, 1e-6);
}

TEST(ProtectEncrypted, DepthBound) {
  const auto ctx = EncryptionContext::create(ContextParams{16, 16, 0.0}, 3);
  const auto p = make_params({3, -1, 4, -2, 5}, {1, 2, 3, 4, 5}, 0);
  const auto t = protect_embedding_encrypted(std::vector<double>(5, 0.3), p, ctx);
  EXPECT_LE(t.windows[0].depth_used(), 3 + 2);
  EXPECT_EQ(t.windows[0].depth_used(), 4);
}

TEST(ProtectEncrypted, ForeignKeyAndBudget) {
  const auto ctx = EncryptionContext::create(ContextParams{16, 16, 0.0}, 3);
  const auto other = EncryptionContext::create(ContextParams{16, 16, 0.0}, 4);
  const auto p = gen_params(5, 0, 50, 1);
  const std::vector<SlotVector> foreign{encrypt(std::vector<double>(5, 0.3), other)};
  EXPECT_EQ(kind_of([&] { protect_encrypted(foreign, p, ctx); }), ErrorKind::KeyMismatch);
  const auto shallow = EncryptionContext::create(ContextParams{16, 2, 0.0}, 3);
  EXPECT_EQ(kind_of([&] { protect_embedding_encrypted(std::vector<double>(5, 0.3), p, shallow); }),
            ErrorKind::DepthExceeded);
}

TEST(PackTemplate, GathersSlotZeros) {
  const auto ctx = EncryptionContext::create(ContextParams{128, 16, 0.0}, 5);
  std::mt19937_64 rng(5);
  const auto v = oracle::unit_vector(64, rng);
  const auto p = gen_params(5, 4, 50, 8);
  const auto t = protect_embedding_encrypted(v, p, ctx);
  const auto packed = pack_template(t);
  EXPECT_EQ(packed.logical_len(), t.k());
  const auto slots = decrypt_all_slots(packed, ctx);
  const auto ref = protect_plain(v, p).values;
  for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(slots[j], ref[j], 1e-9);
  for (std::size_t j = ref.size(); j < slots.size(); ++j) EXPECT_EQ(slots[j], 0.0);
}

TEST(Unlinkability, IndependentParamsDecorrelate) {
  std::mt19937_64 rng(17);
  double independent = 0.0;
  for (int t = 0; t < 100; ++t) {
    const auto v = oracle::unit_vector(64, rng);
    independent += std::abs(oracle::pearson(protect_plain(v, gen_params(5, 4, 50, rng())).values,
                                            protect_plain(v, gen_params(5, 4, 50, rng())).values));
  }
  EXPECT_LT(independent / 100, 0.40);
}
