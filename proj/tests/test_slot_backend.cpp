#include <gtest/gtest.h>

#include <cstring>
#include <functional>
#include <random>

#include "fheprotect/error.hpp"
#include "fheprotect/slot_backend.hpp"
#include "oracles.hpp"

using namespace fheprotect;

namespace {

EncryptionContext ctx_with(std::size_t cap, int depth = 16, std::uint64_t seed = 1) {
  return EncryptionContext::create(ContextParams{cap, depth, 0.0}, seed);
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

TEST(Context, RejectsBadParams) {
  EXPECT_EQ(kind_of([] { ctx_with(12); }), ErrorKind::InvalidParams);
  EXPECT_EQ(kind_of([] { ctx_with(16, 0); }), ErrorKind::InvalidParams);
}

TEST(Context, DistinctKeysHaveDistinctSeeds) {
  const auto a = ctx_with(16, 16, 1);
  const auto b = ctx_with(16, 16, 2);
  EXPECT_NE(a.key_id(), b.key_id());
  EXPECT_NE(a.masking_seed(), b.masking_seed());
  EXPECT_EQ(a.key_id(), ctx_with(16, 16, 1).key_id());
}

TEST(Encrypt, PadsWithZeros) {
  const auto ctx = ctx_with(4);
  const auto c = encrypt(std::vector<double>{1, 2, 3}, ctx);
  EXPECT_EQ(decrypt_all_slots(c, ctx), (std::vector<double>{1, 2, 3, 0}));
  EXPECT_EQ(c.depth_used(), 0);
  EXPECT_EQ(c.logical_len(), 3u);
}

TEST(Encrypt, RejectsEmptyAndOversized) {
  const auto ctx = ctx_with(2048);
  EXPECT_EQ(kind_of([&] { encrypt(std::vector<double>{}, ctx); }), ErrorKind::InvalidArgument);
  EXPECT_EQ(kind_of([&] { encrypt(std::vector<double>(2049, 0.5), ctx); }), ErrorKind::CapacityExceeded);
}

TEST(Decrypt, RoundTripAndForeignKey) {
  const auto ctx = ctx_with(8);
  const auto c = encrypt(std::vector<double>{1, 2, 3}, ctx);
  EXPECT_EQ(decrypt(c, ctx), (std::vector<double>{1, 2, 3}));
  EXPECT_EQ(kind_of([&] { decrypt(c, ctx_with(8, 16, 99)); }), ErrorKind::KeyMismatch);
}

TEST(Add, HomomorphicAndIdentity) {
  const auto ctx = ctx_with(8);
  const auto a = encrypt(std::vector<double>{1, 2}, ctx);
  EXPECT_EQ(decrypt(add(a, encrypt(std::vector<double>{3, 4}, ctx)), ctx), (std::vector<double>{4, 6}));
  EXPECT_EQ(decrypt(add(a, encrypt(std::vector<double>{0, 0}, ctx)), ctx), decrypt(a, ctx));
}

TEST(Add, DepthIsMaxOfOperands) {
  const auto ctx = ctx_with(8);
  const auto x = encrypt(std::vector<double>{1, 2}, ctx);
  const auto d2 = mult(mult(x, x), x);
  const auto d3 = mult(d2, x);
  ASSERT_EQ(d2.depth_used(), 2);
  ASSERT_EQ(d3.depth_used(), 3);
  EXPECT_EQ(add(d2, d3).depth_used(), 3);
  EXPECT_EQ(add(d3, d2).depth_used(), 3);
}

TEST(Add, ForeignKeyRejected) {
  const auto a = encrypt(std::vector<double>{1}, ctx_with(8, 16, 1));
  const auto b = encrypt(std::vector<double>{1}, ctx_with(8, 16, 2));
  EXPECT_EQ(kind_of([&] { add(a, b); }), ErrorKind::KeyMismatch);
  EXPECT_EQ(kind_of([&] { mult(a, b); }), ErrorKind::KeyMismatch);
}

TEST(Mult, SlotwiseProduct) {
  const auto ctx = ctx_with(8);
  const auto r = mult(encrypt(std::vector<double>{2, 3}, ctx), encrypt(std::vector<double>{4, 5}, ctx));
  EXPECT_EQ(decrypt(r, ctx), (std::vector<double>{8, 15}));
  EXPECT_EQ(r.depth_used(), 1);
}

TEST(Mult, BudgetBoundary) {
  const auto ctx = ctx_with(4, 3);
  auto x = encrypt(std::vector<double>{1.0}, ctx);
  for (int i = 0; i < 3; ++i) x = mult(x, x);
  EXPECT_EQ(x.depth_used(), 3);
  EXPECT_EQ(kind_of([&] { mult(x, x); }), ErrorKind::DepthExceeded);
  EXPECT_EQ(kind_of([&] { mult_plain(x, std::vector<double>{2.0}); }), ErrorKind::DepthExceeded);
}

TEST(Mult, ExactModeMatchesDirectProduct) {
  const auto ctx = ctx_with(64);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 100; ++t) {
    const auto x = oracle::uniform_vector(64, rng);
    const auto y = oracle::uniform_vector(64, rng);
    const auto r = decrypt(mult(encrypt(x, ctx), encrypt(y, ctx)), ctx);
    for (std::size_t i = 0; i < 64; ++i) ASSERT_NEAR(r[i], x[i] * y[i], 1e-12);
  }
}

TEST(Mult, NoiseModePerturbsProducts) {
  const auto ctx = EncryptionContext::create(ContextParams{16, 16, 1e-6}, 1);
  const auto x = encrypt(std::vector<double>(16, 1.0), ctx);
  const auto r = decrypt(mult(x, x), ctx);
  double max_dev = 0.0;
  for (double v : r) max_dev = std::max(max_dev, std::abs(v - 1.0));
  EXPECT_GT(max_dev, 0.0);
  EXPECT_LT(max_dev, 1e-4);
}

TEST(MultPlain, ScalarAndMask) {
  const auto ctx = ctx_with(4);
  const auto a = encrypt(std::vector<double>{1, 2, 3}, ctx);
  EXPECT_EQ(decrypt(mult_plain(a, std::vector<double>{2}), ctx), (std::vector<double>{2, 4, 6}));
  const auto one = mult_plain(a, std::vector<double>{1});
  EXPECT_EQ(decrypt(one, ctx), decrypt(a, ctx));
  EXPECT_EQ(one.depth_used(), 1);
  const auto masked = mult_plain(encrypt(std::vector<double>{5, 6, 7, 8}, ctx), std::vector<double>{1, 0, 1, 0});
  EXPECT_EQ(decrypt(masked, ctx), (std::vector<double>{5, 0, 7, 0}));
  EXPECT_EQ(kind_of([&] { mult_plain(a, std::vector<double>{1, 2}); }), ErrorKind::InvalidArgument);
}

TEST(Rotate, LeftByOne) {
  const auto ctx = ctx_with(4);
  const auto r = rotate_left(encrypt(std::vector<double>{1, 2, 3, 4}, ctx), 1);
  EXPECT_EQ(decrypt_all_slots(r, ctx), (std::vector<double>{2, 3, 4, 1}));
  EXPECT_EQ(r.rotations_used(), 1u);
}

TEST(Rotate, FullCycleStillCounts) {
  const auto ctx = ctx_with(8);
  const auto x = encrypt(std::vector<double>{1, 2, 3}, ctx);
  const auto r = rotate_left(x, 8);
  EXPECT_EQ(decrypt_all_slots(r, ctx), decrypt_all_slots(x, ctx));
  EXPECT_EQ(r.rotations_used(), 1u);
  EXPECT_EQ(r.depth_used(), 0);
}

TEST(Rotate, Composition) {
  const auto ctx = ctx_with(32);
  std::mt19937_64 rng(9);
  const auto x = encrypt(oracle::uniform_vector(32, rng), ctx);
  std::uniform_int_distribution<std::size_t> k(0, 100);
  for (int t = 0; t < 50; ++t) {
    const std::size_t a = k(rng), b = k(rng);
    EXPECT_EQ(decrypt_all_slots(rotate_left(rotate_left(x, a), b), ctx),
              decrypt_all_slots(rotate_left(x, a + b), ctx));
  }
}

TEST(Rotate, RightUndoesLeft) {
  const auto ctx = ctx_with(16);
  std::mt19937_64 rng(3);
  const auto x = encrypt(oracle::uniform_vector(16, rng), ctx);
  EXPECT_EQ(decrypt_all_slots(rotate_right(rotate_left(x, 5), 5), ctx), decrypt_all_slots(x, ctx));
}

TEST(Counters, SharedHistoryCountedOnce) {
  const auto ctx = ctx_with(8);
  const auto x = encrypt(std::vector<double>{1, 2}, ctx);
  const auto r = rotate_left(x, 1);
  const auto s = add(r, r);
  EXPECT_EQ(s.op_counts(), (OpCounts{1, 0, 0, 1}));
}

TEST(Serialize, RoundTripUnmasksWithSeed) {
  const auto ctx = ctx_with(16);
  std::mt19937_64 rng(4);
  const auto v = oracle::uniform_vector(10, rng);
  const auto c = encrypt(v, ctx);
  const auto bytes = serialize_ciphertext(c, ctx);
  ASSERT_EQ(bytes.size(), kSerializedHeaderSize + 16 * 8);

  // Key holder view: strip the keystream by hand.
  Nonce nonce;
  std::memcpy(nonce.data(), bytes.data() + 16, 16);
  const auto ks = masking_keystream(ctx.masking_seed(), nonce, 16 * 8);
  for (std::size_t i = 0; i < 10; ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) {
      const std::size_t off = kSerializedHeaderSize + 8 * i + static_cast<std::size_t>(b);
      bits |= static_cast<std::uint64_t>(bytes[off] ^ ks[8 * i + static_cast<std::size_t>(b)]) << (8 * b);
    }
    double x;
    std::memcpy(&x, &bits, 8);
    EXPECT_NEAR(x, v[i], 1e-12);
  }

  const auto back = deserialize_ciphertext(bytes, ctx, 10, 0);
  EXPECT_EQ(decrypt(back.value, ctx), v);
  EXPECT_EQ(back.nonce, nonce);
}

TEST(Serialize, FreshNonceEachTime) {
  const auto ctx = ctx_with(16);
  const auto c = encrypt(std::vector<double>{1, 2, 3}, ctx);
  EXPECT_NE(serialize_ciphertext(c, ctx), serialize_ciphertext(c, ctx));
}

TEST(Serialize, ExplicitNonceIsDeterministic) {
  const auto ctx = ctx_with(16);
  const auto c = encrypt(std::vector<double>{1, 2, 3}, ctx);
  const Nonce n{};
  EXPECT_EQ(serialize_ciphertext(c, ctx, n), serialize_ciphertext(c, ctx, n));
}

TEST(Serialize, UnmaskedDebugModeExposesSlots) {
  const auto ctx = ctx_with(4);
  const auto bytes = serialize_ciphertext(encrypt(std::vector<double>{1.5}, ctx), ctx, SerializeOptions{false});
  double x;
  std::memcpy(&x, bytes.data() + kSerializedHeaderSize, 8);
  EXPECT_EQ(x, 1.5);
}

TEST(Deserialize, RejectsForeignKeyAndTruncation) {
  const auto ctx = ctx_with(16);
  const auto bytes = serialize_ciphertext(encrypt(std::vector<double>{1}, ctx), ctx);
  EXPECT_EQ(kind_of([&] { deserialize_ciphertext(bytes, ctx_with(16, 16, 7), 1, 0); }), ErrorKind::KeyMismatch);
  const std::vector<std::uint8_t> cut(bytes.begin(), bytes.begin() + 40);
  EXPECT_EQ(kind_of([&] { deserialize_ciphertext(cut, ctx, 1, 0); }), ErrorKind::CorruptData);
}
