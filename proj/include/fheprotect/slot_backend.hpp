#pragma once

// Simulated CKKS-style slot engine.
//
// A SlotVector behaves like a batched ciphertext: arithmetic is slot-wise,
// the only way to move data between slots is a cyclic rotation over the full
// capacity, and every multiplication consumes one level of a finite depth
// budget. Values are held in the clear internally; confidentiality is modelled
// only at the serialization boundary, where slots are masked with a keyed
// keystream.

#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fheprotect {

using PlainVector = std::vector<double>;
using KeyId = std::array<std::uint8_t, 16>;
using Nonce = std::array<std::uint8_t, 16>;
using MaskingSeed = std::array<std::uint8_t, 32>;

struct ContextParams {
  std::size_t slot_capacity = 2048;
  /// Maximum multiplicative depth. HEAAN parameters are not published, 16 is
  /// a local default; pipelines that chain PolyProtect and cosine need more.
  int depth_budget = 16;
  /// Standard deviation of the Gaussian noise added per multiplication.
  /// 0 selects exact mode.
  double noise_stddev = 0.0;
};

namespace detail {
struct ContextState;
struct OpNode;
}  // namespace detail

/// Holds the simulated key pair. Copies share the same key material.
class EncryptionContext {
 public:
  /// Derives the secret material from `key_seed`. Equal seeds give equal
  /// key ids, so a context can be re-created in another process.
  static EncryptionContext create(const ContextParams& params, std::uint64_t key_seed);

  std::size_t slot_capacity() const noexcept;
  int depth_budget() const noexcept;
  double noise_stddev() const noexcept;
  const KeyId& key_id() const noexcept;
  std::string key_id_hex() const;

  /// Secret. Only the serializer and tests that model the key holder use it.
  const MaskingSeed& masking_seed() const noexcept;

  /// Random nonce from the OS generator.
  static Nonce fresh_nonce();

  const std::shared_ptr<const detail::ContextState>& state() const noexcept { return state_; }

 private:
  explicit EncryptionContext(std::shared_ptr<const detail::ContextState> state);
  std::shared_ptr<const detail::ContextState> state_;
};

struct OpCounts {
  std::uint64_t rotations = 0;
  std::uint64_t mults = 0;        // ciphertext x ciphertext
  std::uint64_t plain_mults = 0;  // ciphertext x plaintext
  std::uint64_t adds = 0;

  friend bool operator==(const OpCounts&, const OpCounts&) = default;
};

/// Immutable simulated ciphertext.
///
/// Operation counters are taken over the distinct operations in the value's
/// history, so a subexpression shared by both operands of an add is counted
/// once.
class SlotVector {
 public:
  std::span<const double> slots() const noexcept { return slots_; }
  std::size_t capacity() const noexcept { return slots_.size(); }
  std::size_t logical_len() const noexcept { return logical_len_; }
  int depth_used() const noexcept { return depth_; }
  int depth_budget() const noexcept;
  const KeyId& key_id() const noexcept;

  OpCounts op_counts() const;
  std::uint64_t rotations_used() const { return op_counts().rotations; }
  std::uint64_t mults_used() const { return op_counts().mults; }

 private:
  SlotVector() = default;

  std::vector<double> slots_;
  std::size_t logical_len_ = 0;
  int depth_ = 0;
  std::shared_ptr<const detail::ContextState> ctx_;
  std::shared_ptr<const detail::OpNode> history_;

  friend struct SlotOps;
};

SlotVector encrypt(std::span<const double> plain, const EncryptionContext& ctx);
PlainVector decrypt(const SlotVector& sv, const EncryptionContext& ctx);
/// All `capacity` slots, for callers that track data outside logical_len.
PlainVector decrypt_all_slots(const SlotVector& sv, const EncryptionContext& ctx);

SlotVector add(const SlotVector& a, const SlotVector& b);
SlotVector sub(const SlotVector& a, const SlotVector& b);
SlotVector mult(const SlotVector& a, const SlotVector& b);

/// Adds a plaintext (length 1 broadcasts, otherwise length == capacity).
/// Consumes no depth.
SlotVector add_plain(const SlotVector& a, std::span<const double> scalars);

/// Multiplies by a plaintext (length 1 broadcasts, otherwise
/// length == capacity). Consumes one level, like a CKKS rescale.
SlotVector mult_plain(const SlotVector& a, std::span<const double> scalars);

/// Cyclic left rotation over the full capacity; k is reduced mod capacity.
SlotVector rotate_left(const SlotVector& a, std::size_t k);
/// rotate_left by capacity - (k mod capacity); still a single rotation.
SlotVector rotate_right(const SlotVector& a, std::size_t k);

/// Same ciphertext, reporting `n` logical values (bookkeeping only; decrypt
/// returns the first n slots).
SlotVector with_logical_len(const SlotVector& a, std::size_t n);

struct SerializeOptions {
  /// Debug control: when false the slots are written unmasked.
  bool mask = true;
};

/// Layout: [key_id:16][nonce:16][capacity:u32 LE][capacity x f64 LE], the
/// slot bytes XORed with a keystream derived from (masking_seed, nonce).
std::vector<std::uint8_t> serialize_ciphertext(const SlotVector& sv, const EncryptionContext& ctx,
                                               const Nonce& nonce, SerializeOptions opts = {});
/// Same, with a fresh random nonce.
std::vector<std::uint8_t> serialize_ciphertext(const SlotVector& sv, const EncryptionContext& ctx,
                                               SerializeOptions opts = {});

inline constexpr std::size_t kSerializedHeaderSize = 16 + 16 + 4;

struct DeserializedCiphertext {
  SlotVector value;
  Nonce nonce;
};

/// Inverse of serialize_ciphertext. The byte layout carries neither the
/// logical length nor the level, so the caller supplies both.
DeserializedCiphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes,
                                              const EncryptionContext& ctx, std::size_t logical_len,
                                              int depth_used, SerializeOptions opts = {});

/// Keystream used to mask `capacity` slots; exposed for tests.
std::vector<std::uint8_t> masking_keystream(const MaskingSeed& seed, const Nonce& nonce,
                                            std::size_t n_bytes);

std::string to_hex(std::span<const std::uint8_t> bytes);

}  // namespace fheprotect
