#include "fheprotect/slot_backend.hpp"

#include <sodium.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <mutex>
#include <random>
#include <unordered_set>

#include "fheprotect/error.hpp"

namespace fheprotect {

namespace detail {

struct ContextState {
  ContextParams params;
  KeyId key_id{};
  MaskingSeed masking_seed{};

  mutable std::mutex noise_mu;
  mutable std::mt19937_64 noise_rng;
};

enum class OpKind : std::uint8_t { Encrypt, Add, Mult, AddPlain, MultPlain, Rotate };

struct OpNode {
  OpKind kind;
  std::shared_ptr<const OpNode> lhs;
  std::shared_ptr<const OpNode> rhs;
};

}  // namespace detail

namespace {

void ensure_sodium() {
  static const int rc = sodium_init();
  if (rc < 0) raise(ErrorKind::Io, "libsodium initialisation failed");
}

template <std::size_t N>
std::array<std::uint8_t, N> keyed_hash(std::span<const std::uint8_t> key, std::string_view label) {
  std::array<std::uint8_t, N> out{};
  crypto_generichash(out.data(), out.size(), reinterpret_cast<const unsigned char*>(label.data()),
                     label.size(), key.data(), key.size());
  return out;
}

void require_same_key(const SlotVector& a, const SlotVector& b, const char* op) {
  if (a.key_id() != b.key_id()) {
    raise(ErrorKind::KeyMismatch, std::string(op) + " on ciphertexts under different keys");
  }
  if (a.capacity() != b.capacity()) {
    raise(ErrorKind::InvalidArgument, std::string(op) + " on ciphertexts of different capacity");
  }
}

void require_context(const SlotVector& sv, const EncryptionContext& ctx) {
  if (sv.key_id() != ctx.key_id()) {
    raise(ErrorKind::KeyMismatch, "ciphertext was not produced under this context");
  }
}

void require_level(int next_depth, int budget, const char* op) {
  if (next_depth > budget) {
    raise(ErrorKind::DepthExceeded, std::string(op) + " would reach depth " +
                                        std::to_string(next_depth) + " (budget " +
                                        std::to_string(budget) + ")");
  }
}

// Expands a scalar operand to one value per slot.
std::vector<double> broadcast(std::span<const double> scalars, std::size_t capacity, const char* op) {
  if (scalars.size() == 1) return std::vector<double>(capacity, scalars[0]);
  if (scalars.size() == capacity) return {scalars.begin(), scalars.end()};
  raise(ErrorKind::InvalidArgument, std::string(op) + ": plaintext operand has length " +
                                        std::to_string(scalars.size()) +
                                        ", expected 1 or the slot capacity " +
                                        std::to_string(capacity));
}

}  // namespace

// Friend of SlotVector; the only place that builds one.
struct SlotOps {
  static SlotVector make(std::vector<double> slots, std::size_t logical_len, int depth,
                         std::shared_ptr<const detail::ContextState> ctx,
                         std::shared_ptr<const detail::OpNode> history) {
    SlotVector sv;
    sv.slots_ = std::move(slots);
    sv.logical_len_ = logical_len;
    sv.depth_ = depth;
    sv.ctx_ = std::move(ctx);
    sv.history_ = std::move(history);
    return sv;
  }

  static std::shared_ptr<const detail::OpNode> node(detail::OpKind kind, const SlotVector& a,
                                                    const SlotVector* b = nullptr) {
    return std::make_shared<const detail::OpNode>(
        detail::OpNode{kind, a.history_, b ? b->history_ : nullptr});
  }

  static const detail::ContextState& ctx(const SlotVector& sv) { return *sv.ctx_; }
  static const std::shared_ptr<const detail::ContextState>& ctx_ptr(const SlotVector& sv) {
    return sv.ctx_;
  }
  static const std::vector<double>& raw(const SlotVector& sv) { return sv.slots_; }
  static const detail::OpNode* history(const SlotVector& sv) { return sv.history_.get(); }
};

// ---------------------------------------------------------------------------
// EncryptionContext

EncryptionContext::EncryptionContext(std::shared_ptr<const detail::ContextState> state)
    : state_(std::move(state)) {}

EncryptionContext EncryptionContext::create(const ContextParams& params, std::uint64_t key_seed) {
  if (params.slot_capacity == 0 || !std::has_single_bit(params.slot_capacity)) {
    raise(ErrorKind::InvalidParams,
          "slot capacity must be a power of two, got " + std::to_string(params.slot_capacity));
  }
  if (params.depth_budget < 1) raise(ErrorKind::InvalidParams, "depth budget must be >= 1");
  if (!(params.noise_stddev >= 0.0)) raise(ErrorKind::InvalidParams, "noise stddev must be >= 0");
  ensure_sodium();

  std::array<std::uint8_t, 8> seed_bytes{};
  for (std::size_t i = 0; i < 8; ++i) seed_bytes[i] = static_cast<std::uint8_t>(key_seed >> (8 * i));
  const auto secret = keyed_hash<32>(seed_bytes, "fheprotect/secret-key");

  auto state = std::make_shared<detail::ContextState>();
  state->params = params;
  state->key_id = keyed_hash<16>(secret, "fheprotect/key-id");
  state->masking_seed = keyed_hash<32>(secret, "fheprotect/masking-seed");
  state->noise_rng.seed(key_seed ^ 0x9e3779b97f4a7c15ULL);
  return EncryptionContext(std::move(state));
}

std::size_t EncryptionContext::slot_capacity() const noexcept { return state_->params.slot_capacity; }
int EncryptionContext::depth_budget() const noexcept { return state_->params.depth_budget; }
double EncryptionContext::noise_stddev() const noexcept { return state_->params.noise_stddev; }
const KeyId& EncryptionContext::key_id() const noexcept { return state_->key_id; }
std::string EncryptionContext::key_id_hex() const { return to_hex(state_->key_id); }
const MaskingSeed& EncryptionContext::masking_seed() const noexcept { return state_->masking_seed; }

Nonce EncryptionContext::fresh_nonce() {
  ensure_sodium();
  Nonce n{};
  randombytes_buf(n.data(), n.size());
  return n;
}

// ---------------------------------------------------------------------------
// SlotVector

int SlotVector::depth_budget() const noexcept { return ctx_->params.depth_budget; }
const KeyId& SlotVector::key_id() const noexcept { return ctx_->key_id; }

OpCounts SlotVector::op_counts() const {
  OpCounts counts;
  std::unordered_set<const detail::OpNode*> seen;
  std::vector<const detail::OpNode*> stack{history_.get()};
  while (!stack.empty()) {
    const detail::OpNode* n = stack.back();
    stack.pop_back();
    if (n == nullptr || !seen.insert(n).second) continue;
    switch (n->kind) {
      case detail::OpKind::Rotate: ++counts.rotations; break;
      case detail::OpKind::Mult: ++counts.mults; break;
      case detail::OpKind::MultPlain: ++counts.plain_mults; break;
      case detail::OpKind::Add:
      case detail::OpKind::AddPlain: ++counts.adds; break;
      case detail::OpKind::Encrypt: break;
    }
    stack.push_back(n->lhs.get());
    stack.push_back(n->rhs.get());
  }
  return counts;
}

// ---------------------------------------------------------------------------
// Operations

SlotVector encrypt(std::span<const double> plain, const EncryptionContext& ctx) {
  if (plain.empty()) raise(ErrorKind::InvalidArgument, "cannot encrypt an empty vector");
  const std::size_t cap = ctx.slot_capacity();
  if (plain.size() > cap) {
    raise(ErrorKind::CapacityExceeded, "plaintext of length " + std::to_string(plain.size()) +
                                           " exceeds slot capacity " + std::to_string(cap));
  }
  std::vector<double> slots(cap, 0.0);
  std::copy(plain.begin(), plain.end(), slots.begin());
  auto leaf = std::make_shared<const detail::OpNode>(detail::OpNode{detail::OpKind::Encrypt, {}, {}});
  return SlotOps::make(std::move(slots), plain.size(), 0, ctx.state(), std::move(leaf));
}

PlainVector decrypt(const SlotVector& sv, const EncryptionContext& ctx) {
  require_context(sv, ctx);
  auto s = sv.slots();
  return {s.begin(), s.begin() + static_cast<std::ptrdiff_t>(sv.logical_len())};
}

PlainVector decrypt_all_slots(const SlotVector& sv, const EncryptionContext& ctx) {
  require_context(sv, ctx);
  return {sv.slots().begin(), sv.slots().end()};
}

SlotVector add(const SlotVector& a, const SlotVector& b) {
  require_same_key(a, b, "add");
  std::vector<double> out(a.capacity());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.slots()[i] + b.slots()[i];
  return SlotOps::make(std::move(out), std::max(a.logical_len(), b.logical_len()),
                       std::max(a.depth_used(), b.depth_used()), SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::Add, a, &b));
}

SlotVector sub(const SlotVector& a, const SlotVector& b) {
  require_same_key(a, b, "sub");
  std::vector<double> out(a.capacity());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.slots()[i] - b.slots()[i];
  return SlotOps::make(std::move(out), std::max(a.logical_len(), b.logical_len()),
                       std::max(a.depth_used(), b.depth_used()), SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::Add, a, &b));
}

SlotVector mult(const SlotVector& a, const SlotVector& b) {
  require_same_key(a, b, "mult");
  const int depth = std::max(a.depth_used(), b.depth_used()) + 1;
  require_level(depth, a.depth_budget(), "mult");

  std::vector<double> out(a.capacity());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a.slots()[i] * b.slots()[i];

  const auto& state = SlotOps::ctx(a);
  if (state.params.noise_stddev > 0.0) {
    std::normal_distribution<double> noise(0.0, state.params.noise_stddev);
    std::lock_guard lock(state.noise_mu);
    for (double& v : out) v += noise(state.noise_rng);
  }
  return SlotOps::make(std::move(out), std::max(a.logical_len(), b.logical_len()), depth,
                       SlotOps::ctx_ptr(a), SlotOps::node(detail::OpKind::Mult, a, &b));
}

SlotVector add_plain(const SlotVector& a, std::span<const double> scalars) {
  auto out = broadcast(scalars, a.capacity(), "add_plain");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += a.slots()[i];
  return SlotOps::make(std::move(out), a.logical_len(), a.depth_used(), SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::AddPlain, a));
}

SlotVector mult_plain(const SlotVector& a, std::span<const double> scalars) {
  const int depth = a.depth_used() + 1;
  require_level(depth, a.depth_budget(), "mult_plain");
  auto out = broadcast(scalars, a.capacity(), "mult_plain");
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= a.slots()[i];
  return SlotOps::make(std::move(out), a.logical_len(), depth, SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::MultPlain, a));
}

SlotVector rotate_left(const SlotVector& a, std::size_t k) {
  const std::size_t cap = a.capacity();
  k %= cap;
  std::vector<double> out(cap);
  const auto& src = SlotOps::raw(a);
  std::rotate_copy(src.begin(), src.begin() + static_cast<std::ptrdiff_t>(k), src.end(), out.begin());
  return SlotOps::make(std::move(out), a.logical_len(), a.depth_used(), SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::Rotate, a));
}

SlotVector rotate_right(const SlotVector& a, std::size_t k) {
  const std::size_t cap = a.capacity();
  return rotate_left(a, (cap - k % cap) % cap);
}

SlotVector with_logical_len(const SlotVector& a, std::size_t n) {
  if (n == 0 || n > a.capacity()) raise(ErrorKind::InvalidArgument, "logical length out of range");
  return SlotOps::make(SlotOps::raw(a), n, a.depth_used(), SlotOps::ctx_ptr(a),
                       SlotOps::node(detail::OpKind::Encrypt, a));
}

// ---------------------------------------------------------------------------
// Serialization

std::vector<std::uint8_t> masking_keystream(const MaskingSeed& seed, const Nonce& nonce,
                                            std::size_t n_bytes) {
  ensure_sodium();
  // Per-ciphertext subkey = BLAKE2b_seed(nonce), stream = ChaCha20(subkey).
  std::array<std::uint8_t, crypto_stream_chacha20_KEYBYTES> subkey{};
  crypto_generichash(subkey.data(), subkey.size(), nonce.data(), nonce.size(), seed.data(),
                     seed.size());
  std::array<std::uint8_t, crypto_stream_chacha20_NONCEBYTES> zero_nonce{};
  std::vector<std::uint8_t> stream(n_bytes);
  crypto_stream_chacha20(stream.data(), stream.size(), zero_nonce.data(), subkey.data());
  sodium_memzero(subkey.data(), subkey.size());
  return stream;
}

std::vector<std::uint8_t> serialize_ciphertext(const SlotVector& sv, const EncryptionContext& ctx,
                                               const Nonce& nonce, SerializeOptions opts) {
  require_context(sv, ctx);
  const std::size_t cap = sv.capacity();
  std::vector<std::uint8_t> out(kSerializedHeaderSize + 8 * cap);
  std::copy(sv.key_id().begin(), sv.key_id().end(), out.begin());
  std::copy(nonce.begin(), nonce.end(), out.begin() + 16);
  const auto cap32 = static_cast<std::uint32_t>(cap);
  for (std::size_t i = 0; i < 4; ++i) out[32 + i] = static_cast<std::uint8_t>(cap32 >> (8 * i));

  std::uint8_t* body = out.data() + kSerializedHeaderSize;
  for (std::size_t i = 0; i < cap; ++i) {
    const auto bits = std::bit_cast<std::uint64_t>(sv.slots()[i]);
    for (std::size_t b = 0; b < 8; ++b) body[8 * i + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  if (opts.mask) {
    const auto stream = masking_keystream(ctx.masking_seed(), nonce, 8 * cap);
    for (std::size_t i = 0; i < stream.size(); ++i) body[i] ^= stream[i];
  }
  return out;
}

std::vector<std::uint8_t> serialize_ciphertext(const SlotVector& sv, const EncryptionContext& ctx,
                                               SerializeOptions opts) {
  return serialize_ciphertext(sv, ctx, EncryptionContext::fresh_nonce(), opts);
}

DeserializedCiphertext deserialize_ciphertext(std::span<const std::uint8_t> bytes,
                                              const EncryptionContext& ctx, std::size_t logical_len,
                                              int depth_used, SerializeOptions opts) {
  if (bytes.size() < kSerializedHeaderSize) raise(ErrorKind::CorruptData, "ciphertext blob too short");
  KeyId key{};
  std::copy_n(bytes.begin(), 16, key.begin());
  if (key != ctx.key_id()) raise(ErrorKind::KeyMismatch, "ciphertext blob belongs to another key");
  Nonce nonce{};
  std::copy_n(bytes.begin() + 16, 16, nonce.begin());
  std::uint32_t cap = 0;
  for (std::size_t i = 0; i < 4; ++i) cap |= static_cast<std::uint32_t>(bytes[32 + i]) << (8 * i);
  if (cap != ctx.slot_capacity() || bytes.size() != kSerializedHeaderSize + 8ull * cap) {
    raise(ErrorKind::CorruptData, "ciphertext blob capacity does not match the context");
  }
  if (logical_len == 0 || logical_len > cap) raise(ErrorKind::CorruptData, "bad logical length");
  if (depth_used < 0 || depth_used > ctx.depth_budget()) raise(ErrorKind::CorruptData, "bad depth");

  std::vector<std::uint8_t> body(bytes.begin() + kSerializedHeaderSize, bytes.end());
  if (opts.mask) {
    const auto stream = masking_keystream(ctx.masking_seed(), nonce, body.size());
    for (std::size_t i = 0; i < body.size(); ++i) body[i] ^= stream[i];
  }
  std::vector<double> slots(cap);
  for (std::size_t i = 0; i < cap; ++i) {
    std::uint64_t bits = 0;
    for (std::size_t b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(body[8 * i + b]) << (8 * b);
    slots[i] = std::bit_cast<double>(bits);
  }
  auto leaf = std::make_shared<const detail::OpNode>(detail::OpNode{detail::OpKind::Encrypt, {}, {}});
  return {SlotOps::make(std::move(slots), logical_len, depth_used, ctx.state(), std::move(leaf)),
          nonce};
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string s;
  s.reserve(bytes.size() * 2);
  for (auto b : bytes) {
    s.push_back(digits[b >> 4]);
    s.push_back(digits[b & 0xf]);
  }
  return s;
}

}  // namespace fheprotect
