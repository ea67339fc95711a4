#pragma once

// Gallery and parameter-store persistence.
//
// A gallery directory holds manifest.json plus one binary blob per stored
// ciphertext in the slot_backend serialization layout:
//
//   manifest.json
//   blobs/<subject_id>_<window>.bin
//
// Plaintext galleries (pipelines without an Encrypt stage) keep their values
// inline in the manifest and have no blobs.

#include <filesystem>
#include <vector>

#include "fheprotect/pipeline.hpp"
#include "fheprotect/polyprotect.hpp"
#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

inline constexpr int kGalleryFormatVersion = 1;

/// Writes the manifest and blobs. `ctx` is required when any record is
/// encrypted; records without nonces get fresh ones.
void save_gallery(const std::filesystem::path& dir, std::span<const GalleryRecord> records,
                  const EncryptionContext* ctx);

/// Throws KeyMismatch when the manifest was written under another key, and
/// CorruptData or Io on malformed input.
std::vector<GalleryRecord> load_gallery(const std::filesystem::path& dir, const EncryptionContext* ctx);

/// Serialized bytes of every stored ciphertext, in record then window order,
/// using the record's stored nonces.
std::vector<std::vector<std::uint8_t>> serialized_templates(std::span<const GalleryRecord> records,
                                                            const EncryptionContext& ctx);

/// JSON array of {m, overlap, c_range, coeffs, exps, seed, params_id}.
void save_params_store(const std::filesystem::path& path, const ParamsStore& store);
ParamsStore load_params_store(const std::filesystem::path& path);

}  // namespace fheprotect
