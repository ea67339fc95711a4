#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

enum class Attribute { Gender = 0, Age = 1, Ethnicity = 2 };
inline constexpr std::array<Attribute, 3> kAllAttributes{Attribute::Gender, Attribute::Age,
                                                         Attribute::Ethnicity};
std::string_view to_string(Attribute a);
/// Gender: 2 classes. Age bands 0-22, 23-40, 41-59, 60+: 4 classes.
/// Ethnicity: 4 classes.
int num_classes(Attribute a);

struct Attributes {
  int gender = 0;
  int age_band = 0;
  int ethnicity = 0;

  int get(Attribute a) const;
};

struct Embedding {
  PlainVector values;
  int subject_id = 0;
  Attributes attributes;
};

struct SyntheticSpec {
  int num_ids = 50;
  int samples_per_id = 5;
  std::size_t dim = 512;
  /// Spread of identity centres relative to the within-identity noise.
  double class_separation = 1.0;
  /// Fraction of coordinates carrying attribute-aligned mean shifts.
  double attribute_correlation = 0.5;
  std::uint64_t seed = 1;

  void validate() const;
};

/// Per-identity Gaussian clusters, L2-normalized. Attribute labels are
/// assigned per identity so that the 2 x 4 x 4 label combinations are as
/// balanced as num_ids allows. Samples are ordered by identity, then sample
/// index.
std::vector<Embedding> gen_synthetic_dataset(const SyntheticSpec& spec);

/// Matryoshka-style compression: keep the first d coordinates, renormalize.
/// Throws ZeroPrefix when the prefix vanishes.
Embedding compress_prefix(const Embedding& e, std::size_t d);

void l2_normalize(std::span<double> v);

/// CSV with header id,gender,age_band,ethnicity,v0..v{dim-1}.
void write_dataset_csv(const std::filesystem::path& path, std::span<const Embedding> data);
std::vector<Embedding> read_dataset_csv(const std::filesystem::path& path);

}  // namespace fheprotect
