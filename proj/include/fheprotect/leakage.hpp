#pragma once

// Soft-biometric leakage evaluation: attribute classifiers over raw
// embeddings, protected templates and serialized ciphertexts, with Privacy
// Gain / Suppression Rate reporting and PolyProtect parameter sweeps.

#include <array>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "fheprotect/dataset.hpp"
#include "fheprotect/polyprotect.hpp"
#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

struct TrainOptions {
  int epochs = 200;
  double learning_rate = 0.5;
  double l2 = 1e-3;
  std::uint64_t seed = 1;
};

/// Multinomial logistic regression on standardized features.
struct LinearClassifier {
  Eigen::MatrixXd weights;  ///< classes x features
  Eigen::VectorXd bias;     ///< per class
  std::vector<int> classes; ///< label of each row, ascending
  Eigen::VectorXd mean;     ///< feature standardization
  Eigen::VectorXd scale;
  TrainOptions train_meta;

  std::size_t num_features() const noexcept { return static_cast<std::size_t>(weights.cols()); }
  int predict(std::span<const double> x) const;
};

/// Full-batch gradient descent on softmax cross-entropy. Deterministic.
/// Throws DegenerateLabels when fewer than two classes are present and
/// DimensionMismatch on ragged input.
LinearClassifier train_attr_classifier(std::span<const PlainVector> features, std::span<const int> labels,
                                       const TrainOptions& opts = {});

/// Fraction of correct predictions. Throws DimensionMismatch when the
/// feature width differs from the classifier's.
double eval_accuracy(const LinearClassifier& clf, std::span<const PlainVector> features,
                     std::span<const int> labels);

/// Number of raw slot values taken from a ciphertext dump.
inline constexpr std::size_t kDumpSlotFeatures = 128;

/// Attacker view of a serialized ciphertext: a 256-bin normalized byte
/// histogram over the whole dump followed by sign(x) * log1p(|x|) of the first
/// kDumpSlotFeatures 8-byte payload words read as doubles (non-finite -> 0,
/// missing -> 0). Uses nothing but the bytes.
PlainVector features_from_bytes(std::span<const std::uint8_t> bytes);

/// Serializes each ciphertext and maps the bytes with features_from_bytes.
/// Nonces are derived from (nonce_seed, index) so runs are reproducible.
std::vector<PlainVector> ciphertext_features(std::span<const SlotVector> records, const EncryptionContext& ctx,
                                             std::uint64_t nonce_seed, SerializeOptions opts = {});

/// r_o - r_p, i.e. (1 - r_p) - (1 - r_o).
double privacy_gain(double r_o, double r_p);
/// (a_o - a_p) / a_o. Throws ZeroBaseline when a_o == 0.
double suppression_rate(double a_o, double a_p);
/// max(majority-class share, 1 / num_classes).
double chance_baseline(std::span<const int> labels, int num_classes);

enum class Variant { None, PolyProtect, Mrl, MrlPolyProtect, MrlFhe, MrlPolyProtectFhe };
inline constexpr std::array<Variant, 6> kAllVariants{Variant::None,   Variant::PolyProtect,
                                                     Variant::Mrl,    Variant::MrlPolyProtect,
                                                     Variant::MrlFhe, Variant::MrlPolyProtectFhe};
std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);
bool uses_fhe(Variant v);

struct LeakageReport {
  Attribute attribute = Attribute::Gender;
  Variant variant = Variant::None;
  double a_o = 0.0;
  double a_p = 0.0;
  double r_o = 0.0;
  double r_p = 0.0;
  double pg = 0.0;
  double sr = 0.0;
  double chance = 0.0;
};

struct LeakageOptions {
  std::size_t compress_dim = 64;
  int m = 5;
  int overlap = 4;
  int c_range = 50;
  std::uint64_t params_seed = 1;
  /// One parameter set for all subjects (the attacker trains on a single
  /// mapping). When false every subject gets its own set.
  bool shared_params = true;
  /// Fraction of identities used for training; the rest are test identities.
  double train_fraction = 0.5;
  std::uint64_t split_seed = 1;
  TrainOptions train;
  SerializeOptions serialize;
  int jobs = 1;
};

/// Identity-disjoint train/test split, stratified by the identity's label
/// cell. Returns sample indices.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split split_by_identity(std::span<const Embedding> dataset, double train_fraction, std::uint64_t seed);

/// Feature representation of every sample under a protection variant.
/// `ctx` is required for FHE variants.
std::vector<PlainVector> variant_features(std::span<const Embedding> dataset, Variant variant,
                                          const LeakageOptions& opts, const EncryptionContext* ctx);

/// Accuracy of an attribute classifier trained and tested on the split.
double attribute_accuracy(std::span<const PlainVector> features, std::span<const Embedding> dataset,
                          Attribute attribute, const Split& split, const TrainOptions& train);

/// Every variant x attribute cell, with the None variant as the A_o / R_o
/// baseline. None is always evaluated even when not requested.
std::vector<LeakageReport> run_leakage_suite(std::span<const Embedding> dataset, std::span<const Variant> variants,
                                             const EncryptionContext* ctx, const LeakageOptions& opts = {});

/// CSV: attribute,variant,a_o,a_p,pg_x100,sr,chance
void write_leakage_csv(std::ostream& os, std::span<const LeakageReport> reports);

enum class SweepParam { Overlap, M, CRange };
std::string_view to_string(SweepParam p);
SweepParam parse_sweep_param(std::string_view name);

struct AblationRow {
  SweepParam param = SweepParam::Overlap;
  int value = 0;
  Attribute attribute = Attribute::Gender;
  std::optional<double> accuracy;
  double chance = 0.0;
  std::optional<int> depth_used;  ///< encrypted protect depth on one sample
  std::string error;              ///< module error, e.g. "InfeasibleParams: ..."
};

struct AblationOptions {
  LeakageOptions leakage;
  /// Context for the depth audit; default capacity 128 and budget 16.
  std::size_t audit_slot_capacity = 128;
  int audit_depth_budget = 16;
  std::uint64_t audit_key_seed = 1;
};

/// Leakage accuracy (MRL + PolyProtect features) per attribute per value, and
/// a depth audit running protect_encrypted under the audit budget. Errors are
/// reported in the row instead of aborting the sweep.
std::vector<AblationRow> ablation_sweep(SweepParam param, std::span<const int> values,
                                        std::span<const Embedding> dataset, const AblationOptions& opts = {});

/// CSV: param,value,attribute,accuracy,chance,depth_used,error
void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows);

}  // namespace fheprotect
