#pragma once

// End-to-end identification: compress -> encrypt -> PolyProtect -> 1:N
// encrypted cosine search.

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fheprotect/approx.hpp"
#include "fheprotect/dataset.hpp"
#include "fheprotect/polyprotect.hpp"
#include "fheprotect/similarity.hpp"
#include "fheprotect/slot_backend.hpp"

namespace fheprotect {

enum class Stage { Compress, Encrypt, Protect };
std::string_view to_string(Stage s);

struct PipelineConfig {
  /// Must be a subsequence of Compress, Encrypt, Protect (in that order).
  std::vector<Stage> stages{Stage::Compress, Stage::Encrypt, Stage::Protect};
  std::size_t compress_dim = 64;
  int m = 5;
  int overlap = 4;
  int c_range = 50;
  /// Per-subject parameter sets are derived from (params_seed, subject_id).
  std::uint64_t params_seed = 1;
  int jobs = 1;
};

/// The plain canonical order check; Pipeline's constructor calls it.
void validate_stage_order(std::span<const Stage> stages);

using ParamsStore = std::map<std::string, PolyProtectParams, std::less<>>;

/// One enrolled subject. `stored` holds the encrypted PolyProtect windows, or
/// for pipelines without a Protect stage the single encrypted embedding (in
/// windows[0]) or the plain features (in values).
struct GalleryRecord {
  int subject_id = 0;
  std::string params_id;
  std::size_t compress_dim = 0;
  ProtectedTemplate stored;
  std::vector<Nonce> nonces;  ///< one per stored ciphertext, used when persisting
  double template_norm = 0.0;
  double norm_bound = 0.0;
};

struct Candidate {
  int subject_id = 0;
  double score = 0.0;
};

/// Derived per-subject seed for gen_params.
std::uint64_t subject_params_seed(std::uint64_t params_seed, int subject_id);

class Pipeline {
 public:
  /// `ctx` and `approx` are required when the stages include Encrypt.
  Pipeline(PipelineConfig config, std::optional<EncryptionContext> ctx,
           std::optional<PolyApprox> approx);

  const PipelineConfig& config() const noexcept { return config_; }
  bool has(Stage s) const noexcept;
  bool encrypted() const noexcept { return has(Stage::Encrypt); }
  const EncryptionContext& context() const;
  const PolyApprox& approx() const;

  PolyProtectParams params_for_subject(int subject_id) const;

  /// Plaintext features after the Compress and Protect stages.
  std::vector<double> plain_features(const Embedding& e, const PolyProtectParams* params) const;

  /// Runs every stage. `params` is required iff the pipeline protects.
  GalleryRecord enroll(const Embedding& e, const PolyProtectParams* params) const;

  /// 1:N search; the probe is transformed with each record's own parameters.
  /// Sorted by score descending, then subject id ascending.
  std::vector<Candidate> identify(const Embedding& probe, std::span<const GalleryRecord> gallery,
                                  const ParamsStore& params_store) const;

  /// Single (probe, record) score.
  double score(const Embedding& probe, const GalleryRecord& record,
               const ParamsStore& params_store) const;

 private:
  PipelineConfig config_;
  std::optional<EncryptionContext> ctx_;
  std::optional<PolyApprox> approx_;
};

/// Encrypted form as one ciphertext (packed template, or the encrypted
/// embedding) plus its logical length.
SlotVector scoring_ciphertext(const GalleryRecord& record);

struct Rank1Result {
  double accuracy = 0.0;
  std::vector<int> truth;      ///< per probe
  std::vector<int> predicted;  ///< rank-1 subject per probe
  std::vector<double> margin;  ///< top1 - top2 score per probe
};

/// Enrolls the first sample of every identity and probes with the rest.
/// Per-subject parameters come from Pipeline::params_for_subject.
Rank1Result rank1_accuracy(std::span<const Embedding> dataset, const Pipeline& pipeline);

}  // namespace fheprotect
