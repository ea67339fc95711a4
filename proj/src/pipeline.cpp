#include "fheprotect/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fheprotect/error.hpp"
#include "fheprotect/parallel.hpp"
#include "fheprotect/summation.hpp"

namespace fheprotect {

namespace {

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return s;
}

}  // namespace

std::string_view to_string(Stage s) {
  switch (s) {
    case Stage::Compress: return "compress";
    case Stage::Encrypt: return "encrypt";
    case Stage::Protect: return "protect";
  }
  return "?";
}

void validate_stage_order(std::span<const Stage> stages) {
  int last = -1;
  for (Stage s : stages) {
    const int rank = static_cast<int>(s);
    if (rank <= last) {
      raise(ErrorKind::InvalidParams,
            "pipeline stages must follow compress -> encrypt -> protect, each at most once");
    }
    last = rank;
  }
}

std::uint64_t subject_params_seed(std::uint64_t params_seed, int subject_id) {
  // splitmix64 finalizer over the pair.
  std::uint64_t z = params_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(subject_id) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

Pipeline::Pipeline(PipelineConfig config, std::optional<EncryptionContext> ctx,
                   std::optional<PolyApprox> approx)
    : config_(std::move(config)), ctx_(std::move(ctx)), approx_(std::move(approx)) {
  validate_stage_order(config_.stages);
  if (has(Stage::Encrypt) && (!ctx_ || !approx_)) {
    raise(ErrorKind::InvalidArgument, "an encrypting pipeline needs a context and an approximant");
  }
  if (has(Stage::Compress) && config_.compress_dim == 0) {
    raise(ErrorKind::InvalidArgument, "compress_dim must be >= 1");
  }
}

bool Pipeline::has(Stage s) const noexcept {
  return std::find(config_.stages.begin(), config_.stages.end(), s) != config_.stages.end();
}

const EncryptionContext& Pipeline::context() const {
  if (!ctx_) raise(ErrorKind::InvalidArgument, "pipeline has no encryption context");
  return *ctx_;
}

const PolyApprox& Pipeline::approx() const {
  if (!approx_) raise(ErrorKind::InvalidArgument, "pipeline has no approximant");
  return *approx_;
}

PolyProtectParams Pipeline::params_for_subject(int subject_id) const {
  return gen_params(config_.m, config_.overlap, config_.c_range,
                    subject_params_seed(config_.params_seed, subject_id));
}

std::vector<double> Pipeline::plain_features(const Embedding& e, const PolyProtectParams* params) const {
  std::vector<double> v = has(Stage::Compress) ? compress_prefix(e, config_.compress_dim).values : e.values;
  if (has(Stage::Protect)) {
    if (params == nullptr) raise(ErrorKind::InvalidArgument, "protecting pipeline needs params");
    v = protect_plain(v, *params).values;
  }
  return v;
}

GalleryRecord Pipeline::enroll(const Embedding& e, const PolyProtectParams* params) const {
  if (has(Stage::Protect) && params == nullptr) {
    raise(ErrorKind::InvalidArgument, "protecting pipeline needs params");
  }
  GalleryRecord rec;
  rec.subject_id = e.subject_id;
  rec.compress_dim = has(Stage::Compress) ? config_.compress_dim : 0;
  if (params != nullptr && has(Stage::Protect)) rec.params_id = params->params_id;

  // The enrolling user holds the plaintext, so the public norm hint is taken
  // from the plaintext template.
  const std::vector<double> plain = plain_features(e, params);
  rec.template_norm = std::sqrt(norm2(plain));
  if (rec.template_norm == 0.0) raise(ErrorKind::ZeroVector, "enrolled template is zero");
  rec.norm_bound = octave_norm_bound(rec.template_norm);

  if (!encrypted()) {
    rec.stored.params_id = rec.params_id;
    rec.stored.values = plain;
    return rec;
  }

  const EncryptionContext& ctx = context();
  std::vector<double> v = has(Stage::Compress) ? compress_prefix(e, config_.compress_dim).values : e.values;
  if (has(Stage::Protect)) {
    rec.stored = protect_embedding_encrypted(v, *params, ctx);
  } else {
    rec.stored.windows.push_back(encrypt(v, ctx));
  }
  for (std::size_t i = 0; i < rec.stored.windows.size(); ++i) {
    rec.nonces.push_back(EncryptionContext::fresh_nonce());
  }
  return rec;
}

SlotVector scoring_ciphertext(const GalleryRecord& record) {
  if (!record.stored.encrypted()) raise(ErrorKind::InvalidArgument, "record is not encrypted");
  if (record.params_id.empty()) return record.stored.windows.front();
  return pack_template(record.stored);
}

double Pipeline::score(const Embedding& probe, const GalleryRecord& record,
                       const ParamsStore& params_store) const {
  const PolyProtectParams* params = nullptr;
  if (has(Stage::Protect)) {
    auto it = params_store.find(record.params_id);
    if (it == params_store.end()) {
      raise(ErrorKind::UnknownParamsId, "no parameters for id '" + record.params_id + "'");
    }
    params = &it->second;
  }
  const std::vector<double> probe_plain = plain_features(probe, params);

  if (!encrypted()) {
    return cosine_plain(probe_plain, record.stored.values);
  }
  if (!record.stored.encrypted()) raise(ErrorKind::InvalidArgument, "record is not encrypted");

  const EncryptionContext& ctx = context();
  const PolyApprox& poly = approx();
  // The probe holder publishes the probe's bound the same way.
  const double probe_norm2 = norm2(probe_plain);
  if (probe_norm2 == 0.0) raise(ErrorKind::ZeroVector, "probe template is zero");
  const auto plan =
      NormalizationPlan::from_norm_bounds(octave_norm_bound(std::sqrt(probe_norm2)), record.norm_bound);

  // Plaintext pre-check: the encrypted path cannot branch on the domain.
  const double scaled = probe_norm2 * record.template_norm * record.template_norm / plan.d_bound;
  if (scaled < poly.domain.lo || scaled > poly.domain.hi) {
    raise(ErrorKind::DomainViolation,
          "probe against subject " + std::to_string(record.subject_id) + ": scaled denominator " +
              std::to_string(scaled) + " outside [" + std::to_string(poly.domain.lo) + ", " +
              std::to_string(poly.domain.hi) + "]");
  }

  std::vector<double> v =
      has(Stage::Compress) ? compress_prefix(probe, config_.compress_dim).values : probe.values;
  SlotVector probe_ct = has(Stage::Protect) ? pack_template(protect_embedding_encrypted(v, *params, ctx))
                                            : encrypt(v, ctx);
  const SlotVector gallery_ct = scoring_ciphertext(record);
  const std::size_t n = probe_ct.logical_len();
  if (gallery_ct.logical_len() != n) {
    raise(ErrorKind::DimensionMismatch, "probe and gallery templates differ in length");
  }
  const SlotVector s = cosine_encrypted(probe_ct, gallery_ct, n, plan, poly);
  return decrypt_all_slots(s, ctx).front();
}

std::vector<Candidate> Pipeline::identify(const Embedding& probe, std::span<const GalleryRecord> gallery,
                                          const ParamsStore& params_store) const {
  if (gallery.empty()) raise(ErrorKind::EmptyGallery, "identify needs a nonempty gallery");
  std::vector<Candidate> out(gallery.size());
  parallel_for(gallery.size(), config_.jobs, [&](std::size_t i) {
    out[i] = Candidate{gallery[i].subject_id, score(probe, gallery[i], params_store)};
  });
  std::sort(out.begin(), out.end(), [](const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score > b.score;
    return a.subject_id < b.subject_id;
  });
  return out;
}

Rank1Result rank1_accuracy(std::span<const Embedding> dataset, const Pipeline& pipeline) {
  std::vector<GalleryRecord> gallery;
  ParamsStore store;
  std::vector<const Embedding*> probes;
  std::set<int> enrolled;
  for (const auto& e : dataset) {
    if (enrolled.insert(e.subject_id).second) {
      std::optional<PolyProtectParams> params;
      if (pipeline.has(Stage::Protect)) {
        params = pipeline.params_for_subject(e.subject_id);
        store.emplace(params->params_id, *params);
      }
      gallery.push_back(pipeline.enroll(e, params ? &*params : nullptr));
    } else {
      probes.push_back(&e);
    }
  }
  Rank1Result r;
  if (probes.empty()) return r;
  r.truth.resize(probes.size());
  r.predicted.resize(probes.size());
  r.margin.resize(probes.size());

  // Parallelism lives at the probe level; identify runs serially inside.
  PipelineConfig serial = pipeline.config();
  const int jobs = serial.jobs;
  serial.jobs = 1;
  const Pipeline inner(serial, pipeline.encrypted() ? std::optional(pipeline.context()) : std::nullopt,
                       pipeline.encrypted() ? std::optional(pipeline.approx()) : std::nullopt);
  parallel_for(probes.size(), jobs, [&](std::size_t i) {
    const auto ranked = inner.identify(*probes[i], gallery, store);
    r.truth[i] = probes[i]->subject_id;
    r.predicted[i] = ranked.front().subject_id;
    r.margin[i] = ranked.size() > 1 ? ranked[0].score - ranked[1].score : 0.0;
  });
  std::size_t hits = 0;
  for (std::size_t i = 0; i < probes.size(); ++i) hits += r.truth[i] == r.predicted[i];
  r.accuracy = static_cast<double>(hits) / static_cast<double>(probes.size());
  return r;
}

}  // namespace fheprotect
