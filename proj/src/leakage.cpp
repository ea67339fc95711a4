#include "fheprotect/leakage.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <map>
#include <ostream>
#include <random>
#include <set>

#include "fheprotect/error.hpp"
#include "fheprotect/parallel.hpp"

namespace fheprotect {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

Nonce derived_nonce(std::uint64_t seed, std::uint64_t index) {
  Nonce n{};
  const std::uint64_t a = splitmix64(seed ^ splitmix64(index));
  const std::uint64_t b = splitmix64(a);
  for (int i = 0; i < 8; ++i) {
    n[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(a >> (8 * i));
    n[static_cast<std::size_t>(8 + i)] = static_cast<std::uint8_t>(b >> (8 * i));
  }
  return n;
}

Eigen::MatrixXd to_matrix(std::span<const PlainVector> features) {
  const std::size_t f = features.empty() ? 0 : features.front().size();
  Eigen::MatrixXd x(static_cast<Eigen::Index>(features.size()), static_cast<Eigen::Index>(f));
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != f) raise(ErrorKind::DimensionMismatch, "ragged feature matrix");
    for (std::size_t j = 0; j < f; ++j) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = features[i][j];
    }
  }
  return x;
}

template <typename T>
std::vector<T> gather(std::span<const T> v, std::span<const std::size_t> idx) {
  std::vector<T> out;
  out.reserve(idx.size());
  for (std::size_t i : idx) out.push_back(v[i]);
  return out;
}

std::string_view to_string_attr(Attribute a) { return to_string(a); }

}  // namespace

int LinearClassifier::predict(std::span<const double> x) const {
  if (x.size() != num_features()) {
    raise(ErrorKind::DimensionMismatch, "classifier expects " + std::to_string(num_features()) +
                                            " features, got " + std::to_string(x.size()));
  }
  Eigen::VectorXd z(static_cast<Eigen::Index>(x.size()));
  for (std::size_t j = 0; j < x.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    z(jj) = (x[j] - mean(jj)) / scale(jj);
  }
  const Eigen::VectorXd logits = weights * z + bias;
  Eigen::Index best = 0;
  logits.maxCoeff(&best);
  return classes[static_cast<std::size_t>(best)];
}

LinearClassifier train_attr_classifier(std::span<const PlainVector> features, std::span<const int> labels,
                                       const TrainOptions& opts) {
  if (features.size() != labels.size()) {
    raise(ErrorKind::DimensionMismatch, "features and labels differ in count");
  }
  std::set<int> label_set(labels.begin(), labels.end());
  if (label_set.size() < 2) raise(ErrorKind::DegenerateLabels, "training labels contain a single class");
  if (opts.epochs < 0 || !(opts.learning_rate > 0.0)) {
    raise(ErrorKind::InvalidArgument, "epochs must be >= 0 and learning_rate > 0");
  }

  LinearClassifier clf;
  clf.classes.assign(label_set.begin(), label_set.end());
  clf.train_meta = opts;
  std::map<int, Eigen::Index> row_of;
  for (std::size_t c = 0; c < clf.classes.size(); ++c) row_of[clf.classes[c]] = static_cast<Eigen::Index>(c);

  Eigen::MatrixXd x = to_matrix(features);
  const Eigen::Index n = x.rows();
  const Eigen::Index f = x.cols();
  const auto k = static_cast<Eigen::Index>(clf.classes.size());

  clf.mean = x.colwise().mean().transpose();
  x.rowwise() -= clf.mean.transpose();
  clf.scale = (x.array().square().colwise().sum() / static_cast<double>(n)).sqrt().transpose();
  for (Eigen::Index j = 0; j < f; ++j) {
    if (!(clf.scale(j) > 1e-12)) clf.scale(j) = 1.0;
  }
  x.array().rowwise() /= clf.scale.transpose().array();

  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) y(i, row_of.at(labels[static_cast<std::size_t>(i)])) = 1.0;

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<double> init(0.0, 0.01);
  clf.weights.resize(k, f);
  for (Eigen::Index c = 0; c < k; ++c) {
    for (Eigen::Index j = 0; j < f; ++j) clf.weights(c, j) = init(rng);
  }
  clf.bias = Eigen::VectorXd::Zero(k);

  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < opts.epochs; ++epoch) {
    Eigen::MatrixXd logits = x * clf.weights.transpose();
    logits.rowwise() += clf.bias.transpose();
    const Eigen::VectorXd row_max = logits.rowwise().maxCoeff();
    logits.colwise() -= row_max;
    Eigen::MatrixXd p = logits.array().exp().matrix();
    const Eigen::VectorXd row_sum = p.rowwise().sum();
    p.array().colwise() /= row_sum.array();
    const Eigen::MatrixXd g = (p - y) * inv_n;
    clf.weights -= opts.learning_rate * (g.transpose() * x + opts.l2 * clf.weights);
    clf.bias -= opts.learning_rate * g.colwise().sum().transpose();
  }
  return clf;
}

double eval_accuracy(const LinearClassifier& clf, std::span<const PlainVector> features,
                     std::span<const int> labels) {
  if (features.size() != labels.size()) {
    raise(ErrorKind::DimensionMismatch, "features and labels differ in count");
  }
  if (features.empty()) return 0.0;
  std::size_t hits = 0;
  for (std::size_t i = 0; i < features.size(); ++i) hits += clf.predict(features[i]) == labels[i];
  return static_cast<double>(hits) / static_cast<double>(features.size());
}

PlainVector features_from_bytes(std::span<const std::uint8_t> bytes) {
  PlainVector out(256 + kDumpSlotFeatures, 0.0);
  for (std::uint8_t b : bytes) out[b] += 1.0;
  if (!bytes.empty()) {
    for (std::size_t i = 0; i < 256; ++i) out[i] /= static_cast<double>(bytes.size());
  }
  for (std::size_t s = 0; s < kDumpSlotFeatures; ++s) {
    const std::size_t off = kSerializedHeaderSize + 8 * s;
    if (off + 8 > bytes.size()) break;
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[off + static_cast<std::size_t>(i)]) << (8 * i);
    const double v = std::bit_cast<double>(bits);
    out[256 + s] = std::isfinite(v) ? std::copysign(std::log1p(std::abs(v)), v) : 0.0;
  }
  return out;
}

std::vector<PlainVector> ciphertext_features(std::span<const SlotVector> records, const EncryptionContext& ctx,
                                             std::uint64_t nonce_seed, SerializeOptions opts) {
  std::vector<PlainVector> out;
  out.reserve(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    out.push_back(features_from_bytes(serialize_ciphertext(records[i], ctx, derived_nonce(nonce_seed, i), opts)));
  }
  return out;
}

double privacy_gain(double r_o, double r_p) { return (1.0 - r_p) - (1.0 - r_o); }

double suppression_rate(double a_o, double a_p) {
  if (a_o == 0.0) raise(ErrorKind::ZeroBaseline, "suppression rate needs a nonzero baseline accuracy");
  return (a_o - a_p) / a_o;
}

double chance_baseline(std::span<const int> labels, int num_classes) {
  if (num_classes < 1) raise(ErrorKind::InvalidArgument, "num_classes must be >= 1");
  double majority = 0.0;
  if (!labels.empty()) {
    std::map<int, std::size_t> counts;
    for (int l : labels) ++counts[l];
    std::size_t best = 0;
    for (const auto& [label, c] : counts) best = std::max(best, c);
    majority = static_cast<double>(best) / static_cast<double>(labels.size());
  }
  return std::max(majority, 1.0 / num_classes);
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::None: return "None";
    case Variant::PolyProtect: return "PolyProtect";
    case Variant::Mrl: return "MRL";
    case Variant::MrlPolyProtect: return "MRL+PolyProtect";
    case Variant::MrlFhe: return "MRL+FHE";
    case Variant::MrlPolyProtectFhe: return "MRL+PolyProtect+FHE";
  }
  return "?";
}

Variant parse_variant(std::string_view name) {
  for (Variant v : kAllVariants) {
    if (to_string(v) == name) return v;
  }
  raise(ErrorKind::InvalidArgument, "unknown variant '" + std::string(name) + "'");
}

bool uses_fhe(Variant v) { return v == Variant::MrlFhe || v == Variant::MrlPolyProtectFhe; }

Split split_by_identity(std::span<const Embedding> dataset, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    raise(ErrorKind::InvalidArgument, "train_fraction must be in (0, 1)");
  }
  // Identities grouped by label cell, each cell split separately.
  std::map<int, Attributes> attrs_of;
  for (const auto& e : dataset) attrs_of.emplace(e.subject_id, e.attributes);
  std::map<int, std::vector<int>> by_cell;
  for (const auto& [id, a] : attrs_of) by_cell[a.gender + 2 * a.age_band + 8 * a.ethnicity].push_back(id);

  std::mt19937_64 rng(seed);
  for (auto& [cell, ids] : by_cell) std::shuffle(ids.begin(), ids.end(), rng);
  // Cells are visited in random order so rounding does not favour one label.
  std::vector<std::vector<int>*> cells;
  for (auto& [cell, ids] : by_cell) cells.push_back(&ids);
  std::mt19937_64 order_rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::shuffle(cells.begin(), cells.end(), order_rng);
  std::set<int> train_ids;
  double carry = 0.0;
  for (auto* cell : cells) {
    const auto& ids = *cell;
    // Fractional shares carry over between cells so the total is exact.
    carry += train_fraction * static_cast<double>(ids.size());
    const auto take = std::min(ids.size(), static_cast<std::size_t>(std::floor(carry + 1e-9)));
    carry -= static_cast<double>(take);
    train_ids.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(take));
  }
  Split s;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    (train_ids.count(dataset[i].subject_id) ? s.train : s.test).push_back(i);
  }
  return s;
}

std::vector<PlainVector> variant_features(std::span<const Embedding> dataset, Variant variant,
                                          const LeakageOptions& opts, const EncryptionContext* ctx) {
  const bool compress = variant != Variant::None && variant != Variant::PolyProtect;
  const bool protect = variant == Variant::PolyProtect || variant == Variant::MrlPolyProtect ||
                       variant == Variant::MrlPolyProtectFhe;
  if (uses_fhe(variant) && ctx == nullptr) {
    raise(ErrorKind::InvalidArgument, "variant " + std::string(to_string(variant)) + " needs a context");
  }
  std::optional<PolyProtectParams> shared;
  if (protect && opts.shared_params) shared = gen_params(opts.m, opts.overlap, opts.c_range, opts.params_seed);

  std::vector<PlainVector> out(dataset.size());
  std::vector<SlotVector> cts;
  if (uses_fhe(variant)) cts.resize(dataset.size(), encrypt(std::vector<double>{0.0}, *ctx));
  parallel_for(dataset.size(), opts.jobs, [&](std::size_t i) {
    const Embedding& e = dataset[i];
    PlainVector v = compress ? compress_prefix(e, opts.compress_dim).values : e.values;
    PolyProtectParams params;
    if (protect) {
      params = shared ? *shared
                      : gen_params(opts.m, opts.overlap, opts.c_range,
                                   splitmix64(opts.params_seed ^ static_cast<std::uint64_t>(e.subject_id)));
    }
    if (!uses_fhe(variant)) {
      out[i] = protect ? protect_plain(v, params).values : std::move(v);
    } else if (protect) {
      cts[i] = pack_template(protect_embedding_encrypted(v, params, *ctx));
    } else {
      cts[i] = encrypt(v, *ctx);
    }
  });
  if (uses_fhe(variant)) out = ciphertext_features(cts, *ctx, opts.params_seed ^ 0x5eedULL, opts.serialize);
  return out;
}

double attribute_accuracy(std::span<const PlainVector> features, std::span<const Embedding> dataset,
                          Attribute attribute, const Split& split, const TrainOptions& train) {
  std::vector<int> labels(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) labels[i] = dataset[i].attributes.get(attribute);
  const std::span<const int> all_labels(labels);
  const auto clf = train_attr_classifier(gather(features, split.train), gather(all_labels, split.train), train);
  return eval_accuracy(clf, gather(features, split.test), gather(all_labels, split.test));
}

std::vector<LeakageReport> run_leakage_suite(std::span<const Embedding> dataset, std::span<const Variant> variants,
                                             const EncryptionContext* ctx, const LeakageOptions& opts) {
  if (dataset.empty()) raise(ErrorKind::InvalidArgument, "empty dataset");
  const Split split = split_by_identity(dataset, opts.train_fraction, opts.split_seed);

  std::vector<Variant> todo{Variant::None};
  for (Variant v : variants) {
    if (std::find(todo.begin(), todo.end(), v) == todo.end()) todo.push_back(v);
  }
  std::vector<std::vector<PlainVector>> feats;
  feats.reserve(todo.size());
  for (Variant v : todo) feats.push_back(variant_features(dataset, v, opts, ctx));

  // accuracy[variant][attribute], the grid runs in parallel.
  const std::size_t n_attr = kAllAttributes.size();
  std::vector<double> acc(todo.size() * n_attr, 0.0);
  parallel_for(acc.size(), opts.jobs, [&](std::size_t cell) {
    const std::size_t vi = cell / n_attr;
    acc[cell] = attribute_accuracy(feats[vi], dataset, kAllAttributes[cell % n_attr], split, opts.train);
  });

  std::vector<LeakageReport> reports;
  for (std::size_t ai = 0; ai < n_attr; ++ai) {
    const Attribute a = kAllAttributes[ai];
    std::vector<int> test_labels;
    for (std::size_t i : split.test) test_labels.push_back(dataset[i].attributes.get(a));
    const double chance = chance_baseline(test_labels, num_classes(a));
    const double a_o = acc[ai];
    for (Variant v : variants) {
      const auto vi = static_cast<std::size_t>(std::find(todo.begin(), todo.end(), v) - todo.begin());
      LeakageReport r;
      r.attribute = a;
      r.variant = v;
      r.a_o = r.r_o = a_o;
      r.a_p = r.r_p = acc[vi * n_attr + ai];
      r.pg = privacy_gain(r.r_o, r.r_p);
      r.sr = suppression_rate(r.a_o, r.a_p);
      r.chance = chance;
      reports.push_back(r);
    }
  }
  return reports;
}

void write_leakage_csv(std::ostream& os, std::span<const LeakageReport> reports) {
  os << "attribute,variant,a_o,a_p,pg_x100,sr,chance\n";
  char buf[256];
  for (const auto& r : reports) {
    std::snprintf(buf, sizeof buf, "%s,%s,%.4f,%.4f,%.2f,%.4f,%.4f\n", to_string_attr(r.attribute).data(),
                  to_string(r.variant).data(), r.a_o, r.a_p, 100.0 * r.pg, r.sr, r.chance);
    os << buf;
  }
}

std::string_view to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Overlap: return "overlap";
    case SweepParam::M: return "m";
    case SweepParam::CRange: return "c_range";
  }
  return "?";
}

SweepParam parse_sweep_param(std::string_view name) {
  for (SweepParam p : {SweepParam::Overlap, SweepParam::M, SweepParam::CRange}) {
    if (to_string(p) == name) return p;
  }
  raise(ErrorKind::InvalidArgument, "unknown sweep parameter '" + std::string(name) + "'");
}

std::vector<AblationRow> ablation_sweep(SweepParam param, std::span<const int> values,
                                        std::span<const Embedding> dataset, const AblationOptions& opts) {
  if (dataset.empty()) raise(ErrorKind::InvalidArgument, "empty dataset");
  const Split split = split_by_identity(dataset, opts.leakage.train_fraction, opts.leakage.split_seed);
  const auto ctx = EncryptionContext::create(
      ContextParams{opts.audit_slot_capacity, opts.audit_depth_budget, 0.0}, opts.audit_key_seed);

  std::vector<AblationRow> rows;
  for (int value : values) {
    LeakageOptions lo = opts.leakage;
    switch (param) {
      case SweepParam::Overlap: lo.overlap = value; break;
      case SweepParam::M: lo.m = value; break;
      case SweepParam::CRange: lo.c_range = value; break;
    }
    std::vector<AblationRow> block(kAllAttributes.size());
    for (std::size_t ai = 0; ai < block.size(); ++ai) {
      block[ai].param = param;
      block[ai].value = value;
      block[ai].attribute = kAllAttributes[ai];
      std::vector<int> test_labels;
      for (std::size_t i : split.test) test_labels.push_back(dataset[i].attributes.get(kAllAttributes[ai]));
      block[ai].chance = chance_baseline(test_labels, num_classes(kAllAttributes[ai]));
    }
    try {
      const auto params = gen_params(lo.m, lo.overlap, lo.c_range, lo.params_seed);
      const auto probe = compress_prefix(dataset.front(), lo.compress_dim);
      const auto t = protect_embedding_encrypted(probe.values, params, ctx);
      int depth = 0;
      for (const auto& w : t.windows) depth = std::max(depth, w.depth_used());

      const auto feats = variant_features(dataset, Variant::MrlPolyProtect, lo, nullptr);
      std::vector<double> acc(block.size());
      parallel_for(block.size(), lo.jobs, [&](std::size_t ai) {
        acc[ai] = attribute_accuracy(feats, dataset, kAllAttributes[ai], split, lo.train);
      });
      for (std::size_t ai = 0; ai < block.size(); ++ai) {
        block[ai].accuracy = acc[ai];
        block[ai].depth_used = depth;
      }
    } catch (const Error& e) {
      for (auto& r : block) r.error = e.what();
    }
    rows.insert(rows.end(), block.begin(), block.end());
  }
  return rows;
}

void write_ablation_csv(std::ostream& os, std::span<const AblationRow> rows) {
  os << "param,value,attribute,accuracy,chance,depth_used,error\n";
  char buf[64];
  for (const auto& r : rows) {
    os << to_string(r.param) << ',' << r.value << ',' << to_string(r.attribute) << ',';
    if (r.accuracy) {
      std::snprintf(buf, sizeof buf, "%.4f", *r.accuracy);
      os << buf;
    }
    std::snprintf(buf, sizeof buf, ",%.4f,", r.chance);
    os << buf;
    if (r.depth_used) os << *r.depth_used;
    os << ',';
    // Quote the message; it may contain commas.
    std::string msg = r.error;
    std::string quoted;
    for (char c : msg) {
      if (c == '"') quoted += '"';
      quoted += c;
    }
    if (!quoted.empty()) os << '"' << quoted << '"';
    os << '\n';
  }
}

}  // namespace fheprotect
