#include "fheprotect/cli.hpp"

#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <set>
#include <stdexcept>

#include "CLI11.hpp"
#include "fheprotect/approx.hpp"
#include "fheprotect/dataset.hpp"
#include "fheprotect/error.hpp"
#include "fheprotect/gallery_io.hpp"
#include "fheprotect/leakage.hpp"
#include "fheprotect/parallel.hpp"
#include "fheprotect/pipeline.hpp"
#include "fheprotect/polyprotect.hpp"
#include "fheprotect/summation.hpp"
#include "json.hpp"

namespace fheprotect::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

struct Globals {
  std::uint64_t seed = 1;
  int jobs = 1;
  std::string out_dir = ".";
};

struct CtxOpts {
  std::size_t slot_capacity = 128;
  int depth_budget = 24;
  double noise_stddev = 0.0;
  std::uint64_t key_seed = 1;

  EncryptionContext make() const {
    return EncryptionContext::create(ContextParams{slot_capacity, depth_budget, noise_stddev}, key_seed);
  }
};

struct ApproxOpts {
  int degree = 8;
  double lo = kOctavePairDomain.lo;
  double hi = 1.0;
  std::size_t nodes = 256;

  PolyApprox make() const { return fit_inv_sqrt(degree, Interval{lo, hi}, nodes); }
};

struct DataOpts {
  std::string path;
  SyntheticSpec spec;

  std::vector<Embedding> load(std::uint64_t seed) const {
    if (!path.empty()) return read_dataset_csv(path);
    SyntheticSpec s = spec;
    s.seed = seed;
    return gen_synthetic_dataset(s);
  }
};

struct ProtectOpts {
  int m = 5;
  int overlap = 4;
  int c_range = 50;
};

void add_ctx(CLI::App* app, CtxOpts& o) {
  app->add_option("--slot-capacity", o.slot_capacity, "Slots per ciphertext (power of two)")->capture_default_str();
  app->add_option("--depth-budget", o.depth_budget, "Multiplicative depth budget")->capture_default_str();
  app->add_option("--noise-stddev", o.noise_stddev, "Per-multiplication noise, 0 for exact mode")
      ->capture_default_str();
  app->add_option("--key-seed", o.key_seed, "Seed the key material is derived from")->capture_default_str();
}

void add_approx(CLI::App* app, ApproxOpts& o) {
  app->add_option("--degree", o.degree, "Inverse square root polynomial degree")->capture_default_str();
  app->add_option("--domain-lo", o.lo, "Lower end of the fit domain")->capture_default_str();
  app->add_option("--domain-hi", o.hi, "Upper end of the fit domain")->capture_default_str();
  app->add_option("--nodes", o.nodes, "Chebyshev nodes used by the fit")->capture_default_str();
}

void add_data(CLI::App* app, DataOpts& o) {
  app->add_option("--data", o.path, "Dataset CSV; synthetic data is generated when omitted");
  app->add_option("--num-ids", o.spec.num_ids, "Synthetic identities")->capture_default_str();
  app->add_option("--samples-per-id", o.spec.samples_per_id, "Synthetic samples per identity")
      ->capture_default_str();
  app->add_option("--dim", o.spec.dim, "Synthetic embedding dimension")->capture_default_str();
  app->add_option("--class-separation", o.spec.class_separation, "Synthetic identity separation")
      ->capture_default_str();
  app->add_option("--attribute-correlation", o.spec.attribute_correlation,
                  "Fraction of coordinates carrying attribute signal")
      ->capture_default_str();
}

void add_protect(CLI::App* app, ProtectOpts& o) {
  app->add_option("--m", o.m, "PolyProtect window width")->capture_default_str();
  app->add_option("--overlap", o.overlap, "PolyProtect window overlap")->capture_default_str();
  app->add_option("--c-range", o.c_range, "PolyProtect coefficient range")->capture_default_str();
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream os(p);
  if (!os) raise(ErrorKind::Io, "cannot write " + p.string());
  return os;
}

// Parses "a..b" (powers of two from a to b) or a comma list.
std::vector<std::size_t> parse_sizes(const std::string& s) {
  std::vector<std::size_t> out;
  if (auto pos = s.find(".."); pos != std::string::npos) {
    const std::size_t a = std::stoul(s.substr(0, pos));
    const std::size_t b = std::stoul(s.substr(pos + 2));
    if (a < 1 || a > b) raise(ErrorKind::InvalidArgument, "bad size range '" + s + "'");
    for (std::size_t n = a; n <= b; n *= 2) out.push_back(n);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoul(item));
  }
  if (out.empty()) raise(ErrorKind::InvalidArgument, "no sizes given");
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  if (auto pos = s.find(".."); pos != std::string::npos) {
    const int a = std::stoi(s.substr(0, pos));
    const int b = std::stoi(s.substr(pos + 2));
    for (int v = a; v <= b; ++v) out.push_back(v);
    return out;
  }
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

class Runner {
 public:
  Runner(std::ostream& out, std::ostream& err) : out_(out), err_(err) {}

  int run(const std::vector<std::string>& args) {
    CLI::App app{"Template protection over a simulated homomorphic slot engine", "fheprotect"};
    app.set_version_flag("--version", kVersion);
    app.set_config("--config", "", "INI config file; [section] names match subcommands");
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--seed", g_.seed, "Master seed")->capture_default_str();
    app.add_option("--jobs", g_.jobs, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    app.add_option("--out-dir", g_.out_dir, "Output directory")->capture_default_str();

    setup_gen_data(app);
    setup_gen_params(app);
    setup_enroll(app);
    setup_identify(app);
    setup_bench_sum(app);
    setup_fit_invsqrt(app);
    setup_eval_leakage(app);
    setup_ablation(app);

    std::vector<const char*> argv;
    argv.reserve(args.size());
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::CallForVersion& e) {
      return app.exit(e, out_, err_);
    } catch (const CLI::ParseError& e) {
      app.exit(e, err_, err_);
      err_ << app.help();
      return kExitUsage;
    }

    try {
      CLI::App* sub = app.get_subcommands().front();
      const std::string config_ini = app.config_to_str(true, false);
      fs::create_directories(g_.out_dir);
      command_(sub->get_name());
      write_manifest(sub->get_name(), config_ini);
      return kExitOk;
    } catch (const Error& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitDataError;
    } catch (const std::exception& e) {
      err_ << "error: " << e.what() << '\n';
      return kExitDataError;
    }
  }

 private:
  using Command = std::function<void(const std::string&)>;

  fs::path out_path(const std::string& name) const { return fs::path(g_.out_dir) / name; }

  void note_output(const fs::path& p) { outputs_.push_back(p.lexically_relative(g_.out_dir).generic_string()); }

  void write_manifest(const std::string& command, const std::string& config_ini) {
    {
      auto os = open_out(out_path("run_config.ini"));
      os << config_ini;
    }
    std::ostringstream hash;
    hash << std::hex << std::setw(16) << std::setfill('0') << fnv1a(config_ini);
    json m;
    m["command"] = command;
    m["seed"] = g_.seed;
    m["jobs"] = g_.jobs;
    m["config_file"] = "run_config.ini";
    m["config_hash"] = hash.str();
    m["versions"] = {{"fheprotect", kVersion},
                     {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                   "." + std::to_string(EIGEN_MINOR_VERSION)},
                     {"compiler", __VERSION__},
                     {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                  std::to_string(NLOHMANN_JSON_VERSION_MINOR)},
                     {"cli11", CLI11_VERSION}};
    m["outputs"] = outputs_;
    auto os = open_out(out_path("run_manifest.json"));
    os << m.dump(2) << '\n';
  }

  void setup_gen_data(CLI::App& app) {
    auto* sub = app.add_subcommand("gen-data", "Generate a synthetic labeled embedding dataset");
    add_data(sub, data_);
    sub->add_option("--output", output_, "File name inside the output directory")->default_val("dataset.csv");
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const auto data = data_.load(g_.seed);
        const auto p = out_path(output_);
        fs::create_directories(p.parent_path());
        write_dataset_csv(p, data);
        note_output(p);
        out_ << "wrote " << data.size() << " embeddings to " << p.string() << '\n';
      };
    });
  }

  void setup_gen_params(CLI::App& app) {
    auto* sub = app.add_subcommand("gen-params", "Generate PolyProtect parameter sets");
    add_protect(sub, protect_);
    sub->add_option("--count", count_, "Number of parameter sets")->capture_default_str()->check(CLI::PositiveNumber);
    sub->callback([this] {
      command_ = [this](const std::string&) {
        ParamsStore store;
        for (int i = 0; i < count_; ++i) {
          auto p = gen_params(protect_.m, protect_.overlap, protect_.c_range, subject_params_seed(g_.seed, i));
          out_ << p.params_id << '\n';
          store.emplace(p.params_id, std::move(p));
        }
        const auto p = out_path("params.json");
        save_params_store(p, store);
        note_output(p);
      };
    });
  }

  PipelineConfig pipeline_config(bool plain) const {
    PipelineConfig cfg;
    if (plain) cfg.stages = {Stage::Compress, Stage::Protect};
    cfg.compress_dim = compress_dim_;
    cfg.m = protect_.m;
    cfg.overlap = protect_.overlap;
    cfg.c_range = protect_.c_range;
    cfg.params_seed = g_.seed;
    cfg.jobs = g_.jobs;
    return cfg;
  }

  void setup_enroll(CLI::App& app) {
    auto* sub = app.add_subcommand("enroll", "Enroll the first sample of every identity into a gallery");
    add_data(sub, data_);
    add_protect(sub, protect_);
    add_ctx(sub, ctx_);
    sub->add_option("--compress-dim", compress_dim_, "Prefix kept by compression")->capture_default_str();
    sub->add_flag("--plain", plain_, "Store plaintext protected templates instead of ciphertexts");
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const auto data = data_.load(g_.seed);
        const PipelineConfig cfg = pipeline_config(plain_);
        std::optional<EncryptionContext> ctx;
        std::optional<PolyApprox> approx;
        if (!plain_) {
          ctx = ctx_.make();
          approx = approx_.make();
        }
        const Pipeline pipe(cfg, ctx, approx);
        std::vector<const Embedding*> firsts;
        std::set<int> seen;
        for (const auto& e : data) {
          if (seen.insert(e.subject_id).second) firsts.push_back(&e);
        }
        std::vector<GalleryRecord> records(firsts.size());
        std::vector<PolyProtectParams> params(firsts.size());
        parallel_for(firsts.size(), g_.jobs, [&](std::size_t i) {
          params[i] = pipe.params_for_subject(firsts[i]->subject_id);
          records[i] = pipe.enroll(*firsts[i], &params[i]);
        });
        ParamsStore store;
        for (auto& p : params) store.emplace(p.params_id, p);
        const auto gdir = out_path("gallery");
        save_gallery(gdir, records, ctx ? &*ctx : nullptr);
        save_params_store(out_path("params.json"), store);
        note_output(gdir / "manifest.json");
        note_output(out_path("params.json"));
        out_ << "enrolled " << records.size() << " subjects into " << gdir.string() << '\n';
      };
    });
  }

  void setup_identify(CLI::App& app) {
    auto* sub = app.add_subcommand("identify", "1:N search of probe embeddings against a saved gallery");
    sub->add_option("--gallery", gallery_dir_, "Gallery directory written by enroll")->required();
    sub->add_option("--params", params_path_, "Parameter store JSON")->required();
    sub->add_option("--probe", probe_path_, "Probe embeddings (dataset CSV)")->required();
    add_ctx(sub, ctx_);
    add_approx(sub, approx_);
    sub->add_option("--top", top_, "Candidates written per probe, 0 for all")->capture_default_str();
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const json manifest = [&] {
          std::ifstream in(fs::path(gallery_dir_) / "manifest.json");
          if (!in) raise(ErrorKind::Io, "cannot open gallery manifest in " + gallery_dir_);
          try {
            return json::parse(in);
          } catch (const json::exception& e) {
            raise(ErrorKind::CorruptData, e.what());
          }
        }();
        const bool encrypted = !manifest.value("ctx", json()).is_null();
        std::optional<EncryptionContext> ctx;
        std::optional<PolyApprox> approx;
        if (encrypted) {
          ctx = ctx_.make();
          approx = approx_.make();
        }
        const auto gallery = load_gallery(gallery_dir_, ctx ? &*ctx : nullptr);
        if (gallery.empty()) raise(ErrorKind::EmptyGallery, "gallery has no records");
        const ParamsStore store = load_params_store(params_path_);

        PipelineConfig cfg;
        cfg.stages.clear();
        if (gallery.front().compress_dim > 0) cfg.stages.push_back(Stage::Compress);
        if (encrypted) cfg.stages.push_back(Stage::Encrypt);
        if (!gallery.front().params_id.empty()) cfg.stages.push_back(Stage::Protect);
        cfg.compress_dim = std::max<std::size_t>(gallery.front().compress_dim, 1);
        cfg.jobs = g_.jobs;
        const Pipeline pipe(cfg, ctx, approx);

        const auto probes = read_dataset_csv(probe_path_);
        const auto p = out_path("identify.csv");
        auto os = open_out(p);
        os << "probe,probe_subject,rank,subject_id,score\n" << std::setprecision(10);
        for (std::size_t i = 0; i < probes.size(); ++i) {
          const auto ranked = pipe.identify(probes[i], gallery, store);
          const std::size_t n = top_ == 0 ? ranked.size() : std::min(top_, ranked.size());
          for (std::size_t r = 0; r < n; ++r) {
            os << i << ',' << probes[i].subject_id << ',' << r + 1 << ',' << ranked[r].subject_id << ','
               << ranked[r].score << '\n';
          }
          out_ << "rank1 probe=" << i << " subject=" << ranked.front().subject_id << " score=" << std::setprecision(6)
               << ranked.front().score << '\n';
        }
        note_output(p);
      };
    });
  }

  void setup_bench_sum(CLI::App& app) {
    auto* sub = app.add_subcommand("bench-sum", "Rotation and wall-time benchmark of the summation kernels");
    sub->add_option("--sizes", sizes_, "Range a..b (powers of two) or comma list")->capture_default_str();
    sub->add_option("--repeats", repeats_, "Timing repeats, minimum is reported")->capture_default_str();
    sub->add_flag("--no-wall", no_wall_, "Omit the wall-time column");
    add_ctx(sub, bench_ctx_);
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const auto sizes = parse_sizes(sizes_);
        const auto ctx = bench_ctx_.make();
        const auto rows = bench_summation(sizes, ctx, BenchOptions{repeats_, g_.seed});
        const auto p = out_path("bench_sum.csv");
        auto os = open_out(p);
        write_bench_csv(os, rows, !no_wall_);
        note_output(p);
        out_ << "wrote " << rows.size() << " rows to " << p.string() << '\n';
      };
    });
  }

  void setup_fit_invsqrt(CLI::App& app) {
    auto* sub = app.add_subcommand("fit-invsqrt", "Fit a polynomial to 1/sqrt(x) and report its error");
    add_approx(sub, fit_approx_);
    sub->add_option("--curve-points", curve_points_, "Grid size of the error curve CSV")->capture_default_str();
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const auto a = fit_approx_.make();
        json j;
        j["degree"] = a.degree;
        j["domain"] = {a.domain.lo, a.domain.hi};
        j["coeffs"] = a.coeffs;
        j["max_rel_err"] = a.fit_report.max_rel_err;
        j["mean_rel_err"] = a.fit_report.mean_rel_err;
        j["n_samples"] = a.fit_report.n_samples;
        j["seed"] = a.fit_report.seed;
        const auto pj = out_path("invsqrt_fit.json");
        open_out(pj) << j.dump(2) << '\n';
        const auto pc = out_path("invsqrt_curve.csv");
        auto os = open_out(pc);
        os << "x,px,rel_err\n" << std::setprecision(12);
        for (const auto& pt : approx_curve(a, curve_points_)) os << pt.x << ',' << pt.px << ',' << pt.rel_err << '\n';
        note_output(pj);
        note_output(pc);
        out_ << "degree " << a.degree << " max_rel_err " << a.fit_report.max_rel_err << '\n';
      };
    });
  }

  LeakageOptions leakage_options() const {
    LeakageOptions lo;
    lo.compress_dim = compress_dim_;
    lo.m = protect_.m;
    lo.overlap = protect_.overlap;
    lo.c_range = protect_.c_range;
    lo.params_seed = g_.seed;
    lo.shared_params = !per_subject_params_;
    lo.split_seed = g_.seed;
    lo.train.epochs = epochs_;
    lo.train.learning_rate = learning_rate_;
    lo.train.seed = g_.seed;
    lo.serialize.mask = !no_mask_;
    lo.jobs = g_.jobs;
    return lo;
  }

  void add_leakage_flags(CLI::App* sub) {
    add_data(sub, leak_data_);
    add_protect(sub, protect_);
    sub->add_option("--compress-dim", compress_dim_, "Prefix kept by compression")->capture_default_str();
    sub->add_option("--epochs", epochs_, "Classifier training epochs")->capture_default_str();
    sub->add_option("--learning-rate", learning_rate_, "Classifier learning rate")->capture_default_str();
    sub->add_flag("--per-subject-params", per_subject_params_, "Give every subject its own parameters");
  }

  void setup_eval_leakage(CLI::App& app) {
    auto* sub = app.add_subcommand("eval-leakage", "Soft-biometric leakage report over protection variants");
    add_leakage_flags(sub);
    add_ctx(sub, ctx_);
    sub->add_option("--variants", variants_, "Comma-separated variant names")->capture_default_str();
    sub->add_flag("--no-mask", no_mask_, "Debug: serialize ciphertexts without masking");
    sub->callback([this] {
      command_ = [this](const std::string&) {
        std::vector<Variant> vs;
        std::stringstream ss(variants_);
        std::string item;
        while (std::getline(ss, item, ',')) {
          if (!item.empty()) vs.push_back(parse_variant(item));
        }
        const auto data = leak_data_.load(g_.seed);
        const auto ctx = ctx_.make();
        const auto reports = run_leakage_suite(data, vs, &ctx, leakage_options());
        const auto p = out_path("leakage.csv");
        auto os = open_out(p);
        write_leakage_csv(os, reports);
        note_output(p);
        write_leakage_csv(out_, reports);
      };
    });
  }

  void setup_ablation(CLI::App& app) {
    auto* sub = app.add_subcommand("ablation", "Leakage and depth audit across PolyProtect parameter values");
    add_leakage_flags(sub);
    sub->add_option("--param", sweep_param_, "overlap, m or c_range")
        ->required()
        ->check(CLI::IsMember({"overlap", "m", "c_range"}));
    sub->add_option("--values", sweep_values_, "Range a..b or comma list")->required();
    sub->add_option("--audit-depth-budget", audit_budget_, "Depth budget of the audit context")
        ->capture_default_str();
    sub->callback([this] {
      command_ = [this](const std::string&) {
        const auto data = leak_data_.load(g_.seed);
        AblationOptions ao;
        ao.leakage = leakage_options();
        ao.audit_depth_budget = audit_budget_;
        ao.audit_key_seed = g_.seed;
        const auto rows = ablation_sweep(parse_sweep_param(sweep_param_), parse_int_list(sweep_values_), data, ao);
        const auto p = out_path("ablation_" + sweep_param_ + ".csv");
        auto os = open_out(p);
        write_ablation_csv(os, rows);
        note_output(p);
        write_ablation_csv(out_, rows);
      };
    });
  }

  std::ostream& out_;
  std::ostream& err_;
  Globals g_;
  std::function<void(const std::string&)> command_;
  std::vector<std::string> outputs_;

  DataOpts data_;
  DataOpts leak_data_{"", SyntheticSpec{320, 8, 512, 1.0, 0.5, 1}};
  ProtectOpts protect_;
  CtxOpts ctx_;
  CtxOpts bench_ctx_{2048, 16, 0.0, 1};
  ApproxOpts approx_;
  ApproxOpts fit_approx_{8, 1e-3, 1.0, 256};
  std::string output_;
  int count_ = 1;
  std::size_t compress_dim_ = 64;
  bool plain_ = false;
  std::string gallery_dir_;
  std::string params_path_;
  std::string probe_path_;
  std::size_t top_ = 0;
  std::string sizes_ = "2..2048";
  int repeats_ = 5;
  bool no_wall_ = false;
  std::size_t curve_points_ = 512;
  std::string variants_ = "None,PolyProtect,MRL,MRL+PolyProtect,MRL+FHE,MRL+PolyProtect+FHE";
  bool no_mask_ = false;
  bool per_subject_params_ = false;
  int epochs_ = 200;
  double learning_rate_ = 0.5;
  std::string sweep_param_;
  std::string sweep_values_;
  int audit_budget_ = 16;
};

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  return Runner(out, err).run(args);
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace fheprotect::cli
