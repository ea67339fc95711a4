#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "fheprotect/approx.hpp"
#include "fheprotect/cli.hpp"
#include "fheprotect/dataset.hpp"
#include "fheprotect/error.hpp"
#include "fheprotect/leakage.hpp"
#include "fheprotect/pipeline.hpp"
#include "fheprotect/polyprotect.hpp"
#include "fheprotect/similarity.hpp"
#include "fheprotect/slot_backend.hpp"
#include "fheprotect/summation.hpp"

namespace py = pybind11;
using namespace fheprotect;

namespace {

using Vec = std::vector<double>;

py::bytes to_bytes(const std::vector<std::uint8_t>& b) {
  return py::bytes(reinterpret_cast<const char*>(b.data()), b.size());
}

std::vector<std::uint8_t> from_bytes(const py::bytes& b) {
  const std::string s = b;
  return {s.begin(), s.end()};
}

}  // namespace

PYBIND11_MODULE(_fheprotect, m) {
  m.doc() = "Template protection over a simulated homomorphic slot engine";

  static py::exception<Error> error_type(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::object inst = py::reinterpret_borrow<py::object>(error_type)(e.what());
      inst.attr("kind") = std::string(to_string(e.kind()));
      PyErr_SetObject(error_type.ptr(), inst.ptr());
    }
  });

  py::class_<ContextParams>(m, "ContextParams")
      .def(py::init([](std::size_t slot_capacity, int depth_budget, double noise_stddev) {
             return ContextParams{slot_capacity, depth_budget, noise_stddev};
           }),
           py::arg("slot_capacity") = 2048, py::arg("depth_budget") = 16, py::arg("noise_stddev") = 0.0)
      .def_readwrite("slot_capacity", &ContextParams::slot_capacity)
      .def_readwrite("depth_budget", &ContextParams::depth_budget)
      .def_readwrite("noise_stddev", &ContextParams::noise_stddev);

  py::class_<EncryptionContext>(m, "EncryptionContext")
      .def_static("create", &EncryptionContext::create, py::arg("params"), py::arg("key_seed"))
      .def_property_readonly("slot_capacity", &EncryptionContext::slot_capacity)
      .def_property_readonly("depth_budget", &EncryptionContext::depth_budget)
      .def_property_readonly("key_id", &EncryptionContext::key_id_hex);

  py::class_<OpCounts>(m, "OpCounts")
      .def_readonly("rotations", &OpCounts::rotations)
      .def_readonly("mults", &OpCounts::mults)
      .def_readonly("plain_mults", &OpCounts::plain_mults)
      .def_readonly("adds", &OpCounts::adds);

  py::class_<SlotVector>(m, "SlotVector")
      .def_property_readonly("capacity", &SlotVector::capacity)
      .def_property_readonly("logical_len", &SlotVector::logical_len)
      .def_property_readonly("depth_used", &SlotVector::depth_used)
      .def_property_readonly("rotations_used", &SlotVector::rotations_used)
      .def_property_readonly("op_counts", &SlotVector::op_counts);

  m.def("encrypt", [](const Vec& v, const EncryptionContext& ctx) { return encrypt(v, ctx); });
  m.def("decrypt", &decrypt);
  m.def("decrypt_all_slots", &decrypt_all_slots);
  m.def("add", &add);
  m.def("mult", &mult);
  m.def("mult_plain", [](const SlotVector& a, const Vec& s) { return mult_plain(a, s); });
  m.def("rotate_left", &rotate_left);
  m.def("rotate_right", &rotate_right);
  m.def(
      "serialize_ciphertext",
      [](const SlotVector& sv, const EncryptionContext& ctx, bool mask) {
        return to_bytes(serialize_ciphertext(sv, ctx, SerializeOptions{mask}));
      },
      py::arg("sv"), py::arg("ctx"), py::arg("mask") = true);
  m.def("deserialize_ciphertext",
        [](const py::bytes& b, const EncryptionContext& ctx, std::size_t logical_len, int depth_used) {
          return deserialize_ciphertext(from_bytes(b), ctx, logical_len, depth_used).value;
        });

  m.def("naive_add_all", &naive_add_all);
  m.def("fold_add_all", &fold_add_all);
  m.def("dft_sum", &dft_sum);

  py::class_<PolyProtectParams>(m, "PolyProtectParams")
      .def_readonly("m", &PolyProtectParams::m)
      .def_readonly("overlap", &PolyProtectParams::overlap)
      .def_readonly("c_range", &PolyProtectParams::c_range)
      .def_readonly("coeffs", &PolyProtectParams::coeffs)
      .def_readonly("exps", &PolyProtectParams::exps)
      .def_readonly("seed", &PolyProtectParams::seed)
      .def_readonly("params_id", &PolyProtectParams::params_id);
  m.def("gen_params", &gen_params, py::arg("m"), py::arg("overlap"), py::arg("c_range"), py::arg("seed"));
  m.def("protect_plain", [](const Vec& v, const PolyProtectParams& p) { return protect_plain(v, p).values; });
  m.def("protect_encrypted", [](const Vec& v, const PolyProtectParams& p, const EncryptionContext& ctx) {
    return protect_embedding_encrypted(v, p, ctx).windows;
  });
  m.def("decrypt_template", [](const std::vector<SlotVector>& windows, const EncryptionContext& ctx) {
    ProtectedTemplate t;
    t.windows = windows;
    return decrypt_template(t, ctx);
  });

  py::class_<Interval>(m, "Interval")
      .def(py::init([](double lo, double hi) { return Interval{lo, hi}; }), py::arg("lo"), py::arg("hi"))
      .def_readonly("lo", &Interval::lo)
      .def_readonly("hi", &Interval::hi);
  py::class_<FitReport>(m, "FitReport")
      .def_readonly("max_rel_err", &FitReport::max_rel_err)
      .def_readonly("mean_rel_err", &FitReport::mean_rel_err)
      .def_readonly("n_samples", &FitReport::n_samples)
      .def_readonly("seed", &FitReport::seed);
  py::class_<PolyApprox>(m, "PolyApprox")
      .def_readonly("degree", &PolyApprox::degree)
      .def_readonly("coeffs", &PolyApprox::coeffs)
      .def_readonly("domain", &PolyApprox::domain)
      .def_readonly("fit_report", &PolyApprox::fit_report);
  m.attr("OCTAVE_PAIR_DOMAIN") = kOctavePairDomain;
  m.def(
      "fit_inv_sqrt",
      [](int degree, double lo, double hi, std::size_t n_nodes) { return fit_inv_sqrt(degree, Interval{lo, hi}, n_nodes); },
      py::arg("degree"), py::arg("lo"), py::arg("hi"), py::arg("n_nodes") = 256);
  m.def("eval_poly_plain", &eval_poly_plain);
  m.def("eval_poly_encrypted", &eval_poly_encrypted);

  py::class_<NormalizationPlan>(m, "NormalizationPlan")
      .def_static("from_norm_bound", &NormalizationPlan::from_norm_bound)
      .def_static("from_norm_bounds", &NormalizationPlan::from_norm_bounds)
      .def_readonly("c_bound", &NormalizationPlan::c_bound)
      .def_readonly("d_bound", &NormalizationPlan::d_bound)
      .def_readonly("correction", &NormalizationPlan::correction);
  m.def("cosine_plain", [](const Vec& a, const Vec& b) { return cosine_plain(a, b); });
  m.def("cosine_tolerance", &cosine_tolerance);
  m.def("octave_norm_bound", &octave_norm_bound);
  m.def(
      "cosine_encrypted",
      [](const SlotVector& a, const SlotVector& b, std::size_t n, const NormalizationPlan& plan,
         const PolyApprox& approx) { return cosine_encrypted(a, b, n, plan, approx); },
      py::arg("a"), py::arg("b"), py::arg("n"), py::arg("plan"), py::arg("approx"));

  py::class_<Embedding>(m, "Embedding")
      .def_readonly("values", &Embedding::values)
      .def_readonly("subject_id", &Embedding::subject_id)
      .def_property_readonly("gender", [](const Embedding& e) { return e.attributes.gender; })
      .def_property_readonly("age_band", [](const Embedding& e) { return e.attributes.age_band; })
      .def_property_readonly("ethnicity", [](const Embedding& e) { return e.attributes.ethnicity; });
  m.def(
      "gen_synthetic_dataset",
      [](int num_ids, int samples_per_id, std::size_t dim, double class_separation, double attribute_correlation,
         std::uint64_t seed) {
        return gen_synthetic_dataset(
            SyntheticSpec{num_ids, samples_per_id, dim, class_separation, attribute_correlation, seed});
      },
      py::arg("num_ids") = 50, py::arg("samples_per_id") = 5, py::arg("dim") = 512, py::arg("class_separation") = 1.0,
      py::arg("attribute_correlation") = 0.5, py::arg("seed") = 1);

  m.def(
      "rank1_accuracy",
      [](const std::vector<Embedding>& data, bool encrypted, std::size_t compress_dim, std::uint64_t key_seed,
         int jobs) {
        PipelineConfig cfg;
        cfg.compress_dim = compress_dim;
        cfg.jobs = jobs;
        if (!encrypted) {
          cfg.stages = {Stage::Compress, Stage::Protect};
          return rank1_accuracy(data, Pipeline(cfg, std::nullopt, std::nullopt)).accuracy;
        }
        const auto ctx = EncryptionContext::create(ContextParams{128, 24, 0.0}, key_seed);
        return rank1_accuracy(data, Pipeline(cfg, ctx, fit_inv_sqrt(8, kOctavePairDomain, 256))).accuracy;
      },
      py::arg("data"), py::arg("encrypted") = true, py::arg("compress_dim") = 64, py::arg("key_seed") = 1,
      py::arg("jobs") = 1);

  m.def("privacy_gain", &privacy_gain);
  m.def("suppression_rate", &suppression_rate);
  m.def(
      "leakage_report",
      [](const std::vector<Embedding>& data, const std::vector<std::string>& variants, std::uint64_t key_seed,
         std::uint64_t seed) {
        std::vector<Variant> vs;
        for (const auto& v : variants) vs.push_back(parse_variant(v));
        const auto ctx = EncryptionContext::create(ContextParams{128, 24, 0.0}, key_seed);
        LeakageOptions opts;
        opts.params_seed = seed;
        opts.split_seed = seed;
        opts.train.seed = seed;
        std::ostringstream os;
        write_leakage_csv(os, run_leakage_suite(data, vs, &ctx, opts));
        return os.str();
      },
      py::arg("data"), py::arg("variants"), py::arg("key_seed") = 1, py::arg("seed") = 1,
      "Leakage CSV text (attribute,variant,a_o,a_p,pg_x100,sr,chance).");

  m.def(
      "run_cli",
      [](std::vector<std::string> args) {
        args.insert(args.begin(), "fheprotect");
        std::ostringstream out, err;
        const int code = cli::run(args, out, err);
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Runs the command-line tool in-process; returns (exit_code, stdout, stderr).");
}
