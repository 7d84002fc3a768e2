#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rcore/augmentation.hpp"
#include "rcore/data.hpp"
#include "rcore/evaluation.hpp"
#include "rcore/label_space.hpp"
#include "rcore/losses.hpp"
#include "rcore/metrics.hpp"
#include "rcore/presets.hpp"
#include "rcore/trainer.hpp"

namespace py = pybind11;
using namespace rcore;

namespace {

py::array_t<double> clip_pixels_array(const Clip& clip) {
  py::array_t<double> arr({clip.t, clip.c, clip.h, clip.w});
  std::copy(clip.pixels.begin(), clip.pixels.end(), arr.mutable_data());
  return arr;
}

Clip clip_from_array(py::array_t<double, py::array::c_style | py::array::forcecast> pixels,
                     int verb, int object) {
  if (pixels.ndim() != 4) throw std::invalid_argument("pixels must be a (T,C,H,W) array");
  Clip clip;
  clip.t = static_cast<int>(pixels.shape(0));
  clip.c = static_cast<int>(pixels.shape(1));
  clip.h = static_cast<int>(pixels.shape(2));
  clip.w = static_cast<int>(pixels.shape(3));
  clip.verb = verb;
  clip.object = object;
  clip.pixels.assign(pixels.data(), pixels.data() + pixels.size());
  return clip;
}

}  // namespace

PYBIND11_MODULE(_rcore, m) {
  m.doc() = "compositional action recognition lab: synthetic data, metrics, training";

  py::class_<AnnotationRecord>(m, "AnnotationRecord")
      .def(py::init<std::string, std::string, std::string>(), py::arg("id"), py::arg("verb"),
           py::arg("object"))
      .def_readwrite("id", &AnnotationRecord::id)
      .def_readwrite("verb", &AnnotationRecord::verb)
      .def_readwrite("object", &AnnotationRecord::object);

  py::class_<CompositionSpace>(m, "CompositionSpace")
      .def_static("build", &CompositionSpace::build)
      .def_static("from_json", &CompositionSpace::from_json)
      .def("to_json", &CompositionSpace::to_json)
      .def_property_readonly("n_verbs", &CompositionSpace::n_verbs)
      .def_property_readonly("n_objects", &CompositionSpace::n_objects)
      .def("verbs", &CompositionSpace::verbs)
      .def("objects", &CompositionSpace::objects)
      .def("comp_index", &CompositionSpace::comp_index)
      .def("comp_unindex", &CompositionSpace::comp_unindex)
      .def("is_seen", &CompositionSpace::is_seen)
      .def("count", &CompositionSpace::count)
      .def("unseen", &CompositionSpace::unseen)
      .def("coverage_ratio", &CompositionSpace::coverage_ratio);

  py::class_<CoOccurrenceStats>(m, "CoOccurrenceStats")
      .def_readonly("mu_ogv", &CoOccurrenceStats::mu_ogv)
      .def_readonly("sigma_ogv", &CoOccurrenceStats::sigma_ogv)
      .def_readonly("mu_vgo", &CoOccurrenceStats::mu_vgo)
      .def_readonly("sigma_vgo", &CoOccurrenceStats::sigma_vgo)
      .def_property_readonly("freq_set",
                             [](const CoOccurrenceStats& s) {
                               return std::vector<std::size_t>(s.freq_set.begin(),
                                                               s.freq_set.end());
                             })
      .def("threshold_ogv", &CoOccurrenceStats::threshold_ogv)
      .def("threshold_vgo", &CoOccurrenceStats::threshold_vgo)
      .def("to_json", &CoOccurrenceStats::to_json);

  m.def("build_cooccurrence", &build_cooccurrence);

  py::class_<SynthConfig>(m, "SynthConfig")
      .def(py::init<>())
      .def_readwrite("n_verbs", &SynthConfig::n_verbs)
      .def_readwrite("n_objects", &SynthConfig::n_objects)
      .def_readwrite("frames", &SynthConfig::frames)
      .def_readwrite("height", &SynthConfig::height)
      .def_readwrite("width", &SynthConfig::width)
      .def_readwrite("noise_std", &SynthConfig::noise_std)
      .def_readwrite("bias_matrix", &SynthConfig::bias_matrix)
      .def_readwrite("aligned_per_pair", &SynthConfig::aligned_per_pair)
      .def_readwrite("conflict_per_pair", &SynthConfig::conflict_per_pair)
      .def_readwrite("seed", &SynthConfig::seed);

  m.def("fig2a_synth_config", &fig2a_synth_config);
  m.def("fig2b_synth_config", &fig2b_synth_config);
  m.def("skewed_synth_config", &skewed_synth_config);
  m.def("synth_verb_name", &synth_verb_name);
  m.def("synth_object_name", &synth_object_name);
  m.def("opposite_verb", &opposite_verb);

  py::class_<Clip>(m, "Clip")
      .def_property_readonly("verb", [](const Clip& c) { return c.verb; })
      .def_property_readonly("object", [](const Clip& c) { return c.object; })
      .def_property_readonly("pixels", &clip_pixels_array);
  m.def("make_clip", &clip_from_array, py::arg("pixels"), py::arg("verb") = -1,
        py::arg("object") = -1);

  m.def(
      "generate_clip",
      [](int verb, int object, const SynthConfig& cfg, std::uint64_t counter) {
        return generate_clip(verb, object, cfg, counter);
      },
      py::arg("verb"), py::arg("object"), py::arg("cfg"), py::arg("counter") = 0);

  m.def("estimate_motion_region", [](const Clip& clip, double rho) {
    MotionMask m = estimate_motion_region(clip, rho);
    py::array_t<std::uint8_t> arr({m.h, m.w});
    std::copy(m.mask.begin(), m.mask.end(), arr.mutable_data());
    return py::make_tuple(arr, m.coverage);
  });

  m.def(
      "vocamix",
      [](const Clip& primary, const Clip& donor, double lambda, double rho, bool full_frame,
         int n_objects) {
        MotionMask mask = estimate_motion_region(primary, rho);
        auto [mixed, label] = vocamix(primary, donor, lambda, mask, full_frame, n_objects);
        return py::make_tuple(mixed, label);
      },
      py::arg("primary"), py::arg("donor"), py::arg("lambda_"), py::arg("rho") = 0.25,
      py::arg("full_frame") = false, py::arg("n_objects") = 0);

  m.def("sample_lambda", [](double scale, double beta_a, double beta_b, std::uint64_t seed) {
    Rng rng(seed);
    LambdaSampler s{beta_a, beta_b, scale, 1.0};
    return sample_lambda(s, rng);
  });

  // metrics
  m.def("harmonic_mean", &harmonic_mean);
  m.def("compositional_gap", &compositional_gap);
  m.def("fsp_ratio", &fsp_ratio);
  m.def("fcp_ratio", [](const std::vector<std::size_t>& preds, const CoOccurrenceStats& stats,
                        const CompositionSpace& space) -> py::object {
    auto v = fcp_ratio(preds, stats, space);
    if (!v) return py::none();
    return py::float_(*v);
  });
  m.def("auc_seen_unseen", &auc_seen_unseen);

  m.def("grad_check_losses", [](std::uint64_t seed, int trials) {
    // Finite-difference validation of every loss, callable from python.
    Rng rng(seed);
    Tensor embed({6, 5}, 0.0);
    for (auto& v : embed.values()) v = rng.uniform(-1.0, 1.0);
    int failures = 0;
    for (int rep = 0; rep < trials; ++rep) {
      std::vector<double> vals(5);
      for (auto& v : vals) v = rng.uniform(0.15, 1.0);
      Tensor x({5}, vals, false);
      auto f = [&embed](const Tensor& t) {
        LossParts parts;
        parts.l_com = component_loss(t, t, 1, SoftLabel{0.5, 0.3, 0.2, 0.0, 0.0});
        parts.l_comp = composition_loss(softmax(t), 0);
        parts.l_torc = torc_ent(t, embed, 0.07);
        parts.l_margin = margin_loss(softmax(t), 0, {1, 2}, 3, 0.5);
        return total_loss(parts, LossWeights{}, 18.0);
      };
      if (!grad_check(f, x, 1e-5, 1e-4).ok) ++failures;
    }
    return failures;
  });

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("acc_verb_seen", &EvalReport::acc_verb_seen)
      .def_readonly("acc_verb_unseen", &EvalReport::acc_verb_unseen)
      .def_readonly("acc_obj_seen", &EvalReport::acc_obj_seen)
      .def_readonly("acc_obj_unseen", &EvalReport::acc_obj_unseen)
      .def_readonly("acc_comp_seen", &EvalReport::acc_comp_seen)
      .def_readonly("acc_comp_unseen", &EvalReport::acc_comp_unseen)
      .def_readonly("hm_comp", &EvalReport::hm_comp)
      .def_readonly("cg_seen", &EvalReport::cg_seen)
      .def_readonly("cg_unseen", &EvalReport::cg_unseen)
      .def_readonly("fsp", &EvalReport::fsp)
      .def_property_readonly("fcp",
                             [](const EvalReport& r) -> py::object {
                               if (!r.fcp) return py::none();
                               return py::float_(*r.fcp);
                             })
      .def_readonly("mean_cos_rev", &EvalReport::mean_cos_rev)
      .def("to_json", &EvalReport::to_json);

  // training, at the granularity the experiments use
  py::class_<Benchmark>(m, "Benchmark")
      .def_property_readonly("space", [](const Benchmark& b) { return b.space; })
      .def_property_readonly("n_train", [](const Benchmark& b) { return b.train.clips.size(); })
      .def_property_readonly("n_val", [](const Benchmark& b) { return b.val.size(); });

  m.def("make_benchmark", &make_benchmark, py::arg("synth"), py::arg("feature_dim") = 64,
        py::arg("conv_width") = 3, py::arg("temperature") = 0.07);

  m.def(
      "train_and_evaluate",
      [](Benchmark& bench, bool enable_rcore, int epochs, double base_lr, int eval_every,
         std::uint64_t seed) {
        ConfigDoc doc = resolve_preset_config("fig2b", seed);
        doc.set_long("train.epochs", epochs);
        doc.set_double("train.base_lr", base_lr);
        doc.set_long("train.eval_every", eval_every);
        TrainSetup setup = enable_rcore ? rcore_setup_from(doc) : baseline_setup_from(doc);
        ModelParams params = ModelParams::init(bench.model_cfg, seed);
        RunLog log = train(params, bench.train, bench.val, bench.space, bench.stats, setup);
        Rng rng = Rng(seed).substream("py.eval");
        auto samples = evaluate_clips(params, bench.val, bench.space, rng);
        EvalReport report = build_report(samples, InferenceConfig{}, bench.space, bench.stats);
        ShuffledProbeResult probe = shuffled_probe(samples);
        return py::make_tuple(report, log.to_csv(), probe.gap,
                              reversed_cosine_probe(samples));
      },
      py::arg("benchmark"), py::arg("enable_rcore") = false, py::arg("epochs") = 10,
      py::arg("base_lr") = 0.004, py::arg("eval_every") = 1, py::arg("seed") = 0);

  m.def("run_preset", [](const std::string& name, const std::string& outdir, std::uint64_t seed) {
    ConfigDoc doc = resolve_preset_config(name, seed);
    run_experiment(doc, outdir);
  });
  m.def("preset_names", &preset_names);
}
