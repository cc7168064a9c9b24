// Python bindings over the core library: NIfTI I/O, preprocessing,
// augmentation, the siamese model, training, synthesis, and t-SNE.
// Arrays cross the boundary as contiguous float32/float64 numpy arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "longsiam/augment.hpp"
#include "longsiam/cohort.hpp"
#include "longsiam/model.hpp"
#include "longsiam/nifti.hpp"
#include "longsiam/preprocess.hpp"
#include "longsiam/synth.hpp"
#include "longsiam/threading.hpp"
#include "longsiam/train.hpp"
#include "longsiam/tsne.hpp"

namespace py = pybind11;
using namespace longsiam;

namespace {

template <typename T>
Tensor<T> tensor_from(const py::array_t<T, py::array::c_style | py::array::forcecast>& a) {
    std::vector<int64_t> dims(a.ndim());
    for (py::ssize_t i = 0; i < a.ndim(); ++i) dims[static_cast<size_t>(i)] = a.shape(i);
    Tensor<T> t = Tensor<T>::zeros(Shape(dims));
    std::copy(a.data(), a.data() + a.size(), t.data());
    return t;
}

template <typename T>
py::array_t<T> array_from(const Tensor<T>& t) {
    std::vector<py::ssize_t> dims;
    for (int64_t d : t.shape().dims()) dims.push_back(static_cast<py::ssize_t>(d));
    py::array_t<T> a(dims);
    std::copy(t.data(), t.data() + t.size(), a.mutable_data());
    return a;
}

Shape shape_from(const std::vector<int64_t>& dims) { return Shape(dims); }

using ArrF = py::array_t<float, py::array::c_style | py::array::forcecast>;
using ArrD = py::array_t<double, py::array::c_style | py::array::forcecast>;

Cohort cohort_from_arrays(const ArrF& baselines, const ArrF& followups,
                          const std::vector<int>& labels, const char* prefix) {
    TensorF b = tensor_from(baselines), f = tensor_from(followups);
    if (b.shape().rank() != 4 || f.shape() != b.shape())
        throw std::invalid_argument("expected matching [N,X,Y,Z] baseline/followup arrays");
    const int64_t n = b.shape()[0];
    if (static_cast<int64_t>(labels.size()) != n)
        throw std::invalid_argument("labels length must equal the batch size");
    const Shape vol{b.shape()[1], b.shape()[2], b.shape()[3]};
    const int64_t vs = vol.count();
    Cohort c;
    for (int64_t i = 0; i < n; ++i) {
        Volume bv = make_volume(vol[0], vol[1], vol[2]);
        Volume fv = make_volume(vol[0], vol[1], vol[2]);
        std::copy(b.data() + i * vs, b.data() + (i + 1) * vs, bv.intensities.data());
        std::copy(f.data() + i * vs, f.data() + (i + 1) * vs, fv.intensities.data());
        c.samples.push_back(Sample{prefix + std::to_string(i), std::move(bv), std::move(fv),
                                   labels[static_cast<size_t>(i)]});
    }
    return c;
}

py::dict metrics_dict(const EpochMetrics& m) {
    py::dict d;
    d["train_loss"] = m.train_loss;
    d["val_loss"] = m.val_loss;
    d["train_acc"] = m.train_acc;
    d["val_acc"] = m.val_acc;
    d["train_msle"] = m.train_msle;
    d["val_msle"] = m.val_msle;
    return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Longitudinal siamese 3D pipeline core";

    m.def("set_threads", [](int n) { threads::set_count(resolve_threads(n)); },
          py::arg("n") = 0, "Set the worker-thread count (0 = auto)");

    // --- NIfTI I/O ---
    m.def(
        "read_nifti",
        [](const std::string& path) {
            Volume v = read_nifti_file(path);
            return py::make_tuple(array_from(v.intensities),
                                  py::make_tuple(v.spacing[0], v.spacing[1], v.spacing[2]));
        },
        py::arg("path"), "Read a .nii/.nii.gz file -> (array[x,y,z], spacing)");
    m.def(
        "write_nifti",
        [](const std::string& path, const ArrF& a, std::array<float, 3> spacing) {
            TensorF t = tensor_from(a);
            if (t.shape().rank() != 3) throw std::invalid_argument("volume must be 3-D");
            Volume v;
            v.intensities = std::move(t);
            v.spacing = spacing;
            write_nifti_file(path, v);
        },
        py::arg("path"), py::arg("volume"), py::arg("spacing") = std::array<float, 3>{1, 1, 1},
        "Write a 3-D array as .nii or .nii.gz");

    // --- preprocessing ---
    m.def(
        "downscale_spline",
        [](const ArrF& a) {
            Volume v;
            v.intensities = tensor_from(a);
            return array_from(downscale_spline(v).intensities);
        },
        py::arg("volume"), "Cubic B-spline half-resolution downscale of a 3-D volume");
    m.def(
        "preprocess_pair",
        [](const ArrF& baseline, const ArrF& followup, const std::vector<int64_t>& target) {
            Volume bv, fv;
            bv.intensities = tensor_from(baseline);
            fv.intensities = tensor_from(followup);
            SamplePair p = preprocess_pair(bv, fv, shape_from(target));
            return py::make_tuple(array_from(p.baseline.intensities),
                                  array_from(p.followup.intensities));
        },
        py::arg("baseline"), py::arg("followup"),
        py::arg("target") = std::vector<int64_t>{204, 216, 150},
        "Mask, unit-scale, pad to `target`, and downscale both volumes of a pair");

    // --- augmentation ---
    m.def(
        "augment_image",
        [](const ArrF& a, double max_rotation_deg, const std::string& axis,
           double flip_probability, uint64_t seed) {
            AugmentConfig cfg;
            cfg.max_rotation_deg = max_rotation_deg;
            if (axis == "LR") cfg.rotation_axis = Axis::LR;
            else if (axis == "AP") cfg.rotation_axis = Axis::AP;
            else if (axis == "IS") cfg.rotation_axis = Axis::IS;
            else throw std::invalid_argument("axis must be LR, AP, or IS");
            cfg.flip_probability = flip_probability;
            Rng rng(seed);
            Volume v;
            v.intensities = tensor_from(a);
            return array_from(augment_image(v, cfg, rng).intensities);
        },
        py::arg("volume"), py::arg("max_rotation_deg") = 5.0, py::arg("axis") = "IS",
        py::arg("flip_probability") = 0.5, py::arg("seed") = 0,
        "Random small rotation plus possible left-right flip (seeded)");

    // --- synthetic cohort ---
    m.def(
        "make_subject",
        [](const std::vector<int64_t>& shape, uint64_t seed) {
            CohortSpec spec = CohortSpec::desk();
            spec.volume_shape = shape_from(shape);
            spec.validate();
            Rng rng(seed);
            return array_from(make_subject(spec, rng).intensities);
        },
        py::arg("shape") = std::vector<int64_t>{32, 32, 24}, py::arg("seed") = 0,
        "Generate one synthetic baseline head volume");
    m.def(
        "generate_cohort",
        [](const std::string& out_dir, const std::string& preset, int64_t n_stable,
           int64_t n_decline, uint64_t seed, bool null_control) {
            CohortSpec spec = preset == "desk" ? CohortSpec::desk() : CohortSpec();
            if (n_stable >= 0) spec.n_stable = n_stable;
            if (n_decline >= 0) spec.n_decline = n_decline;
            spec.seed = seed;
            if (null_control) spec = spec.null_control();
            spec.validate();
            return generate_cohort_to_dir(spec, out_dir).size();
        },
        py::arg("out_dir"), py::arg("preset") = "full", py::arg("n_stable") = -1,
        py::arg("n_decline") = -1, py::arg("seed") = 0, py::arg("null_control") = false,
        "Write a labeled synthetic cohort (volumes + manifest.csv); returns the pair count");

    // --- metrics ---
    m.def(
        "crossentropy",
        [](const ArrF& probs, const ArrF& onehot) {
            return static_cast<double>(crossentropy(tensor_from(probs), tensor_from(onehot)));
        },
        py::arg("probs"), py::arg("onehot"));
    m.def(
        "msle",
        [](const ArrF& probs, const ArrF& onehot) {
            return static_cast<double>(msle(tensor_from(probs), tensor_from(onehot)));
        },
        py::arg("probs"), py::arg("onehot"));
    m.def(
        "accuracy",
        [](const ArrF& probs, const std::vector<int>& labels) {
            return accuracy(tensor_from(probs), labels);
        },
        py::arg("probs"), py::arg("labels"));

    // --- model ---
    py::class_<SiameseNet<float>>(m, "Model")
        .def_static(
            "build",
            [](const std::vector<int64_t>& input_shape, const std::vector<int64_t>& filters,
               const std::vector<int64_t>& widths, uint64_t seed, double leaky_alpha,
               double dropout_rate, double l2_coeff, double bn_epsilon, double bn_momentum) {
                ModelConfig cfg;
                cfg.input_shape = shape_from(input_shape);
                if (filters.size() != 3 || widths.size() != 3)
                    throw std::invalid_argument("filters and widths must each have 3 entries");
                for (size_t i = 0; i < 3; ++i) cfg.block_filters[i] = filters[i];
                for (size_t i = 0; i < 3; ++i) cfg.dense_widths[i] = widths[i];
                cfg.seed = seed;
                cfg.leaky_alpha = leaky_alpha;
                cfg.dropout_rate = dropout_rate;
                cfg.l2_coeff = l2_coeff;
                cfg.bn_epsilon = bn_epsilon;
                cfg.bn_momentum = bn_momentum;
                cfg.validate();
                return build<float>(cfg);
            },
            py::arg("input_shape") = std::vector<int64_t>{102, 108, 75},
            py::arg("filters") = std::vector<int64_t>{4, 8, 16},
            py::arg("widths") = std::vector<int64_t>{64, 16, 2}, py::arg("seed") = 0,
            py::arg("leaky_alpha") = 0.01, py::arg("dropout_rate") = 0.5,
            py::arg("l2_coeff") = 1e-4, py::arg("bn_epsilon") = 1e-3,
            py::arg("bn_momentum") = 0.99)
        .def_static("load", [](const std::string& path) { return load_checkpoint(path); },
                    py::arg("path"))
        .def("save", [](SiameseNet<float>& net, const std::string& path) {
            save_checkpoint(net, path);
        }, py::arg("path"))
        .def("forward",
             [](const SiameseNet<float>& net, const ArrF& baseline, const ArrF& followup) {
                 Rng rng(0);
                 return array_from(forward_pair(net, tensor_from(baseline), tensor_from(followup),
                                                Mode::Infer, rng, false)
                                       .probs);
             },
             py::arg("baseline"), py::arg("followup"),
             "Inference probabilities [N,2] for [N,X,Y,Z] baseline/follow-up batches")
        .def("features",
             [](const SiameseNet<float>& net, const ArrF& baseline, const ArrF& followup,
                const std::string& stage) {
                 return array_from(extract_features(net, tensor_from(baseline),
                                                    tensor_from(followup),
                                                    parse_feature_stage(stage)));
             },
             py::arg("baseline"), py::arg("followup"), py::arg("stage") = "dense2_out",
             "Analysis features: stage in {input_concat, branch_concat, subtract_out, dense2_out}")
        .def_property_readonly("parameter_count",
                               [](SiameseNet<float>& net) { return parameter_count(net); })
        .def_property_readonly("input_shape", [](const SiameseNet<float>& net) {
            return net.config.input_shape.dims();
        });

    // --- training ---
    m.def(
        "train_run",
        [](SiameseNet<float>& net, const ArrF& train_b, const ArrF& train_f,
           const std::vector<int>& train_labels, const ArrF& val_b, const ArrF& val_f,
           const std::vector<int>& val_labels, int64_t epochs, int64_t batch_size, double lr,
           double l2, uint64_t seed, bool augment) {
            Cohort train_set = cohort_from_arrays(train_b, train_f, train_labels, "t");
            Cohort val_set = cohort_from_arrays(val_b, val_f, val_labels, "v");
            TrainConfig cfg;
            cfg.epochs = epochs;
            cfg.batch_size = batch_size;
            cfg.learning_rate = lr;
            cfg.l2_coeff = l2;
            cfg.seed = seed;
            cfg.augment_enabled = augment;
            cfg.validate();
            Rng rng(derive_seed(seed, 3));
            RunReport report = train_run(net, train_set, val_set, cfg, rng);
            py::list rows;
            for (const EpochMetrics& e : report.epochs) rows.append(metrics_dict(e));
            return rows;
        },
        py::arg("model"), py::arg("train_baselines"), py::arg("train_followups"),
        py::arg("train_labels"), py::arg("val_baselines"), py::arg("val_followups"),
        py::arg("val_labels"), py::arg("epochs") = 10, py::arg("batch_size") = 20,
        py::arg("lr") = 1e-3, py::arg("l2") = 1e-4, py::arg("seed") = 0,
        py::arg("augment") = true, "Train in place; returns per-epoch metric dicts");

    // --- t-SNE ---
    m.def(
        "input_affinities",
        [](const ArrD& x, double perplexity) {
            return array_from(input_affinities(tensor_from(x), perplexity));
        },
        py::arg("vectors"), py::arg("perplexity") = 30.0,
        "Symmetrized perplexity-calibrated affinity matrix [n,n]");
    m.def(
        "tsne",
        [](const ArrD& x, double perplexity, int64_t iterations, uint64_t seed) {
            TsneConfig cfg;
            cfg.perplexity = perplexity;
            cfg.iterations = iterations;
            cfg.seed = seed;
            cfg.validate();
            Embedding e = tsne(tensor_from(x), cfg);
            return py::make_tuple(array_from(e.coords), e.final_kl);
        },
        py::arg("vectors"), py::arg("perplexity") = 30.0, py::arg("iterations") = 1000,
        py::arg("seed") = 0, "Exact t-SNE to 2-D; returns (coords [n,2], final KL)");
}
