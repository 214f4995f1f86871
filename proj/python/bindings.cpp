#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vtdl/augment.hpp"
#include "vtdl/clip.hpp"
#include "vtdl/evaluation.hpp"
#include "vtdl/model.hpp"
#include "vtdl/objective.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/sampling.hpp"
#include "vtdl/tensor.hpp"
#include "vtdl/training.hpp"

namespace py = pybind11;
using namespace vtdl;

namespace {

using DArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor tensor_from_array(const DArray& a) {
    std::vector<std::size_t> shape(std::size_t(a.ndim()));
    for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[std::size_t(i)] = std::size_t(a.shape(i));
    std::vector<double> data(a.data(), a.data() + a.size());
    return Tensor(std::move(shape), std::move(data));
}

py::array_t<double> array_from_tensor(const Tensor& t) {
    std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
    py::array_t<double> out(shape);
    std::copy(t.data(), t.data() + t.size(), out.mutable_data());
    return out;
}

VideoClip clip_from_array(const DArray& a, const std::string& source_id) {
    if (a.ndim() != 4)
        throw ShapeIncompatible("clip arrays must be [T,H,W,C], got rank " +
                                std::to_string(a.ndim()));
    VideoClip clip;
    clip.frames = tensor_from_array(a);
    clip.source_id = source_id;
    return clip;
}

std::vector<Embedding> embeddings_from_array(const DArray& a, const char* what) {
    if (a.ndim() != 2)
        throw ShapeIncompatible(std::string(what) + " must be a [n, dim] array");
    std::vector<Embedding> out(std::size_t(a.shape(0)));
    auto r = a.unchecked<2>();
    for (py::ssize_t i = 0; i < a.shape(0); ++i) {
        out[std::size_t(i)].resize(std::size_t(a.shape(1)));
        for (py::ssize_t j = 0; j < a.shape(1); ++j) out[std::size_t(i)][std::size_t(j)] = r(i, j);
    }
    return out;
}

// The single-integer array_t constructor leaves the strides container empty,
// which this pybind11 turns into a zero-stride view; spell the shape out.
py::array_t<double> vector_to_array(const std::vector<double>& v) {
    py::array_t<double> out(std::vector<py::ssize_t>{py::ssize_t(v.size())});
    std::copy(v.begin(), v.end(), out.mutable_data());
    return out;
}

py::array_t<double> array_from_embeddings(const std::vector<Embedding>& rows) {
    std::size_t n = rows.size(), d = n ? rows[0].size() : 0;
    py::array_t<double> out({py::ssize_t(n), py::ssize_t(d)});
    auto w = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j) w(py::ssize_t(i), py::ssize_t(j)) = rows[i][j];
    return out;
}

// Owns an encoder plus one parameter set so python callers get a single object.
struct PyEncoder {
    Encoder encoder;
    Params params;

    PyEncoder(const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>& blocks,
              std::size_t in_channels, std::size_t embed_dim, std::uint64_t seed) {
        EncoderSpec spec;
        if (!blocks.empty()) {
            spec.blocks.clear();
            for (const auto& [c, s, t] : blocks) spec.blocks.push_back({c, s, t});
        }
        spec.in_channels = in_channels;
        spec.embed_dim = embed_dim;
        encoder = Encoder(spec);
        Rng rng(seed);
        params = encoder.init_params(rng);
    }

    py::array_t<double> encode(const DArray& clip) const {
        Embedding e = encoder.encode_one(params, clip_from_array(clip, "python"));
        return vector_to_array(e);
    }

    py::array_t<double> backbone(const DArray& clip) const {
        return vector_to_array(encoder.backbone_one(params, clip_from_array(clip, "python")));
    }

    std::vector<std::string> param_names() const {
        std::vector<std::string> names;
        for (const auto& [name, t] : params) names.push_back(name);
        return names;
    }

    std::size_t num_params() const { return params.total_elements(); }
    std::size_t embed_dim() const { return encoder.spec().embed_dim; }
    std::size_t backbone_dim() const { return encoder.spec().backbone_dim(); }
};

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "temporal-discriminative video representation learning core ops";

    py::register_exception<Error>(m, "VtdlError", PyExc_RuntimeError);

    m.def(
        "frame_difference",
        [](const DArray& clip, std::size_t order) {
            return array_from_tensor(frame_difference(clip_from_array(clip, "python"), order));
        },
        py::arg("clip"), py::arg("order") = 1,
        "k-th forward difference along the time axis of a [T,H,W,C] clip");

    m.def(
        "tca_mix",
        [](const DArray& clip, const DArray& mix_frame, double alpha) {
            Tensor frame = tensor_from_array(mix_frame);
            return array_from_tensor(
                tca_mix(clip_from_array(clip, "python"), frame, alpha).frames);
        },
        py::arg("clip"), py::arg("mix_frame"), py::arg("alpha"),
        "alpha*clip + (1-alpha)*mix_frame, the static-frame mix");

    m.def(
        "video_cutout",
        [](const DArray& clip, std::size_t top, std::size_t left, std::size_t height,
           std::size_t width) {
            return array_from_tensor(
                video_cutout(clip_from_array(clip, "python"), {top, left, height, width})
                    .frames);
        },
        py::arg("clip"), py::arg("top"), py::arg("left"), py::arg("height"), py::arg("width"),
        "zero a time-constant spatial region");

    m.def("negative_start_candidates", &negative_start_candidates, py::arg("video_len"),
          py::arg("t_a"), py::arg("tau"),
          "all start timesteps whose gap to t_a strictly exceeds tau");

    m.def(
        "similarity",
        [](const DArray& u, const DArray& v, double temperature) {
            Embedding ue(u.data(), u.data() + u.size());
            Embedding ve(v.data(), v.data() + v.size());
            return similarity(ue, ve, {temperature});
        },
        py::arg("u"), py::arg("v"), py::arg("temperature") = 0.07, "exp(u.v / T)");

    py::class_<MemoryBank>(m, "MemoryBank")
        .def(py::init([](std::size_t capacity, std::size_t dim, std::uint64_t seed) {
                 Rng rng(seed);
                 return bank_init(capacity, rng, dim);
             }),
             py::arg("capacity"), py::arg("dim") = 128, py::arg("seed") = 0,
             "bank of unit-norm random embeddings")
        .def_property_readonly("capacity", &MemoryBank::capacity)
        .def_property_readonly("dim", &MemoryBank::dim)
        .def_property_readonly("cursor", &MemoryBank::cursor)
        .def("push",
             [](MemoryBank& bank, const DArray& anchors) {
                 bank_push(bank, embeddings_from_array(anchors, "anchors"));
             },
             py::arg("anchors"), "FIFO write of [n, dim] embeddings")
        .def("as_array", [](const MemoryBank& bank) { return array_from_tensor(bank.to_tensor()); });

    m.def(
        "td_loss",
        [](const DArray& anchors, const DArray& positives, const DArray& negatives,
           const MemoryBank& bank, double temperature, const std::string& reduction) {
            auto va = embeddings_from_array(anchors, "anchors");
            auto vp = embeddings_from_array(positives, "positives");
            auto vn = embeddings_from_array(negatives, "negatives");
            if (va.size() != vp.size() || va.size() != vn.size())
                throw ShapeMismatch("anchor/positive/negative counts differ");
            std::vector<TripletEmbedding> batch(va.size());
            for (std::size_t i = 0; i < va.size(); ++i)
                batch[i] = {std::move(va[i]), std::move(vp[i]), std::move(vn[i])};
            BatchReduction red;
            if (reduction == "mean")
                red = BatchReduction::Mean;
            else if (reduction == "sum")
                red = BatchReduction::Sum;
            else
                throw ConfigError("reduction must be 'mean' or 'sum'");
            TdLossResult res = td_loss(batch, bank, {temperature}, red);
            py::dict out;
            out["loss"] = res.loss;
            out["per_sample"] = py::cast(res.per_sample);
            out["grad_p"] = array_from_embeddings(res.grad_p);
            out["grad_n"] = array_from_embeddings(res.grad_n);
            out["mean_pos_sim"] = res.mean_pos_sim;
            out["mean_neg_sim"] = res.mean_neg_sim;
            return out;
        },
        py::arg("anchors"), py::arg("positives"), py::arg("negatives"), py::arg("bank"),
        py::arg("temperature") = 0.07, py::arg("reduction") = "mean",
        "temporal-discriminative loss with gradients w.r.t. positives and negatives");

    py::class_<PyEncoder>(m, "Encoder")
        .def(py::init<const std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>&,
                      std::size_t, std::size_t, std::uint64_t>(),
             py::arg("blocks") = std::vector<std::tuple<std::size_t, std::size_t, std::size_t>>{},
             py::arg("in_channels") = 3, py::arg("embed_dim") = 128, py::arg("seed") = 0,
             "3D-conv encoder with freshly initialized parameters")
        .def("encode", &PyEncoder::encode, py::arg("clip"),
             "unit-norm embedding of a [T,H,W,C] clip")
        .def("backbone", &PyEncoder::backbone, py::arg("clip"),
             "pre-projection pooled features")
        .def("param_names", &PyEncoder::param_names)
        .def_property_readonly("num_params", &PyEncoder::num_params)
        .def_property_readonly("embed_dim", &PyEncoder::embed_dim)
        .def_property_readonly("backbone_dim", &PyEncoder::backbone_dim);

    m.def(
        "generate_synthetic",
        [](std::size_t n_train, std::size_t n_test, std::size_t frame_size,
           std::size_t clip_len, std::uint64_t seed) {
            SynthConfig cfg;
            cfg.n_train = n_train;
            cfg.n_test = n_test;
            cfg.frame_size = frame_size;
            cfg.clip_len_source = clip_len;
            cfg.seed = seed;
            LabeledDataset ds = generate_synthetic(cfg);
            auto split = [](const std::vector<LabeledVideo>& vids) {
                py::list out;
                for (const auto& lv : vids) {
                    py::dict d;
                    d["id"] = lv.video.source_id;
                    d["label"] = lv.label;
                    d["frames"] = array_from_tensor(lv.video.frames);
                    out.append(std::move(d));
                }
                return out;
            };
            py::dict out;
            out["class_names"] = py::cast(ds.class_names);
            out["train"] = split(ds.train);
            out["test"] = split(ds.test);
            return out;
        },
        py::arg("n_train") = 8, py::arg("n_test") = 4, py::arg("frame_size") = 32,
        py::arg("clip_len") = 64, py::arg("seed") = 0,
        "moving-square dataset whose label is the motion direction");
}
