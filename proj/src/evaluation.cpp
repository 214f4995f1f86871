#include "vtdl/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>

#include <json.hpp>

#include "vtdl/png_io.hpp"
#include "vtdl/rng.hpp"
#include "vtdl/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace vtdl {

namespace {

constexpr std::uint64_t kLabelStream = 1;
constexpr std::uint64_t kTrainVideoStream = 2;
constexpr std::uint64_t kTestVideoStream = 3;

const char* kDirectionNames[4] = {"up", "down", "left", "right"};
const std::int64_t kDirections[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}}; // (dy, dx)

void validate(const SynthConfig& cfg) {
    if (cfg.n_classes != 4)
        throw ConfigInfeasible("synth: n_classes must be 4 (the motion directions)");
    if (cfg.square_size >= cfg.frame_size)
        throw ConfigInfeasible("synth: square_size must be smaller than frame_size");
    if (cfg.square_size == 0) throw ConfigInfeasible("synth: square_size must be positive");
    if (cfg.clip_len_source < 2) throw ConfigInfeasible("synth: clip_len_source must be >= 2");
    if (cfg.speeds.empty()) throw ConfigInfeasible("synth: speeds list is empty");
    for (std::size_t s : cfg.speeds)
        if (s == 0 || s >= cfg.frame_size)
            throw ConfigInfeasible("synth: speeds must lie in [1, frame_size)");
}

// Smooth per-video background: a coarse uniform-noise grid upsampled
// bilinearly, constant across frames.
std::vector<double> smooth_background(std::size_t frame, Rng& rng) {
    std::size_t grid = std::max<std::size_t>(2, frame / 4);
    std::vector<double> coarse(grid * grid * 3);
    for (double& v : coarse) v = rng.uniform(0.1, 0.9);

    std::vector<double> bg(frame * frame * 3);
    double step = double(grid - 1) / double(frame - 1);
    for (std::size_t y = 0; y < frame; ++y) {
        double gy = double(y) * step;
        std::size_t y0 = std::min<std::size_t>(grid - 2, std::size_t(gy));
        double fy = gy - double(y0);
        for (std::size_t x = 0; x < frame; ++x) {
            double gx = double(x) * step;
            std::size_t x0 = std::min<std::size_t>(grid - 2, std::size_t(gx));
            double fx = gx - double(x0);
            for (std::size_t c = 0; c < 3; ++c) {
                double v00 = coarse[(y0 * grid + x0) * 3 + c];
                double v01 = coarse[(y0 * grid + x0 + 1) * 3 + c];
                double v10 = coarse[((y0 + 1) * grid + x0) * 3 + c];
                double v11 = coarse[((y0 + 1) * grid + x0 + 1) * 3 + c];
                double top = v00 + fx * (v01 - v00);
                double bot = v10 + fx * (v11 - v10);
                bg[(y * frame + x) * 3 + c] = top + fy * (bot - top);
            }
        }
    }
    return bg;
}

LabeledVideo make_video(const SynthConfig& cfg, std::uint64_t stream, std::size_t index,
                        std::size_t label, const std::string& id) {
    Rng rng(mix_seed(cfg.seed, stream, index));
    std::size_t f = cfg.frame_size;

    // Appearance and motion magnitude are drawn before the label is even
    // looked at, so they cannot encode it.
    std::vector<double> bg = smooth_background(f, rng);
    double color[3];
    for (double& c : color) c = rng.uniform(0.25, 1.0);
    std::size_t speed = cfg.speeds[rng.below(cfg.speeds.size())];
    std::int64_t top = std::int64_t(rng.below(f));
    std::int64_t left = std::int64_t(rng.below(f));

    std::int64_t dy = kDirections[label][0] * std::int64_t(speed);
    std::int64_t dx = kDirections[label][1] * std::int64_t(speed);

    Tensor frames({cfg.clip_len_source, f, f, 3});
    std::int64_t fi = std::int64_t(f);
    for (std::size_t t = 0; t < cfg.clip_len_source; ++t) {
        double* frame = frames.data() + t * f * f * 3;
        std::copy(bg.begin(), bg.end(), frame);
        std::int64_t py = ((top + std::int64_t(t) * dy) % fi + fi) % fi;
        std::int64_t px = ((left + std::int64_t(t) * dx) % fi + fi) % fi;
        for (std::size_t sy = 0; sy < cfg.square_size; ++sy) {
            std::size_t y = std::size_t((py + std::int64_t(sy)) % fi);
            for (std::size_t sx = 0; sx < cfg.square_size; ++sx) {
                std::size_t x = std::size_t((px + std::int64_t(sx)) % fi);
                double* px3 = frame + (y * f + x) * 3;
                px3[0] = color[0];
                px3[1] = color[1];
                px3[2] = color[2];
            }
        }
    }

    LabeledVideo out;
    out.video.frames = std::move(frames);
    out.video.source_id = id;
    out.video.start_timestep = 0;
    out.video.temporal_stride = 1;
    out.video.crop_box = CropBox{0, 0, f, f};
    out.label = label;
    return out;
}

std::vector<std::size_t> balanced_labels(std::size_t n_classes, std::size_t per_class,
                                         Rng& rng) {
    std::vector<std::size_t> labels;
    labels.reserve(n_classes * per_class);
    for (std::size_t c = 0; c < n_classes; ++c)
        labels.insert(labels.end(), per_class, c);
    for (std::size_t i = labels.size(); i > 1; --i) {
        std::size_t j = rng.below(i);
        std::swap(labels[i - 1], labels[j]);
    }
    return labels;
}

std::string video_id(const char* split, std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "synth-%s-%04zu", split, index);
    return buf;
}

} // namespace

LabeledDataset generate_synthetic(const SynthConfig& cfg) {
    validate(cfg);

    Rng label_rng(mix_seed(cfg.seed, kLabelStream));
    std::vector<std::size_t> train_labels = balanced_labels(cfg.n_classes, cfg.n_train,
                                                            label_rng);
    std::vector<std::size_t> test_labels = balanced_labels(cfg.n_classes, cfg.n_test,
                                                           label_rng);

    LabeledDataset ds;
    ds.class_names.assign(kDirectionNames, kDirectionNames + 4);
    ds.train.reserve(train_labels.size());
    ds.test.reserve(test_labels.size());
    for (std::size_t i = 0; i < train_labels.size(); ++i)
        ds.train.push_back(make_video(cfg, kTrainVideoStream, i, train_labels[i],
                                      video_id("train", i)));
    for (std::size_t i = 0; i < test_labels.size(); ++i)
        ds.test.push_back(make_video(cfg, kTestVideoStream, i, test_labels[i],
                                     video_id("test", i)));
    return ds;
}

void write_synth_dataset(const LabeledDataset& dataset, const fs::path& dir) {
    fs::create_directories(dir);
    json videos = json::object();

    auto dump_split = [&](const std::vector<LabeledVideo>& split, const char* name) {
        for (const auto& lv : split) {
            const VideoClip& v = lv.video;
            fs::path vdir = dir / v.source_id;
            fs::create_directories(vdir);
            std::size_t h = v.height(), w = v.width(), c = v.channels();
            ImageU8 img;
            img.height = h;
            img.width = w;
            img.channels = c;
            img.pixels.resize(h * w * c);
            for (std::size_t t = 0; t < v.length(); ++t) {
                const double* f = v.frames.data() + t * h * w * c;
                for (std::size_t i = 0; i < h * w * c; ++i)
                    img.pixels[i] = std::uint8_t(std::lround(f[i] * 255.0));
                char buf[32];
                std::snprintf(buf, sizeof buf, "frame_%03zu.png", t);
                write_png(img, vdir / buf);
            }
            videos[v.source_id] = {{"label", lv.label},
                                   {"class", dataset.class_names[lv.label]},
                                   {"split", name}};
        }
    };
    dump_split(dataset.train, "train");
    dump_split(dataset.test, "test");

    json root;
    root["classes"] = dataset.class_names;
    root["videos"] = videos;
    std::ofstream out(dir / "labels.json");
    if (!out) throw Error("write_synth_dataset: cannot write labels.json");
    out << root.dump(2) << "\n";
}

LabeledDataset load_labeled_dataset(const fs::path& dir) {
    std::ifstream in(dir / "labels.json");
    if (!in) throw Error("load_labeled_dataset: missing labels.json in " + dir.string());
    json root;
    try {
        in >> root;
    } catch (const json::exception& e) {
        throw Error(std::string("load_labeled_dataset: labels.json parse failure: ") +
                    e.what());
    }

    LabeledDataset ds;
    for (const auto& c : root.at("classes")) ds.class_names.push_back(c.get<std::string>());
    for (const auto& [id, meta] : root.at("videos").items()) {
        LabeledVideo lv;
        lv.video = load_frame_dir(dir / id);
        lv.label = meta.at("label").get<std::size_t>();
        if (lv.label >= ds.class_names.size())
            throw Error("load_labeled_dataset: label out of range for video " + id);
        std::string split = meta.at("split").get<std::string>();
        if (split == "train")
            ds.train.push_back(std::move(lv));
        else if (split == "test")
            ds.test.push_back(std::move(lv));
        else
            throw Error("load_labeled_dataset: unknown split '" + split + "' for " + id);
    }
    return ds;
}

std::vector<VideoClip> load_video_dirs(const fs::path& dir) {
    std::vector<fs::path> subdirs;
    for (const auto& entry : fs::directory_iterator(dir))
        if (entry.is_directory()) subdirs.push_back(entry.path());
    std::sort(subdirs.begin(), subdirs.end());
    std::vector<VideoClip> out;
    out.reserve(subdirs.size());
    for (const auto& p : subdirs) out.push_back(load_frame_dir(p));
    if (out.empty()) throw Error("load_video_dirs: no frame directories under " + dir.string());
    return out;
}

VideoClip probe_clip(const VideoClip& video, const ProbeConfig& cfg) {
    SamplingConfig sc;
    sc.clip_len = cfg.clip_len;
    sc.temporal_stride = cfg.temporal_stride;
    sc.crop_size = video.width(); // unused: we pass an explicit full-frame box
    CropBox full{0, 0, video.height(), video.width()};
    return sample_clip(video, 0, sc, full);
}

std::vector<std::vector<double>> one_hot_features(const std::vector<std::size_t>& labels,
                                                  std::size_t n_classes) {
    std::vector<std::vector<double>> out(labels.size(),
                                         std::vector<double>(n_classes, 0.0));
    for (std::size_t i = 0; i < labels.size(); ++i) out[i][labels[i]] = 1.0;
    return out;
}

ProbeResult probe_on_features(const std::vector<std::vector<double>>& train_x,
                              const std::vector<std::size_t>& train_y,
                              const std::vector<std::vector<double>>& test_x,
                              const std::vector<std::size_t>& test_y, std::size_t n_classes,
                              const ProbeConfig& cfg) {
    if (train_x.empty() || test_x.empty())
        throw Error("probe_on_features: empty feature set");
    if (train_x.size() != train_y.size() || test_x.size() != test_y.size())
        throw ShapeMismatch("probe_on_features: features and labels misaligned");
    std::size_t dim = train_x[0].size();

    // Deterministic zero init; the class targets break the symmetry.
    Params probe;
    probe.add("weight", Tensor::zeros({dim, n_classes}));
    probe.add("bias", Tensor::zeros({n_classes}));
    Params velocity = probe.zeros_like();

    std::size_t n = train_x.size();
    std::vector<double> logits(n_classes);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        Params grads = probe.zeros_like();
        Tensor& gw = grads.at("weight");
        Tensor& gb = grads.at("bias");
        const Tensor& w = probe.at("weight");
        const Tensor& b = probe.at("bias");
        for (std::size_t i = 0; i < n; ++i) {
            const std::vector<double>& x = train_x[i];
            for (std::size_t c = 0; c < n_classes; ++c) logits[c] = b[c];
            for (std::size_t d = 0; d < dim; ++d) {
                double xv = x[d];
                const double* wr = w.data() + d * n_classes;
                for (std::size_t c = 0; c < n_classes; ++c) logits[c] += xv * wr[c];
            }
            double mx = *std::max_element(logits.begin(), logits.end());
            double z = 0.0;
            for (std::size_t c = 0; c < n_classes; ++c) {
                logits[c] = std::exp(logits[c] - mx);
                z += logits[c];
            }
            for (std::size_t c = 0; c < n_classes; ++c) {
                double g = (logits[c] / z - (c == train_y[i] ? 1.0 : 0.0)) / double(n);
                gb[c] += g;
                for (std::size_t d = 0; d < dim; ++d) gw[d * n_classes + c] += x[d] * g;
            }
        }
        sgd_update(probe, grads, velocity, cfg.lr, cfg.momentum, 0.0);
    }

    ProbeResult res;
    res.confusion.assign(n_classes, std::vector<std::size_t>(n_classes, 0));
    const Tensor& w = probe.at("weight");
    const Tensor& b = probe.at("bias");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < test_x.size(); ++i) {
        for (std::size_t c = 0; c < n_classes; ++c) logits[c] = b[c];
        for (std::size_t d = 0; d < dim; ++d) {
            double xv = test_x[i][d];
            const double* wr = w.data() + d * n_classes;
            for (std::size_t c = 0; c < n_classes; ++c) logits[c] += xv * wr[c];
        }
        std::size_t pred = std::size_t(
            std::max_element(logits.begin(), logits.end()) - logits.begin());
        res.confusion[test_y[i]][pred]++;
        if (pred == test_y[i]) ++hits;
    }
    res.top1 = double(hits) / double(test_x.size());
    res.per_class.resize(n_classes, 0.0);
    for (std::size_t c = 0; c < n_classes; ++c) {
        std::size_t row = 0;
        for (std::size_t k = 0; k < n_classes; ++k) row += res.confusion[c][k];
        res.per_class[c] = row ? double(res.confusion[c][c]) / double(row) : 0.0;
    }
    return res;
}

namespace {

ProbeResult probe_impl(const Encoder& encoder, const Params& params,
                       const LabeledDataset& dataset, const ProbeConfig& cfg,
                       bool static_control) {
    auto clips_of = [&](const std::vector<LabeledVideo>& split) {
        std::vector<VideoClip> clips;
        std::vector<std::size_t> labels;
        clips.reserve(split.size());
        labels.reserve(split.size());
        for (const auto& lv : split) {
            VideoClip clip = probe_clip(lv.video, cfg);
            if (static_control) {
                // first-frame repetition happens on the evaluation clip
                std::size_t fsz = clip.height() * clip.width() * clip.channels();
                for (std::size_t t = 1; t < clip.length(); ++t)
                    std::copy(clip.frames.data(), clip.frames.data() + fsz,
                              clip.frames.data() + t * fsz);
            }
            clips.push_back(std::move(clip));
            labels.push_back(lv.label);
        }
        return std::make_pair(std::move(clips), std::move(labels));
    };
    auto pointers = [](const std::vector<VideoClip>& clips) {
        std::vector<const VideoClip*> ptrs(clips.size());
        for (std::size_t i = 0; i < clips.size(); ++i) ptrs[i] = &clips[i];
        return ptrs;
    };

    // Normalization statistics come from the training split and stay frozen
    // for the held-out clips, so a test feature never depends on the rest of
    // the test set.
    auto [train_clips, train_y] = clips_of(dataset.train);
    auto [test_clips, test_y] = clips_of(dataset.test);
    NormStats stats;
    auto train_x = encoder.backbone_batch(params, pointers(train_clips), nullptr, &stats);
    auto test_x = encoder.backbone_batch(params, pointers(test_clips), &stats);
    return probe_on_features(train_x, train_y, test_x, test_y, dataset.class_names.size(),
                             cfg);
}

} // namespace

ProbeResult linear_probe(const Encoder& encoder, const Params& params,
                         const LabeledDataset& dataset, const ProbeConfig& cfg) {
    return probe_impl(encoder, params, dataset, cfg, false);
}

ProbeResult appearance_control(const Encoder& encoder, const Params& params,
                               const LabeledDataset& dataset, const ProbeConfig& cfg) {
    return probe_impl(encoder, params, dataset, cfg, true);
}

} // namespace vtdl
