#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "helpers.hpp"
#include "vtdl/evaluation.hpp"

using namespace vtdl;
namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

fs::path temp_dir(const std::string& leaf) {
    fs::path p = fs::temp_directory_path() / "vtdl-evaluation-tests" / leaf;
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(bool(in));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Per-pixel temporal median. The square occupies any one pixel for well under
// half the clip, so the median recovers the static background exactly.
std::vector<double> median_background(const Tensor& frames) {
    std::size_t t = frames.dim(0), elems = frames.size() / t;
    std::vector<double> bg(elems);
    std::vector<double> column(t);
    for (std::size_t j = 0; j < elems; ++j) {
        for (std::size_t i = 0; i < t; ++i) column[i] = frames[i * elems + j];
        std::sort(column.begin(), column.end());
        bg[j] = t % 2 ? column[t / 2] : 0.5 * (column[t / 2 - 1] + column[t / 2]);
    }
    return bg;
}

// Boolean square mask for one frame: pixels that differ from the background.
std::vector<char> frame_mask(const Tensor& frames, const std::vector<double>& bg,
                             std::size_t t) {
    std::size_t h = frames.dim(1), w = frames.dim(2), c = frames.dim(3);
    std::vector<char> mask(h * w, 0);
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
            for (std::size_t ch = 0; ch < c; ++ch)
                if (std::abs(frames.at4(t, y, x, ch) - bg[(y * w + x) * c + ch]) > 1e-9) {
                    mask[y * w + x] = 1;
                    break;
                }
    return mask;
}

bool shifted_equal(const std::vector<char>& from, const std::vector<char>& to,
                   std::size_t h, std::size_t w, std::ptrdiff_t dy, std::ptrdiff_t dx) {
    for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x) {
            std::size_t ny = std::size_t((std::ptrdiff_t(y) + dy + std::ptrdiff_t(h)) % std::ptrdiff_t(h));
            std::size_t nx = std::size_t((std::ptrdiff_t(x) + dx + std::ptrdiff_t(w)) % std::ptrdiff_t(w));
            if (to[ny * w + nx] != from[y * w + x]) return false;
        }
    return true;
}

// Directions in (dy, dx) row-column form: up decreases the row index.
constexpr std::ptrdiff_t kDir[4][2] = {{-1, 0}, {1, 0}, {0, -1}, {0, 1}};

// Recovers (direction, speed) of the moving block by testing which toroidal
// shift maps every frame's mask onto the next frame's mask.
std::pair<std::size_t, std::size_t> recover_motion(const VideoClip& video,
                                                   const std::vector<std::size_t>& speeds) {
    auto bg = median_background(video.frames);
    std::size_t h = video.height(), w = video.width();
    std::size_t t = video.length();
    std::vector<std::vector<char>> masks(t);
    for (std::size_t i = 0; i < t; ++i) {
        masks[i] = frame_mask(video.frames, bg, i);
        REQUIRE(std::count(masks[i].begin(), masks[i].end(), 1) > 0);
    }
    for (std::size_t d = 0; d < 4; ++d)
        for (std::size_t s : speeds) {
            bool all = true;
            for (std::size_t i = 0; i + 1 < t && all; ++i)
                all = shifted_equal(masks[i], masks[i + 1], h, w,
                                    kDir[d][0] * std::ptrdiff_t(s),
                                    kDir[d][1] * std::ptrdiff_t(s));
            if (all) return {d, s};
        }
    FAIL("no candidate displacement reproduces the observed motion");
    return {0, 0};
}

SynthConfig oracle_config() {
    SynthConfig cfg;
    cfg.n_train = 24;
    cfg.n_test = 6;
    cfg.frame_size = 24;
    cfg.clip_len_source = 48;
    cfg.square_size = 6;
    cfg.seed = 5;
    return cfg;
}

SynthConfig tiny_config() {
    SynthConfig cfg;
    cfg.n_train = 2;
    cfg.n_test = 1;
    cfg.frame_size = 12;
    cfg.clip_len_source = 6;
    cfg.square_size = 4;
    cfg.seed = 9;
    return cfg;
}

} // namespace

TEST_CASE("synthetic videos carry their labeled motion and nothing else moves") {
    SynthConfig cfg = oracle_config();
    LabeledDataset data = generate_synthetic(cfg);

    REQUIRE(data.class_names == std::vector<std::string>{"up", "down", "left", "right"});
    REQUIRE(data.train.size() == 4 * cfg.n_train);
    REQUIRE(data.test.size() == 4 * cfg.n_test);

    std::map<std::size_t, std::size_t> speed_by_label[4];
    auto check_split = [&](const std::vector<LabeledVideo>& split, std::size_t per_class) {
        std::vector<std::size_t> counts(4, 0);
        for (const auto& lv : split) {
            REQUIRE(lv.label < 4);
            ++counts[lv.label];
            REQUIRE(lv.video.frames.shape() ==
                    std::vector<std::size_t>{cfg.clip_len_source, cfg.frame_size,
                                             cfg.frame_size, 3});
            double lo = 1.0, hi = 0.0;
            for (std::size_t i = 0; i < lv.video.frames.size(); ++i) {
                lo = std::min(lo, lv.video.frames[i]);
                hi = std::max(hi, lv.video.frames[i]);
            }
            REQUIRE(lo >= 0.0);
            REQUIRE(hi <= 1.0);
            auto [dir, speed] = recover_motion(lv.video, cfg.speeds);
            CHECK(dir == lv.label);
            ++speed_by_label[lv.label][speed];
        }
        for (std::size_t c = 0; c < 4; ++c) CHECK(counts[c] == per_class);
    };
    check_split(data.train, cfg.n_train);
    check_split(data.test, cfg.n_test);

    // chi-squared independence of label and drawn speed (df 3, p = 0.001)
    double table[4][2] = {};
    double row[4] = {}, col[2] = {}, n = 0;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t s = 0; s < cfg.speeds.size(); ++s) {
            table[c][s] = double(speed_by_label[c][cfg.speeds[s]]);
            row[c] += table[c][s];
            col[s] += table[c][s];
            n += table[c][s];
        }
    double chi2 = 0.0;
    for (std::size_t c = 0; c < 4; ++c)
        for (std::size_t s = 0; s < 2; ++s) {
            double expect = row[c] * col[s] / n;
            if (expect > 0) chi2 += (table[c][s] - expect) * (table[c][s] - expect) / expect;
        }
    CHECK(chi2 < 16.27);
}

TEST_CASE("synthetic ids follow the split naming scheme") {
    SynthConfig cfg = tiny_config();
    LabeledDataset data = generate_synthetic(cfg);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth-train-%04zu", i);
        CHECK(data.train[i].video.source_id == buf);
    }
    for (std::size_t i = 0; i < data.test.size(); ++i) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "synth-test-%04zu", i);
        CHECK(data.test[i].video.source_id == buf);
    }
}

TEST_CASE("generation is a pure function of its config") {
    SynthConfig cfg = tiny_config();
    LabeledDataset a = generate_synthetic(cfg);
    LabeledDataset b = generate_synthetic(cfg);
    REQUIRE(a.train.size() == b.train.size());
    for (std::size_t i = 0; i < a.train.size(); ++i) {
        CHECK(a.train[i].label == b.train[i].label);
        REQUIRE(a.train[i].video.frames.size() == b.train[i].video.frames.size());
        for (std::size_t j = 0; j < a.train[i].video.frames.size(); ++j)
            CHECK(a.train[i].video.frames[j] == b.train[i].video.frames[j]);
    }
    cfg.seed = 10;
    LabeledDataset c = generate_synthetic(cfg);
    bool any_diff = false;
    for (std::size_t j = 0; j < a.train[0].video.frames.size() && !any_diff; ++j)
        any_diff = a.train[0].video.frames[j] != c.train[0].video.frames[j];
    CHECK(any_diff);
}

TEST_CASE("synthetic config validation") {
    SynthConfig cfg = tiny_config();
    cfg.n_classes = 3;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigInfeasible);
    cfg = tiny_config();
    cfg.square_size = cfg.frame_size;
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigInfeasible);
    cfg = tiny_config();
    cfg.speeds = {};
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigInfeasible);
    cfg = tiny_config();
    cfg.speeds = {0};
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigInfeasible);
    cfg = tiny_config();
    cfg.speeds = {cfg.frame_size};
    CHECK_THROWS_AS(generate_synthetic(cfg), ConfigInfeasible);
}

TEST_CASE("written dataset round-trips within png quantization") {
    SynthConfig cfg = tiny_config();
    LabeledDataset data = generate_synthetic(cfg);
    fs::path dir = temp_dir("roundtrip");
    write_synth_dataset(data, dir);

    json labels = json::parse(file_bytes(dir / "labels.json"));
    REQUIRE(labels["classes"] ==
            json::array({"up", "down", "left", "right"}));
    REQUIRE(labels["videos"].contains("synth-train-0000"));
    REQUIRE(labels["videos"].contains("synth-test-0002"));
    for (const auto& [id, entry] : labels["videos"].items()) {
        std::size_t label = entry["label"].get<std::size_t>();
        REQUIRE(label < 4);
        CHECK(entry["class"] == labels["classes"][label]);
        CHECK((entry["split"] == "train" || entry["split"] == "test"));
        CHECK(fs::exists(dir / id / "frame_000.png"));
    }

    LabeledDataset back = load_labeled_dataset(dir);
    REQUIRE(back.train.size() == data.train.size());
    REQUIRE(back.test.size() == data.test.size());
    REQUIRE(back.class_names == data.class_names);
    for (std::size_t i = 0; i < data.train.size(); ++i) {
        CHECK(back.train[i].label == data.train[i].label);
        CHECK(back.train[i].video.source_id == data.train[i].video.source_id);
        REQUIRE(back.train[i].video.frames.shape() == data.train[i].video.frames.shape());
        double worst = 0.0;
        for (std::size_t j = 0; j < data.train[i].video.frames.size(); ++j)
            worst = std::max(worst, std::abs(back.train[i].video.frames[j] -
                                             data.train[i].video.frames[j]));
        CHECK(worst <= 0.5 / 255.0 + 1e-12);
    }
}

TEST_CASE("dataset files are byte-stable across writes") {
    SynthConfig cfg = tiny_config();
    LabeledDataset data = generate_synthetic(cfg);
    fs::path a = temp_dir("stable-a"), b = temp_dir("stable-b");
    write_synth_dataset(data, a);
    write_synth_dataset(data, b);
    CHECK(file_bytes(a / "labels.json") == file_bytes(b / "labels.json"));
    CHECK(file_bytes(a / "synth-train-0000" / "frame_000.png") ==
          file_bytes(b / "synth-train-0000" / "frame_000.png"));
}

TEST_CASE("unlabeled loading keeps directory name order") {
    SynthConfig cfg = tiny_config();
    LabeledDataset data = generate_synthetic(cfg);
    fs::path dir = temp_dir("unlabeled");
    write_synth_dataset(data, dir);

    std::vector<VideoClip> clips = load_video_dirs(dir);
    REQUIRE(clips.size() == data.train.size() + data.test.size());
    CHECK(std::is_sorted(clips.begin(), clips.end(), [](const auto& x, const auto& y) {
        return x.source_id < y.source_id;
    }));
    // lexicographically, all test ids precede all train ids
    CHECK(clips.front().source_id == "synth-test-0000");
    CHECK(clips.back().source_id == "synth-train-0007");

    CHECK_THROWS_AS(load_video_dirs(temp_dir("empty")), Error);
}

TEST_CASE("probe clips gather strided frames over the full frame") {
    Rng rng(3);
    VideoClip video = vtdl::testing::random_clip(rng, 9, 10, 8, 3, "probe-src");
    ProbeConfig cfg;
    cfg.clip_len = 4;
    cfg.temporal_stride = 2;
    VideoClip clip = probe_clip(video, cfg);
    REQUIRE(clip.frames.shape() == std::vector<std::size_t>{4, 10, 8, 3});
    CHECK(clip.start_timestep == 0);
    CHECK(clip.temporal_stride == 2);
    CHECK(clip.crop_box == CropBox{0, 0, 10, 8});
    CHECK(clip.source_id == "probe-src");
    for (std::size_t t = 0; t < 4; ++t)
        for (std::size_t y = 0; y < 10; ++y)
            for (std::size_t x = 0; x < 8; ++x)
                for (std::size_t c = 0; c < 3; ++c)
                    CHECK(clip.frames.at4(t, y, x, c) == video.frames.at4(2 * t, y, x, c));
}

TEST_CASE("probe on one-hot features is perfect") {
    std::vector<std::size_t> train_y, test_y;
    Rng rng(4);
    for (int i = 0; i < 40; ++i) train_y.push_back(rng.below(4));
    for (int i = 0; i < 12; ++i) test_y.push_back(rng.below(4));
    for (std::size_t c = 0; c < 4; ++c) { // cover every class in both splits
        train_y[c] = c;
        test_y[c] = c;
    }
    auto train_x = one_hot_features(train_y, 4);
    auto test_x = one_hot_features(test_y, 4);
    REQUIRE(train_x.size() == train_y.size());
    REQUIRE(train_x[0].size() == 4);

    ProbeResult res = probe_on_features(train_x, train_y, test_x, test_y, 4);
    CHECK(res.top1 == 1.0);
    REQUIRE(res.per_class.size() == 4);
    for (double v : res.per_class) CHECK(v == 1.0);
    REQUIRE(res.confusion.size() == 4);
    std::size_t diag = 0, total = 0;
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t j = 0; j < 4; ++j) {
            total += res.confusion[i][j];
            if (i == j) diag += res.confusion[i][j];
        }
    CHECK(total == test_y.size());
    CHECK(diag == test_y.size());
}

TEST_CASE("probe separates well-spread feature blobs") {
    Rng rng(5);
    const double centers[4][2] = {{3, 3}, {3, -3}, {-3, 3}, {-3, -3}};
    std::vector<std::vector<double>> train_x, test_x;
    std::vector<std::size_t> train_y, test_y;
    for (std::size_t c = 0; c < 4; ++c)
        for (int i = 0; i < 20; ++i) {
            std::vector<double> v{centers[c][0] + 0.3 * rng.normal(),
                                  centers[c][1] + 0.3 * rng.normal()};
            if (i < 15) {
                train_x.push_back(v);
                train_y.push_back(c);
            } else {
                test_x.push_back(v);
                test_y.push_back(c);
            }
        }
    ProbeResult res = probe_on_features(train_x, train_y, test_x, test_y, 4);
    CHECK(res.top1 == 1.0);
}

TEST_CASE("linear probe and appearance control run against a real encoder") {
    SynthConfig cfg = tiny_config();
    cfg.n_train = 3;
    cfg.n_test = 2;
    LabeledDataset data = generate_synthetic(cfg);

    EncoderSpec spec;
    spec.blocks = {{4, 2, 1}, {4, 2, 2}};
    spec.embed_dim = 8;
    Encoder encoder(spec);
    Rng rng(6);
    Params params = encoder.init_params(rng);

    ProbeConfig pcfg;
    pcfg.clip_len = 4;
    pcfg.temporal_stride = 1;
    pcfg.epochs = 20;

    for (auto fn : {linear_probe, appearance_control}) {
        ProbeResult res = fn(encoder, params, data, pcfg);
        CHECK(res.top1 >= 0.0);
        CHECK(res.top1 <= 1.0);
        REQUIRE(res.confusion.size() == 4);
        std::size_t total = 0;
        for (const auto& r : res.confusion)
            for (std::size_t v : r) total += v;
        CHECK(total == data.test.size());
    }
}
