// Acceptance gate: one line per criterion, exit code counts failures.
// Heavier end-to-end checks (pretraining ablations) live at the end.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "vtdl/augment.hpp"
#include "vtdl/evaluation.hpp"
#include "vtdl/model.hpp"
#include "vtdl/objective.hpp"
#include "vtdl/sampling.hpp"
#include "vtdl/training.hpp"

using namespace vtdl;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* pattern, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, pattern, v);
    return buf;
}

VideoClip random_clip(Rng& rng, std::size_t t, std::size_t h, std::size_t w,
                      const std::string& id = "accept") {
    VideoClip clip;
    clip.frames = Tensor({t, h, w, 3});
    for (std::size_t i = 0; i < clip.frames.size(); ++i) clip.frames[i] = rng.uniform();
    clip.source_id = id;
    clip.crop_box = {0, 0, h, w};
    return clip;
}

fs::path work_dir() {
    static fs::path root = [] {
        fs::path p = fs::temp_directory_path() / "vtdl-acceptance";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return root;
}

std::string file_bytes(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---- criterion 1: mixing scales temporal differences exactly ----

Outcome c1_derivative_identity() {
    Rng rng(101);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        VideoClip clip = random_clip(rng, 16, 32, 32);
        Tensor frame({32, 32, 3});
        for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = rng.uniform();
        for (double alpha : {0.5, 0.7, 1.0}) {
            VideoClip mixed = tca_mix(clip, frame, alpha);
            for (std::size_t k : {1, 2, 3}) {
                Tensor d_orig = frame_difference(clip, k);
                Tensor d_mix = frame_difference(mixed, k);
                for (std::size_t i = 0; i < d_mix.size(); ++i)
                    worst = std::max(worst, std::abs(d_mix[i] - alpha * d_orig[i]));
            }
        }
    }
    return {worst <= 1e-12, "max abs err " + fmt("%.2e", worst)};
}

// ---- criterion 2: loss against a straight-line reimplementation ----

Outcome c2_loss_oracle() {
    Rng rng(102);
    auto unit = [&](std::size_t dim) {
        Embedding v(dim);
        double norm = 0.0;
        for (auto& x : v) {
            x = rng.normal();
            norm += x * x;
        }
        norm = std::sqrt(norm);
        for (auto& x : v) x /= norm;
        return v;
    };

    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        std::size_t dim = 4 + rng.below(29);
        std::size_t n = 1 + rng.below(8);
        std::size_t k = rng.below(33);
        MemoryBank bank(k, dim);
        for (std::size_t i = 0; i < k; ++i) {
            Embedding s = unit(dim);
            std::copy(s.begin(), s.end(), bank.slot(i));
        }
        std::vector<TripletEmbedding> batch(n);
        for (auto& t : batch) {
            t.v_a = unit(dim);
            t.v_p = unit(dim);
            t.v_n = unit(dim);
        }
        TdLossResult res = td_loss(batch, bank, {0.07});

        double expect = 0.0;
        for (const auto& t : batch) {
            auto d = [&](const Embedding& a, const Embedding& b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < dim; ++j) dot += a[j] * b[j];
                return std::exp(dot / 0.07);
            };
            double denom = d(t.v_a, t.v_p) + d(t.v_a, t.v_n);
            for (std::size_t i = 0; i < k; ++i) {
                Embedding slot(bank.slot(i), bank.slot(i) + dim);
                denom += d(t.v_a, slot);
            }
            expect -= std::log(d(t.v_a, t.v_p) / denom);
        }
        expect /= double(n);
        worst = std::max(worst, std::abs(res.loss - expect));
    }

    // orthogonal anchor/positive/negative with no bank: exactly log 2
    Embedding a(6, 0.0), p(6, 0.0), nv(6, 0.0);
    a[0] = p[1] = nv[2] = 1.0;
    double sym = std::abs(td_loss({{a, p, nv}}, MemoryBank(0, 6), {0.07}).loss -
                          std::log(2.0));

    bool pass = worst <= 1e-10 && sym <= 1e-12;
    return {pass, "max abs err " + fmt("%.2e", worst) + ", log2 case " + fmt("%.2e", sym)};
}

// ---- criterion 3: analytic encoder gradients vs central differences ----

Outcome c3_gradient_check() {
    EncoderSpec spec;
    spec.blocks = {{6, 2, 1}, {8, 2, 2}};
    spec.embed_dim = 12;
    Encoder encoder(spec);
    Rng rng(103);
    Params params = encoder.init_params(rng);
    if (params.total_elements() < 500)
        return {false, "model too small for the check"};

    VideoClip clip = random_clip(rng, 8, 12, 12);
    std::vector<double> probe(spec.embed_dim);
    for (auto& v : probe) v = rng.normal();
    auto loss_of = [&]() {
        Embedding e = encoder.encode_one(params, clip);
        double s = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) s += e[j] * probe[j];
        return s;
    };

    Params grads = params.zeros_like();
    ForwardCache cache;
    encoder.encode_one(params, clip, &cache);
    encoder.backward(params, cache, probe, grads);

    const double eps = 1e-5;
    std::size_t checked = 0, ok = 0;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = params.item(pi).second;
        std::size_t stride = 3; // covers >600 of the ~1900 coordinates
        for (std::size_t j = 0; j < t.size(); j += stride) {
            double keep = t[j];
            t[j] = keep + eps;
            double hi = loss_of();
            t[j] = keep - eps;
            double lo = loss_of();
            t[j] = keep;
            double fd = (hi - lo) / (2 * eps);
            double an = grads.item(pi).second[j];
            if (std::abs(an - fd) <= 1e-9 + 1e-4 * std::max(std::abs(an), std::abs(fd)))
                ++ok;
            ++checked;
        }
    }
    bool pass = checked >= 500 && double(ok) >= 0.99 * double(checked);
    std::ostringstream d;
    d << ok << "/" << checked << " coordinates within tolerance";
    return {pass, d.str()};
}

// ---- criterion 4: FIFO bank, momentum closure, bit-exact resume ----

Outcome c4_state_maintenance() {
    // FIFO through wraparound: K + j single pushes
    const std::size_t k = 16, j = 5, dim = 4;
    MemoryBank bank(k, dim);
    std::deque<double> ref(k, 0.0);
    for (std::size_t i = 1; i <= k + j; ++i) {
        bank_push(bank, {Embedding{double(i), 0, 0, 0}});
        ref.pop_front();
        ref.push_back(double(i));
    }
    if (bank.cursor() != (k + j) % k) return {false, "bank cursor out of step"};
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t age = (i + k - bank.cursor()) % k;
        if (bank.slot(i)[0] != ref[age]) return {false, "bank slots differ from FIFO model"};
    }

    // momentum closure: history_n = 1 - m^n toward a fixed online value
    Params online, history;
    online.add("w", Tensor::full({1}, 1.0));
    history.add("w", Tensor::zeros({1}));
    double worst = 0.0;
    for (int n = 1; n <= 200; ++n) {
        momentum_update(history, online, 0.99);
        worst = std::max(worst, std::abs(history.at("w")[0] - (1.0 - std::pow(0.99, n))));
    }
    if (worst > 1e-12) return {false, "momentum closure err " + fmt("%.2e", worst)};

    // interrupted vs straight run: identical checkpoint bytes
    Rng rng(104);
    std::vector<VideoClip> dataset;
    for (int i = 0; i < 4; ++i)
        dataset.push_back(random_clip(rng, 12, 28, 28, "resume-" + std::to_string(i)));
    TrainConfig cfg;
    cfg.epochs = 2;
    cfg.batch_size = 2;
    cfg.bank_capacity = 8;
    cfg.seed = 7;
    cfg.sampling = {4, 1, 2, 16, 4};
    cfg.basic_aug.crop_size = 16;
    cfg.model.blocks = {{4, 2, 1}, {4, 2, 2}};
    cfg.model.embed_dim = 8;

    fs::path straight = work_dir() / "resume-straight";
    fs::path resumed = work_dir() / "resume-resumed";
    run_pretrain(dataset, cfg, straight);
    TrainConfig first = cfg;
    first.epochs = 1;
    run_pretrain(dataset, first, resumed);
    run_pretrain(dataset, cfg, resumed, resumed);
    for (const auto& entry : fs::directory_iterator(straight)) {
        fs::path name = entry.path().filename();
        if (file_bytes(straight / name) != file_bytes(resumed / name))
            return {false, "resume differs in " + name.string()};
    }
    return {true, "fifo, momentum and resume all exact"};
}

// ---- criterion 5: triplet constraints over 10k draws ----

Outcome c5_triplet_constraints() {
    Rng fill(105);
    VideoClip video = random_clip(fill, 100, 28, 28, "constraint-video");
    SamplingConfig cfg; // clip_len 16, stride 4, tau 2, crop 16 below
    cfg.crop_size = 16;
    cfg.min_crop_offset = 4;

    Rng rng(106);
    for (int i = 0; i < 10000; ++i) {
        TemporalTriplet t = sample_triplet(video, cfg, rng);
        std::size_t gap = t.t_a > t.t_n ? t.t_a - t.t_n : t.t_n - t.t_a;
        if (gap <= cfg.tau) return {false, "temporal gap violated at draw " + std::to_string(i)};
        if (t.t_p != t.t_a) return {false, "positive timestep differs from anchor"};
        if (t.anchor.crop_box == t.positive.crop_box)
            return {false, "anchor and positive share a crop box"};
    }
    return {true, "10000/10000 triplets satisfy every constraint"};
}

// ---- criteria 6 and 7: probe quality and the augmentation ablation ----

struct AblationState {
    bool ran = false;
    double mean_on = 0.0, mean_rand = 0.0, mean_control = 0.0, mean_off = 0.0;
    double seconds_c6 = 0.0, seconds_c7 = 0.0;
    std::string error;
};

AblationState g_ablation;

TrainConfig ablation_config(std::uint64_t seed, bool tca_on) {
    TrainConfig cfg;
    cfg.epochs = 20;
    cfg.batch_size = 16;
    cfg.bank_capacity = 1024;
    cfg.seed = seed;
    cfg.lr0 = 0.02;
    cfg.lr_decay_every = 12;
    cfg.lr_decay_factor = 0.2;
    if (!tca_on) {
        cfg.tca.enable_cutout = false;
        cfg.tca.enable_internal_mix = false;
        cfg.tca.enable_external_mix = false;
    }
    return cfg;
}

void run_ablation() {
    g_ablation.ran = true;
    try {
        SynthConfig synth; // 4 classes, 128 + 32 per class, 64-frame 32x32 videos
        LabeledDataset data = generate_synthetic(synth);
        std::vector<VideoClip> pretrain_videos;
        pretrain_videos.reserve(data.train.size());
        for (const auto& lv : data.train) pretrain_videos.push_back(lv.video);

        const std::uint64_t seeds[3] = {1, 2, 3};
        auto t6 = Clock::now();
        double sum_on = 0.0, sum_rand = 0.0, sum_control = 0.0;
        for (std::uint64_t seed : seeds) {
            TrainConfig cfg = ablation_config(seed, true);
            fs::path dir = work_dir() / ("on-" + std::to_string(seed));
            run_pretrain(pretrain_videos, cfg, dir);
            Checkpoint ckpt = load_checkpoint(dir);
            Encoder encoder(ckpt.spec);
            sum_on += linear_probe(encoder, ckpt.state.pair.online, data).top1;
            sum_control += appearance_control(encoder, ckpt.state.pair.online, data).top1;
            Rng init_rng(seed);
            Params fresh = encoder.init_params(init_rng);
            sum_rand += linear_probe(encoder, fresh, data).top1;
        }
        g_ablation.mean_on = sum_on / 3.0;
        g_ablation.mean_rand = sum_rand / 3.0;
        g_ablation.mean_control = sum_control / 3.0;
        g_ablation.seconds_c6 = seconds_since(t6);

        auto t7 = Clock::now();
        double sum_off = 0.0;
        for (std::uint64_t seed : seeds) {
            TrainConfig cfg = ablation_config(seed, false);
            fs::path dir = work_dir() / ("off-" + std::to_string(seed));
            run_pretrain(pretrain_videos, cfg, dir);
            Checkpoint ckpt = load_checkpoint(dir);
            Encoder encoder(ckpt.spec);
            sum_off += linear_probe(encoder, ckpt.state.pair.online, data).top1;
        }
        g_ablation.mean_off = sum_off / 3.0;
        g_ablation.seconds_c7 = seconds_since(t7);
    } catch (const std::exception& e) {
        g_ablation.error = e.what();
    }
}

Outcome c6_probe_quality() {
    if (!g_ablation.ran) run_ablation();
    if (!g_ablation.error.empty()) return {false, "run failed: " + g_ablation.error};
    bool pass = g_ablation.mean_on >= 0.60 &&
                g_ablation.mean_on - g_ablation.mean_rand >= 0.20 &&
                g_ablation.mean_control <= 0.40 && g_ablation.seconds_c6 <= 1200.0;
    std::ostringstream d;
    d << "probe " << fmt("%.3f", g_ablation.mean_on) << ", random-init "
      << fmt("%.3f", g_ablation.mean_rand) << ", control "
      << fmt("%.3f", g_ablation.mean_control) << " over 3 seeds in "
      << fmt("%.0f", g_ablation.seconds_c6) << "s";
    return {pass, d.str()};
}

Outcome c7_tca_ablation() {
    if (!g_ablation.ran) run_ablation();
    if (!g_ablation.error.empty()) return {false, "run failed: " + g_ablation.error};
    double total = g_ablation.seconds_c6 + g_ablation.seconds_c7;
    bool pass = g_ablation.mean_on >= g_ablation.mean_off + 0.05 && total <= 2400.0;
    std::ostringstream d;
    d << "with augmentation " << fmt("%.3f", g_ablation.mean_on) << ", without "
      << fmt("%.3f", g_ablation.mean_off) << ", total " << fmt("%.0f", total) << "s";
    return {pass, d.str()};
}

// ---- criterion 8: the selfcheck command and its fault injections ----

#ifdef VTDL_CLI_PATH
int run_binary(const std::string& args) {
    std::string cmd = "\"" VTDL_CLI_PATH "\" " + args + " > /dev/null 2>&1";
    int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

Outcome c8_selfcheck() {
    auto t0 = Clock::now();
    int clean = run_binary("selfcheck");
    double clean_seconds = seconds_since(t0);
    if (clean != 0) return {false, "clean selfcheck exited " + std::to_string(clean)};
    if (clean_seconds > 60.0)
        return {false, "clean selfcheck took " + fmt("%.0f", clean_seconds) + "s"};

    for (const char* fault : {"cutout-before-mix", "per-frame-alpha", "bank-no-advance"}) {
        int code = run_binary(std::string("selfcheck --inject-fault ") + fault);
        if (code != 1)
            return {false, std::string("fault ") + fault + " exited " +
                               std::to_string(code) + ", expected 1"};
    }
    return {true, "clean pass in " + fmt("%.1f", clean_seconds) + "s, all faults caught"};
}
#else
Outcome c8_selfcheck() {
    return {false, "built without the CLI"};
}
#endif

} // namespace

int main() {
    struct Criterion {
        const char* name;
        Outcome (*fn)();
    } criteria[] = {
        {"derivative-scaling-identity", c1_derivative_identity},
        {"loss-oracle-agreement", c2_loss_oracle},
        {"encoder-gradient-check", c3_gradient_check},
        {"bank-momentum-resume", c4_state_maintenance},
        {"triplet-constraints", c5_triplet_constraints},
        {"synthetic-probe-quality", c6_probe_quality},
        {"augmentation-ablation", c7_tca_ablation},
        {"selfcheck-fault-injection", c8_selfcheck},
    };

    int failures = 0;
    int index = 0;
    for (const auto& c : criteria) {
        ++index;
        auto t0 = Clock::now();
        Outcome o;
        try {
            o = c.fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        double s = seconds_since(t0);
        std::printf("[%s] %d/%zu %-28s (%.1fs) %s\n", o.pass ? "PASS" : "FAIL", index,
                    std::size(criteria), c.name, s, o.detail.c_str());
        std::fflush(stdout);
        if (!o.pass) ++failures;
    }
    return failures;
}
