#include "vtdl/selfcheck.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <sstream>

#include "vtdl/augment.hpp"
#include "vtdl/model.hpp"
#include "vtdl/objective.hpp"
#include "vtdl/sampling.hpp"
#include "vtdl/training.hpp"

namespace vtdl {

namespace {

VideoClip random_clip(Rng& rng, std::size_t t, std::size_t h, std::size_t w,
                      const std::string& id = "check") {
    VideoClip clip;
    clip.frames = Tensor({t, h, w, 3});
    for (std::size_t i = 0; i < clip.frames.size(); ++i) clip.frames[i] = rng.uniform();
    clip.source_id = id;
    clip.crop_box = {0, 0, h, w};
    return clip;
}

std::string max_err(double v) {
    std::ostringstream s;
    s << "max abs error " << v;
    return s.str();
}

// Eq-style derivative scaling: mixing with one static frame scales every
// forward difference by exactly alpha.
CheckResult check_derivative_scaling() {
    CheckResult r{"tca-derivative-scaling", true, 0.0, ""};
    Rng rng(11);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        VideoClip clip = random_clip(rng, 16, 16, 16);
        Tensor frame({16, 16, 3});
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
    if (worst > 1e-12) {
        r.pass = false;
        r.detail = max_err(worst);
    }
    return r;
}

// Full cascade: derivatives outside the cutout scale by the product of the
// mix alphas, and the cutout region is exactly zero in every frame.
CheckResult check_cascade_composition() {
    CheckResult r{"tca-cascade-composition", true, 0.0, ""};
    Rng rng(13);
    TCAConfig cfg;
    double worst = 0.0;
    bool region_zero = true;
    for (int trial = 0; trial < 10 && r.pass; ++trial) {
        VideoClip clip = random_clip(rng, 12, 16, 16, "clip-a");
        VideoClip donor = random_clip(rng, 12, 16, 16, "clip-b");
        auto [mixed, record] = apply_tca(clip, &donor, cfg, rng);

        double alpha_product = 1.0;
        CropBox cut{0, 0, 0, 0};
        for (const auto& e : record) {
            if (e.kind == AugEntry::Kind::InternalMix ||
                e.kind == AugEntry::Kind::ExternalMix)
                alpha_product *= e.alpha;
            if (e.kind == AugEntry::Kind::Cutout) cut = e.region;
        }

        for (std::size_t t = 0; t < mixed.length(); ++t)
            for (std::size_t y = cut.top; y < cut.top + cut.height; ++y)
                for (std::size_t x = cut.left; x < cut.left + cut.width; ++x)
                    for (std::size_t c = 0; c < 3; ++c)
                        if (mixed.frames.at4(t, y, x, c) != 0.0) region_zero = false;

        for (std::size_t k : {1, 2, 3}) {
            Tensor d_orig = frame_difference(clip, k);
            Tensor d_mix = frame_difference(mixed, k);
            std::size_t frames = d_mix.dim(0);
            for (std::size_t t = 0; t < frames; ++t) {
                for (std::size_t y = 0; y < 16; ++y) {
                    bool in_y = y >= cut.top && y < cut.top + cut.height;
                    for (std::size_t x = 0; x < 16; ++x) {
                        if (in_y && x >= cut.left && x < cut.left + cut.width) continue;
                        for (std::size_t c = 0; c < 3; ++c) {
                            double got = d_mix.at4(t, y, x, c);
                            double want = alpha_product * d_orig.at4(t, y, x, c);
                            worst = std::max(worst, std::abs(got - want));
                        }
                    }
                }
            }
        }
        if (worst > 1e-12 || !region_zero) {
            r.pass = false;
            r.detail = region_zero ? max_err(worst) : "cutout region not zero in output";
        }
    }
    return r;
}

// Straight-line re-evaluation of the loss ratio, written independently of the
// library path.
CheckResult check_loss_oracle() {
    CheckResult r{"loss-oracle", true, 0.0, ""};
    Rng rng(17);
    SimilarityConfig sim;
    double worst = 0.0;
    for (int trial = 0; trial < 200; ++trial) {
        std::size_t dim = 16, n = 1 + rng.below(8), k = rng.below(64);
        auto unit = [&]() {
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
        MemoryBank bank(k, dim);
        for (std::size_t i = 0; i < k; ++i) {
            Embedding s = unit();
            std::copy(s.begin(), s.end(), bank.slot(i));
        }
        std::vector<TripletEmbedding> batch(n);
        for (auto& t : batch) {
            t.v_a = unit();
            t.v_p = unit();
            t.v_n = unit();
        }
        TdLossResult res = td_loss(batch, bank, sim);

        double expect = 0.0;
        for (const auto& t : batch) {
            auto d = [&](const Embedding& a, const Embedding& b) {
                double dot = 0.0;
                for (std::size_t j = 0; j < dim; ++j) dot += a[j] * b[j];
                return std::exp(dot / sim.temperature);
            };
            double denom = d(t.v_a, t.v_p) + d(t.v_a, t.v_n);
            for (std::size_t i = 0; i < k; ++i) {
                Embedding slot(bank.slot(i), bank.slot(i) + dim);
                denom += d(t.v_a, slot);
            }
            expect += -std::log(d(t.v_a, t.v_p) / denom);
        }
        expect /= double(n);
        worst = std::max(worst, std::abs(res.loss - expect));
    }

    // symmetric two-term case: loss is exactly log 2
    Embedding a(4, 0.0), p(4, 0.0), nv(4, 0.0);
    a[0] = 1.0;
    p[1] = 1.0;
    nv[2] = 1.0; // equal similarity to the anchor
    TdLossResult sym = td_loss({{a, p, nv}}, MemoryBank(0, 4), sim);
    double sym_err = std::abs(sym.loss - std::log(2.0));

    if (worst > 1e-10 || sym_err > 1e-12) {
        r.pass = false;
        r.detail = max_err(std::max(worst, sym_err));
    }
    return r;
}

CheckResult check_gradients() {
    CheckResult r{"encoder-gradient-check", true, 0.0, ""};
    EncoderSpec spec;
    spec.blocks = {{4, 2, 2}, {6, 2, 2}};
    spec.embed_dim = 8;
    Encoder encoder(spec);
    Rng rng(19);
    Params params = encoder.init_params(rng);
    VideoClip clip = random_clip(rng, 8, 8, 8);

    std::vector<double> probe(spec.embed_dim);
    for (auto& v : probe) v = rng.normal();
    auto loss_of = [&](const Params& p) {
        Embedding e = encoder.encode_one(p, clip);
        double s = 0.0;
        for (std::size_t j = 0; j < e.size(); ++j) s += e[j] * probe[j];
        return s;
    };

    Params grads = params.zeros_like();
    ForwardCache cache;
    encoder.encode_one(params, clip, &cache);
    encoder.backward(params, cache, probe, grads);

    std::size_t checked = 0, failed = 0;
    const double eps = 1e-5;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        Tensor& t = params.item(pi).second;
        std::size_t stride = std::max<std::size_t>(1, t.size() / 12);
        for (std::size_t j = 0; j < t.size(); j += stride) {
            double keep = t[j];
            t[j] = keep + eps;
            double hi = loss_of(params);
            t[j] = keep - eps;
            double lo = loss_of(params);
            t[j] = keep;
            double fd = (hi - lo) / (2 * eps);
            double an = grads.item(pi).second[j];
            double err = std::abs(an - fd);
            if (err > 1e-9 + 1e-4 * std::max(std::abs(an), std::abs(fd))) ++failed;
            ++checked;
        }
    }
    if (failed * 100 > checked) { // more than 1% out of tolerance
        r.pass = false;
        std::ostringstream s;
        s << failed << "/" << checked << " coordinates out of tolerance";
        r.detail = s.str();
    }
    return r;
}

CheckResult check_fifo_bank() {
    CheckResult r{"memory-bank-fifo", true, 0.0, ""};
    Rng rng(23);
    std::size_t dim = 4, k = 8;
    auto vec = [&](double tag) { return Embedding{tag, 0.0, 0.0, 0.0}; };

    MemoryBank bank(k, dim);
    std::deque<double> reference(k, 0.0); // oldest at front
    std::size_t pushed = 0;
    for (std::size_t round = 0; round < k + 3; ++round) {
        std::size_t batch = 1 + rng.below(3);
        std::vector<Embedding> anchors;
        for (std::size_t i = 0; i < batch; ++i) {
            anchors.push_back(vec(double(++pushed)));
            reference.pop_front();
            reference.push_back(double(pushed));
        }
        bank_push(bank, anchors);
        if (bank.cursor() != pushed % k) {
            r.pass = false;
            r.detail = "cursor did not advance by the batch size";
            return r;
        }
    }
    // The ring holds the last k tags; rotate the reference to slot order.
    for (std::size_t i = 0; i < k; ++i) {
        std::size_t age = (i + k - bank.cursor()) % k; // 0 = oldest
        if (bank.slot(i)[0] != reference[age]) {
            r.pass = false;
            r.detail = "slot contents differ from FIFO simulation";
            return r;
        }
    }
    return r;
}

CheckResult check_momentum() {
    CheckResult r{"momentum-contraction", true, 0.0, ""};
    Params online, history;
    online.add("w", Tensor::full({1}, 1.0));
    history.add("w", Tensor::zeros({1}));
    double m = 0.99;
    double worst = 0.0;
    for (int n = 1; n <= 100; ++n) {
        momentum_update(history, online, m);
        double expect = 1.0 - std::pow(m, n);
        worst = std::max(worst, std::abs(history.at("w")[0] - expect));
    }
    if (worst > 1e-12) {
        r.pass = false;
        r.detail = max_err(worst);
    }
    return r;
}

CheckResult check_triplets() {
    CheckResult r{"triplet-constraints", true, 0.0, ""};
    VideoClip video;
    video.frames = Tensor({100, 28, 28, 3});
    Rng fill(29);
    for (std::size_t i = 0; i < video.frames.size(); ++i) video.frames[i] = fill.uniform();
    video.source_id = "constraint-check";
    video.crop_box = {0, 0, 28, 28};

    SamplingConfig cfg;
    cfg.tau = 2;
    cfg.crop_size = 16;
    cfg.min_crop_offset = 4;
    Rng rng(31);
    for (int i = 0; i < 2000; ++i) {
        TemporalTriplet t = sample_triplet(video, cfg, rng);
        std::size_t gap = t.t_a > t.t_n ? t.t_a - t.t_n : t.t_n - t.t_a;
        if (gap <= cfg.tau || t.t_p != t.t_a ||
            t.anchor.crop_box == t.positive.crop_box) {
            r.pass = false;
            r.detail = "triplet violates the time-gap or crop constraints";
            return r;
        }
    }
    return r;
}

CheckResult check_embedding_norms() {
    CheckResult r{"embedding-unit-norm", true, 0.0, ""};
    EncoderSpec spec;
    spec.blocks = {{4, 2, 2}, {6, 2, 2}};
    spec.embed_dim = 16;
    Encoder encoder(spec);
    Rng rng(37);
    Params params = encoder.init_params(rng);
    double worst = 0.0;
    for (int i = 0; i < 20; ++i) {
        VideoClip clip = random_clip(rng, 8, 12, 12);
        Embedding e = encoder.encode_one(params, clip);
        double norm = 0.0;
        for (double v : e) norm += v * v;
        worst = std::max(worst, std::abs(std::sqrt(norm) - 1.0));
    }
    if (worst > 1e-9) {
        r.pass = false;
        r.detail = max_err(worst);
    }
    return r;
}

CheckResult check_lr_schedule() {
    CheckResult r{"lr-schedule", true, 0.0, ""};
    TrainConfig cfg;
    struct Case {
        std::size_t epoch;
        double want;
    } cases[] = {{0, 0.01}, {9, 0.01}, {10, 0.001}, {49, 0.01 * 0.1 * 0.1 * 0.1 * 0.1}};
    for (const auto& c : cases) {
        if (std::abs(lr_at(c.epoch, cfg) - c.want) > 1e-18) {
            r.pass = false;
            r.detail = "schedule mismatch at epoch " + std::to_string(c.epoch);
        }
    }
    return r;
}

} // namespace

std::vector<CheckResult> run_selfcheck() {
    using Clock = std::chrono::steady_clock;
    struct Entry {
        const char* name;
        CheckResult (*fn)();
    } checks[] = {
        {"tca-derivative-scaling", check_derivative_scaling},
        {"tca-cascade-composition", check_cascade_composition},
        {"loss-oracle", check_loss_oracle},
        {"encoder-gradient-check", check_gradients},
        {"memory-bank-fifo", check_fifo_bank},
        {"momentum-contraction", check_momentum},
        {"triplet-constraints", check_triplets},
        {"embedding-unit-norm", check_embedding_norms},
        {"lr-schedule", check_lr_schedule},
    };
    std::vector<CheckResult> results;
    for (const auto& entry : checks) {
        auto t0 = Clock::now();
        CheckResult r;
        try {
            r = entry.fn();
        } catch (const std::exception& e) {
            r.pass = false;
            r.detail = e.what();
        }
        r.name = entry.name;
        r.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
        results.push_back(std::move(r));
    }
    return results;
}

} // namespace vtdl
