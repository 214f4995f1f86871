#include "vtdl/training.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace vtdl {

namespace {

// Disjoint RNG streams derived from the run seed.
constexpr std::uint64_t kParamStream = 1;
constexpr std::uint64_t kBankStream = 2;
constexpr std::uint64_t kShuffleStream = 3;
constexpr std::uint64_t kStepStream = 4;

double quantize_f32(double v) { return double(float(v)); }

void quantize_params(Params& p) {
    for (auto& [name, t] : p)
        for (std::size_t i = 0; i < t.size(); ++i) t[i] = quantize_f32(t[i]);
}

void validate(const TrainConfig& cfg, std::size_t dataset_size) {
    if (cfg.epochs < 1) throw ConfigError("train.epochs must be >= 1");
    if (cfg.batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
    if (cfg.lr0 <= 0.0) throw ConfigError("train.lr0 must be positive");
    if (cfg.sgd_momentum < 0.0 || cfg.sgd_momentum >= 1.0)
        throw ConfigError("train.sgd_momentum must lie in [0,1)");
    if (cfg.weight_decay < 0.0) throw ConfigError("train.weight_decay must be >= 0");
    if (cfg.lr_decay_every < 1) throw ConfigError("train.lr_decay_every must be >= 1");
    if (cfg.lr_decay_factor <= 0.0) throw ConfigError("train.lr_decay_factor must be positive");
    if (cfg.m < 0.0 || cfg.m > 1.0) throw ConfigError("train.m must lie in [0,1]");
    if (cfg.similarity.temperature <= 0.0)
        throw ConfigError("objective.temperature must be positive");
    if (dataset_size == 0) throw ConfigError("pretrain: dataset is empty");
    if (cfg.tca.enable_external_mix && dataset_size < 2)
        throw ConfigError("pretrain: external mix needs at least 2 videos");
    if (cfg.bank_capacity > 0 && cfg.batch_size > cfg.bank_capacity)
        throw ConfigError("train.batch_size cannot exceed train.bank_capacity");
}

json spec_to_json(const EncoderSpec& spec) {
    json blocks = json::array();
    for (const auto& b : spec.blocks)
        blocks.push_back({b.out_channels, b.spatial_stride, b.temporal_stride});
    return json{{"blocks", blocks},
                {"in_channels", spec.in_channels},
                {"embed_dim", spec.embed_dim}};
}

EncoderSpec spec_from_json(const json& j) {
    EncoderSpec spec;
    spec.blocks.clear();
    for (const auto& b : j.at("blocks"))
        spec.blocks.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>(),
                               b.at(2).get<std::size_t>()});
    spec.in_channels = j.at("in_channels").get<std::size_t>();
    spec.embed_dim = j.at("embed_dim").get<std::size_t>();
    return spec;
}

void write_params(const Params& p, const std::string& prefix, const fs::path& dir,
                  json& index) {
    for (const auto& [name, t] : p) {
        std::string file = prefix + "." + name + ".vt";
        save_tensor(t, dir / file);
        index[prefix + "." + name] = file;
    }
}

void read_params(Params& p, const std::string& prefix, const fs::path& dir,
                 const json& index) {
    for (auto& [name, t] : p) {
        std::string key = prefix + "." + name;
        if (!index.contains(key))
            throw CheckpointCorrupt("checkpoint: manifest missing tensor " + key);
        Tensor loaded;
        try {
            loaded = load_tensor(dir / index.at(key).get<std::string>());
        } catch (const Error& e) {
            throw CheckpointCorrupt(std::string("checkpoint: ") + e.what());
        }
        if (!loaded.same_shape(t))
            throw CheckpointCorrupt("checkpoint: tensor " + key + " has unexpected shape");
        t = std::move(loaded);
    }
}

} // namespace

double lr_at(std::size_t epoch, const TrainConfig& cfg) {
    std::size_t drops = epoch / cfg.lr_decay_every;
    double lr = cfg.lr0;
    for (std::size_t i = 0; i < drops; ++i) lr *= cfg.lr_decay_factor;
    return lr;
}

void sgd_update(Params& params, const Params& grads, Params& velocity, double lr,
                double momentum, double wd) {
    if (!params.same_layout(grads) || !params.same_layout(velocity))
        throw ShapeMismatch("sgd_update: params, grads and velocity layouts differ");
    for (std::size_t i = 0; i < params.size(); ++i) {
        const Tensor& g = grads.item(i).second;
        for (std::size_t j = 0; j < g.size(); ++j)
            if (!std::isfinite(g[j]))
                throw NonFiniteGradient("sgd_update: non-finite gradient in " +
                                        grads.item(i).first);
    }
    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = params.item(i).second;
        const Tensor& g = grads.item(i).second;
        Tensor& v = velocity.item(i).second;
        for (std::size_t j = 0; j < p.size(); ++j) {
            double adjusted = g[j] + wd * p[j];
            v[j] = momentum * v[j] + adjusted;
            p[j] -= lr * v[j];
        }
    }
}

TrainState init_train_state(const TrainConfig& cfg, const Encoder& encoder) {
    TrainState state;
    Rng param_rng(mix_seed(cfg.seed, kParamStream));
    state.pair.online = encoder.init_params(param_rng);
    state.pair.history = state.pair.online;
    state.pair.m = cfg.m;
    state.velocity = state.pair.online.zeros_like();
    Rng bank_rng(mix_seed(cfg.seed, kBankStream));
    state.bank = bank_init(cfg.bank_capacity, bank_rng, encoder.spec().embed_dim);
    state.shuffle_rng = Rng(mix_seed(cfg.seed, kShuffleStream));
    return state;
}

StepMetrics train_step(const std::vector<const VideoClip*>& videos,
                       const std::vector<const VideoClip*>& donors, TrainState& state,
                       const TrainConfig& cfg, const Encoder& encoder) {
    std::size_t n = videos.size();
    if (n == 0) throw EmptyBatch("train_step: empty batch");
    if (donors.size() != n) throw ShapeMismatch("train_step: donors must pair with videos");

    // (1) one sampled and augmented triplet per video, each on its own
    // derived RNG stream so batch composition never shifts another sample's
    // randomness
    std::vector<TemporalTriplet> triplets;
    triplets.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(mix_seed(cfg.seed, kStepStream, state.step, i));
        TemporalTriplet t = sample_triplet(*videos[i], cfg.sampling, rng);
        triplets.push_back(
            augment_triplet(std::move(t), *donors[i], cfg.basic_aug, cfg.tca, rng));
    }

    // (2) positives and negatives through the online network as one batch;
    // its pooled normalization statistics are the step's statistics
    std::vector<const VideoClip*> online_clips(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        online_clips[i] = &triplets[i].positive;
        online_clips[n + i] = &triplets[i].negative;
    }
    std::vector<ForwardCache> caches;
    NormStats stats;
    std::vector<Embedding> online_emb =
        encoder.encode_batch(state.pair.online, online_clips, nullptr, &stats, &caches);

    // (3) anchors through the history network, detached, reusing the online
    // network's statistics so the two forwards see the same feature scale
    std::vector<const VideoClip*> anchor_clips(n);
    for (std::size_t i = 0; i < n; ++i) anchor_clips[i] = &triplets[i].anchor;
    std::vector<Embedding> anchors =
        encoder.encode_batch(state.pair.history, anchor_clips, &stats);

    std::vector<TripletEmbedding> batch(n);
    for (std::size_t i = 0; i < n; ++i) {
        batch[i].v_a = anchors[i];
        batch[i].v_p = online_emb[i];
        batch[i].v_n = online_emb[n + i];
    }

    // (4) loss over the batch against the current bank snapshot
    TdLossResult res = td_loss(batch, state.bank, cfg.similarity, cfg.reduction);
    if (!std::isfinite(res.loss)) throw NonFiniteGradient("train_step: non-finite loss");

    // (5) one joint backward (the shared statistics couple the whole batch),
    // then the online update
    Params grads = state.pair.online.zeros_like();
    std::vector<const ForwardCache*> cache_ptrs(2 * n);
    for (std::size_t i = 0; i < 2 * n; ++i) cache_ptrs[i] = &caches[i];
    std::vector<std::vector<double>> d_emb(2 * n);
    for (std::size_t i = 0; i < n; ++i) {
        d_emb[i] = std::move(res.grad_p[i]);
        d_emb[n + i] = std::move(res.grad_n[i]);
    }
    encoder.backward_batch(state.pair.online, cache_ptrs, d_emb, grads);
    double lr = lr_at(state.epoch, cfg);
    sgd_update(state.pair.online, grads, state.velocity, lr, cfg.sgd_momentum,
               cfg.weight_decay);

    // (6) this batch's anchors enter the bank only after the update; a
    // capacity-0 bank disables inter-video negatives entirely
    if (state.bank.capacity() > 0) bank_push(state.bank, anchors);

    // (7) history network drifts toward the fresh online weights
    momentum_update(state.pair);

    StepMetrics m;
    m.step = state.step;
    m.epoch = state.epoch;
    m.loss = res.loss;
    m.lr = lr;
    m.mean_pos_sim = res.mean_pos_sim;
    m.mean_neg_sim = res.mean_neg_sim;
    ++state.step;
    return m;
}

void quantize_state(TrainState& state) {
    quantize_params(state.pair.online);
    quantize_params(state.pair.history);
    quantize_params(state.velocity);
    for (std::size_t i = 0; i < state.bank.capacity(); ++i) {
        double* s = state.bank.slot(i);
        for (std::size_t j = 0; j < state.bank.dim(); ++j) s[j] = quantize_f32(s[j]);
    }
}

void save_checkpoint(const TrainState& state, const EncoderSpec& spec, std::uint64_t seed,
                     const std::string& config_echo, const fs::path& dir) {
    fs::path tmp = dir;
    tmp += ".tmp";
    std::error_code ec;
    fs::remove_all(tmp, ec);
    fs::create_directories(tmp);

    json index = json::object();
    write_params(state.pair.online, "online", tmp, index);
    write_params(state.pair.history, "history", tmp, index);
    write_params(state.velocity, "velocity", tmp, index);

    json manifest;
    manifest["format"] = "vtdl-checkpoint";
    manifest["version"] = 1;
    manifest["epoch"] = state.epoch;
    manifest["step"] = state.step;
    manifest["seed"] = seed;
    manifest["m"] = state.pair.m;
    manifest["rng_state"] = state.shuffle_rng.save_state();
    json bank;
    bank["capacity"] = state.bank.capacity();
    bank["dim"] = state.bank.dim();
    bank["cursor"] = state.bank.cursor();
    if (state.bank.capacity() > 0) {
        save_tensor(state.bank.to_tensor(), tmp / "bank.slots.vt");
        bank["file"] = "bank.slots.vt";
    }
    manifest["bank"] = bank;
    manifest["model"] = spec_to_json(spec);
    manifest["tensors"] = index;
    manifest["config"] = json::parse(config_echo.empty() ? "{}" : config_echo);

    std::ofstream out(tmp / "manifest.json");
    if (!out) throw Error("save_checkpoint: cannot write manifest");
    out << manifest.dump(2) << "\n";
    out.close();

    fs::remove_all(dir, ec);
    fs::rename(tmp, dir);
}

Checkpoint load_checkpoint(const fs::path& dir) {
    std::ifstream in(dir / "manifest.json");
    if (!in) throw CheckpointCorrupt("checkpoint: missing manifest.json in " + dir.string());
    json manifest;
    try {
        in >> manifest;
    } catch (const json::exception& e) {
        throw CheckpointCorrupt(std::string("checkpoint: manifest parse failure: ") + e.what());
    }

    Checkpoint ckpt;
    try {
        if (manifest.at("format").get<std::string>() != "vtdl-checkpoint")
            throw CheckpointCorrupt("checkpoint: unrecognized format field");
        if (manifest.at("version").get<int>() != 1)
            throw CheckpointCorrupt("checkpoint: unsupported version");
        ckpt.spec = spec_from_json(manifest.at("model"));
        Encoder encoder(ckpt.spec);
        ckpt.state.pair.online = encoder.zero_params();
        ckpt.state.pair.history = encoder.zero_params();
        ckpt.state.velocity = encoder.zero_params();
        ckpt.state.pair.m = manifest.at("m").get<double>();
        const json& index = manifest.at("tensors");
        read_params(ckpt.state.pair.online, "online", dir, index);
        read_params(ckpt.state.pair.history, "history", dir, index);
        read_params(ckpt.state.velocity, "velocity", dir, index);
        const json& bank = manifest.at("bank");
        std::size_t capacity = bank.at("capacity").get<std::size_t>();
        std::size_t dim = bank.at("dim").get<std::size_t>();
        if (capacity > 0) {
            Tensor slots;
            try {
                slots = load_tensor(dir / bank.at("file").get<std::string>());
            } catch (const Error& e) {
                throw CheckpointCorrupt(std::string("checkpoint: ") + e.what());
            }
            if (slots.dim(0) != capacity || slots.dim(1) != dim)
                throw CheckpointCorrupt("checkpoint: bank tensor shape mismatch");
            ckpt.state.bank =
                MemoryBank::from_tensor(slots, bank.at("cursor").get<std::size_t>());
        } else {
            ckpt.state.bank = MemoryBank(0, dim);
        }
        ckpt.state.epoch = manifest.at("epoch").get<std::size_t>();
        ckpt.state.step = manifest.at("step").get<std::size_t>();
        ckpt.state.shuffle_rng.restore_state(manifest.at("rng_state").get<std::string>());
        ckpt.seed = manifest.at("seed").get<std::uint64_t>();
        ckpt.config_echo = manifest.at("config").dump();
    } catch (const json::exception& e) {
        throw CheckpointCorrupt(std::string("checkpoint: manifest field error: ") + e.what());
    }

    for (const auto& params : {&ckpt.state.pair.online, &ckpt.state.pair.history}) {
        for (const auto& [name, t] : *params)
            if (!t.all_finite())
                throw CheckpointCorrupt("checkpoint: non-finite values in " + name);
    }
    return ckpt;
}

std::filesystem::path run_pretrain(const std::vector<VideoClip>& dataset,
                                   const TrainConfig& cfg, const fs::path& out_dir,
                                   const std::optional<fs::path>& resume,
                                   const std::string& config_echo) {
    validate(cfg, dataset.size());
    Encoder encoder(cfg.model);

    TrainState state;
    if (resume) {
        Checkpoint ckpt = load_checkpoint(*resume);
        Encoder expect(cfg.model);
        if (!ckpt.state.pair.online.same_layout(expect.zero_params()))
            throw CheckpointCorrupt("resume: checkpoint model does not match config");
        state = std::move(ckpt.state);
        state.pair.m = cfg.m; // the config, not the manifest echo, is authoritative
    } else {
        state = init_train_state(cfg, encoder);
    }

    fs::create_directories(out_dir.parent_path().empty() ? "." : out_dir.parent_path());
    fs::path metrics_path = out_dir;
    metrics_path += ".metrics.ndjson";

    // On resume, drop any metrics lines from steps the rerun will repeat.
    std::vector<std::string> kept;
    if (resume && fs::exists(metrics_path)) {
        std::ifstream min(metrics_path);
        std::string line;
        while (std::getline(min, line)) {
            if (line.empty()) continue;
            auto rec = json::parse(line, nullptr, false);
            if (!rec.is_discarded() && rec.contains("step") &&
                rec["step"].get<std::size_t>() < state.step)
                kept.push_back(line);
        }
    }
    std::ofstream metrics(metrics_path, std::ios::trunc);
    if (!metrics) throw Error("run_pretrain: cannot open metrics log " + metrics_path.string());
    for (const auto& line : kept) metrics << line << "\n";

    std::vector<std::size_t> order(dataset.size());

    for (std::size_t epoch = state.epoch; epoch < cfg.epochs; ++epoch) {
        state.epoch = epoch;
        // Fisher-Yates from identity on the live shuffle stream; the stream
        // state rides along in the checkpoint, and starting from identity
        // every epoch keeps resumed and uninterrupted orders equal.
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        for (std::size_t i = order.size(); i > 1; --i) {
            std::size_t j = state.shuffle_rng.below(i);
            std::swap(order[i - 1], order[j]);
        }

        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t len = std::min(cfg.batch_size, order.size() - start);
            std::vector<const VideoClip*> videos(len), donors(len);
            for (std::size_t i = 0; i < len; ++i) {
                videos[i] = &dataset[order[start + i]];
                if (len > 1) {
                    donors[i] = &dataset[order[start + (i + 1) % len]];
                } else {
                    // single-clip tail batch: borrow a donor from elsewhere
                    donors[i] = &dataset[order[(start + 1) % order.size()]];
                }
            }
            StepMetrics m = train_step(videos, donors, state, cfg, encoder);
            json rec;
            rec["step"] = m.step;
            rec["epoch"] = m.epoch;
            rec["loss"] = m.loss;
            rec["lr"] = m.lr;
            rec["mean_pos_sim"] = m.mean_pos_sim;
            rec["mean_neg_sim"] = m.mean_neg_sim;
            metrics << rec.dump() << "\n";
        }
        metrics.flush();

        state.epoch = epoch + 1;
        save_checkpoint(state, cfg.model, cfg.seed, config_echo, out_dir);
        // Continue from exactly what a reload would see, so interrupted and
        // uninterrupted runs stay bit-identical.
        quantize_state(state);
    }

    if (state.epoch >= cfg.epochs && !fs::exists(out_dir / "manifest.json"))
        save_checkpoint(state, cfg.model, cfg.seed, config_echo, out_dir);
    return out_dir;
}

} // namespace vtdl
