#include "vtdl/config.hpp"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include <json.hpp>

namespace vtdl {

namespace {

using json = nlohmann::ordered_json;

[[noreturn]] void parse_failure(const std::string& origin, const std::string& text,
                                const json::parse_error& e) {
    // nlohmann reports a byte offset; turn it into line/column.
    std::size_t byte = e.byte > 0 ? e.byte - 1 : 0;
    byte = std::min(byte, text.size());
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < byte; ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    std::ostringstream msg;
    msg << origin << ": JSON parse error at line " << line << ", column " << col << ": "
        << e.what();
    throw ConfigError(msg.str());
}

void check_keys(const json& obj, const std::string& section,
                std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : obj.items()) {
        bool known = false;
        for (const char* a : allowed)
            if (key == a) {
                known = true;
                break;
            }
        if (!known)
            throw ConfigError("config: unknown key '" + key + "' in section '" + section +
                              "'");
    }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& section) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: key '" + std::string(key) + "' in section '" + section +
                          "' has the wrong type");
    }
}

void parse_sampling(const json& j, SamplingConfig& c) {
    check_keys(j, "sampling", {"clip_len", "temporal_stride", "tau", "crop_size",
                               "min_crop_offset"});
    read(j, "clip_len", c.clip_len, "sampling");
    read(j, "temporal_stride", c.temporal_stride, "sampling");
    read(j, "tau", c.tau, "sampling");
    read(j, "crop_size", c.crop_size, "sampling");
    read(j, "min_crop_offset", c.min_crop_offset, "sampling");
    if (c.clip_len < 2) throw ConfigError("config: sampling.clip_len must be >= 2");
    if (c.temporal_stride < 1)
        throw ConfigError("config: sampling.temporal_stride must be >= 1");
    if (c.crop_size < 1) throw ConfigError("config: sampling.crop_size must be >= 1");
}

void parse_basic_aug(const json& j, BasicAugConfig& c) {
    check_keys(j, "basic_aug", {"resize_lo", "resize_hi", "crop_size", "brightness_jitter",
                                "contrast_jitter", "max_rotation_deg"});
    read(j, "resize_lo", c.resize_lo, "basic_aug");
    read(j, "resize_hi", c.resize_hi, "basic_aug");
    read(j, "crop_size", c.crop_size, "basic_aug");
    read(j, "brightness_jitter", c.brightness_jitter, "basic_aug");
    read(j, "contrast_jitter", c.contrast_jitter, "basic_aug");
    read(j, "max_rotation_deg", c.max_rotation_deg, "basic_aug");
    if (c.resize_lo <= 0.0 || c.resize_hi < c.resize_lo)
        throw ConfigError("config: basic_aug resize range must satisfy 0 < lo <= hi");
    if (c.brightness_jitter < 0.0 || c.brightness_jitter >= 1.0 || c.contrast_jitter < 0.0 ||
        c.contrast_jitter >= 1.0)
        throw ConfigError("config: basic_aug jitters must lie in [0,1)");
    if (c.max_rotation_deg < 0.0)
        throw ConfigError("config: basic_aug.max_rotation_deg must be >= 0");
}

void parse_tca(const json& j, TCAConfig& c) {
    check_keys(j, "tca", {"alpha_lo", "alpha_hi", "cutout_frac_lo", "cutout_frac_hi",
                          "enable_cutout", "enable_internal_mix", "enable_external_mix",
                          "tca_on_negative"});
    read(j, "alpha_lo", c.alpha_lo, "tca");
    read(j, "alpha_hi", c.alpha_hi, "tca");
    read(j, "cutout_frac_lo", c.cutout_frac_lo, "tca");
    read(j, "cutout_frac_hi", c.cutout_frac_hi, "tca");
    read(j, "enable_cutout", c.enable_cutout, "tca");
    read(j, "enable_internal_mix", c.enable_internal_mix, "tca");
    read(j, "enable_external_mix", c.enable_external_mix, "tca");
    read(j, "tca_on_negative", c.tca_on_negative, "tca");
    if (c.alpha_lo < 0.0 || c.alpha_hi > 1.0 || c.alpha_hi < c.alpha_lo)
        throw ConfigError("config: tca alpha range must satisfy 0 <= lo <= hi <= 1");
    if (c.cutout_frac_lo < 0.0 || c.cutout_frac_hi > 1.0 ||
        c.cutout_frac_hi < c.cutout_frac_lo)
        throw ConfigError("config: tca cutout fractions must satisfy 0 <= lo <= hi <= 1");
}

void parse_model(const json& j, EncoderSpec& c) {
    check_keys(j, "model", {"blocks", "in_channels", "embed_dim"});
    if (j.contains("blocks")) {
        try {
            c.blocks.clear();
            for (const auto& b : j.at("blocks"))
                c.blocks.push_back({b.at(0).get<std::size_t>(), b.at(1).get<std::size_t>(),
                                    b.at(2).get<std::size_t>()});
        } catch (const json::exception&) {
            throw ConfigError(
                "config: model.blocks must be a list of [out_channels, spatial_stride, "
                "temporal_stride] triples");
        }
    }
    read(j, "in_channels", c.in_channels, "model");
    read(j, "embed_dim", c.embed_dim, "model");
    if (c.blocks.empty()) throw ConfigError("config: model.blocks must be non-empty");
    if (c.embed_dim < 1) throw ConfigError("config: model.embed_dim must be >= 1");
    if (c.in_channels != 1 && c.in_channels != 3)
        throw ConfigError("config: model.in_channels must be 1 or 3");
}

void parse_objective(const json& j, TrainConfig& c) {
    check_keys(j, "objective", {"temperature", "bank_capacity", "reduction"});
    read(j, "temperature", c.similarity.temperature, "objective");
    read(j, "bank_capacity", c.bank_capacity, "objective");
    if (j.contains("reduction")) {
        std::string r;
        read(j, "reduction", r, "objective");
        if (r == "mean")
            c.reduction = BatchReduction::Mean;
        else if (r == "sum")
            c.reduction = BatchReduction::Sum;
        else
            throw ConfigError("config: objective.reduction must be \"mean\" or \"sum\"");
    }
    if (c.similarity.temperature <= 0.0)
        throw ConfigError("config: objective.temperature must be positive");
}

void parse_train(const json& j, TrainConfig& c) {
    check_keys(j, "train", {"lr0", "sgd_momentum", "weight_decay", "epochs", "lr_decay_every",
                            "lr_decay_factor", "batch_size", "m", "seed"});
    read(j, "lr0", c.lr0, "train");
    read(j, "sgd_momentum", c.sgd_momentum, "train");
    read(j, "weight_decay", c.weight_decay, "train");
    read(j, "epochs", c.epochs, "train");
    read(j, "lr_decay_every", c.lr_decay_every, "train");
    read(j, "lr_decay_factor", c.lr_decay_factor, "train");
    read(j, "batch_size", c.batch_size, "train");
    read(j, "m", c.m, "train");
    read(j, "seed", c.seed, "train");
}

void parse_synth(const json& j, SynthConfig& c) {
    check_keys(j, "synth", {"n_classes", "n_train", "n_test", "frame_size", "clip_len_source",
                            "square_size", "speeds", "seed"});
    read(j, "n_classes", c.n_classes, "synth");
    read(j, "n_train", c.n_train, "synth");
    read(j, "n_test", c.n_test, "synth");
    read(j, "frame_size", c.frame_size, "synth");
    read(j, "clip_len_source", c.clip_len_source, "synth");
    read(j, "square_size", c.square_size, "synth");
    read(j, "speeds", c.speeds, "synth");
    read(j, "seed", c.seed, "synth");
}

void parse_probe(const json& j, ProbeConfig& c) {
    check_keys(j, "probe", {"lr", "epochs", "momentum", "clip_len", "temporal_stride"});
    read(j, "lr", c.lr, "probe");
    read(j, "epochs", c.epochs, "probe");
    read(j, "momentum", c.momentum, "probe");
    read(j, "clip_len", c.clip_len, "probe");
    read(j, "temporal_stride", c.temporal_stride, "probe");
    if (c.lr <= 0.0) throw ConfigError("config: probe.lr must be positive");
    if (c.epochs < 1) throw ConfigError("config: probe.epochs must be >= 1");
}

} // namespace

FullConfig parse_config_text(const std::string& text, const std::string& origin) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::parse_error& e) {
        parse_failure(origin, text, e);
    }
    if (!doc.is_object()) throw ConfigError(origin + ": top level must be a JSON object");
    check_keys(doc, "(top level)", {"sampling", "basic_aug", "tca", "model", "objective",
                                    "train", "synth", "probe"});

    FullConfig cfg;
    if (doc.contains("sampling")) parse_sampling(doc["sampling"], cfg.train.sampling);
    if (doc.contains("basic_aug")) parse_basic_aug(doc["basic_aug"], cfg.train.basic_aug);
    if (doc.contains("tca")) parse_tca(doc["tca"], cfg.train.tca);
    if (doc.contains("model")) parse_model(doc["model"], cfg.train.model);
    if (doc.contains("objective")) parse_objective(doc["objective"], cfg.train);
    if (doc.contains("train")) parse_train(doc["train"], cfg.train);
    if (doc.contains("synth")) parse_synth(doc["synth"], cfg.synth);
    if (doc.contains("probe")) parse_probe(doc["probe"], cfg.probe);
    cfg.echo = doc.dump();
    return cfg;
}

FullConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("config: cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str(), path.string());
}

FullConfig default_config() {
    FullConfig cfg;
    cfg.echo = "{}";
    return cfg;
}

} // namespace vtdl
