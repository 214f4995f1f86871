#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "vtdl/config.hpp"
#include "vtdl/evaluation.hpp"
#include "vtdl/faults.hpp"
#include "vtdl/png_io.hpp"
#include "vtdl/selfcheck.hpp"
#include "vtdl/training.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace vtdl;

namespace {

// 0 ok, 1 property failure, 2 config, 3 I/O, 4 data, 5 checkpoint
constexpr int kOk = 0, kProperty = 1, kConfig = 2, kIo = 3, kData = 4, kCheckpoint = 5;

int classify(const std::exception& e) {
    if (dynamic_cast<const CheckpointCorrupt*>(&e)) return kCheckpoint;
    if (dynamic_cast<const ConfigError*>(&e)) return kConfig;
    if (dynamic_cast<const ConfigInfeasible*>(&e)) return kConfig;
    if (dynamic_cast<const NonFiniteGradient*>(&e)) return kProperty;
    if (dynamic_cast<const ZeroNorm*>(&e)) return kProperty;
    if (dynamic_cast<const VideoTooShort*>(&e) || dynamic_cast<const FrameTooSmall*>(&e) ||
        dynamic_cast<const CropOutOfBounds*>(&e) || dynamic_cast<const MissingFrames*>(&e) ||
        dynamic_cast<const InconsistentDimensions*>(&e) ||
        dynamic_cast<const OrderTooLarge*>(&e) || dynamic_cast<const MissingDonor*>(&e) ||
        dynamic_cast<const EmptyBatch*>(&e) || dynamic_cast<const ShapeIncompatible*>(&e))
        return kData;
    if (dynamic_cast<const PngError*>(&e)) return kIo;
    if (dynamic_cast<const Error*>(&e)) return kIo;
    if (dynamic_cast<const fs::filesystem_error*>(&e)) return kIo;
    return kProperty;
}

FullConfig load_config(const std::string& path, const std::optional<std::uint64_t>& seed_flag) {
    FullConfig cfg = path.empty() ? default_config() : parse_config_file(path);
    if (const char* env = std::getenv("VTDL_SEED")) {
        char* end = nullptr;
        unsigned long long v = std::strtoull(env, &end, 10);
        if (!end || *end != '\0' || std::string(env).empty())
            throw ConfigError("VTDL_SEED must be a non-negative integer, got '" +
                              std::string(env) + "'");
        cfg.train.seed = v;
        cfg.synth.seed = v;
    }
    if (seed_flag) {
        cfg.train.seed = *seed_flag;
        cfg.synth.seed = *seed_flag;
    }
    return cfg;
}

void write_clip_frames(const VideoClip& clip, const fs::path& dir) {
    fs::create_directories(dir);
    ImageU8 img;
    img.height = clip.height();
    img.width = clip.width();
    img.channels = clip.channels();
    std::size_t fsz = img.height * img.width * img.channels;
    img.pixels.resize(fsz);
    for (std::size_t t = 0; t < clip.length(); ++t) {
        const double* f = clip.frames.data() + t * fsz;
        for (std::size_t i = 0; i < fsz; ++i)
            img.pixels[i] = std::uint8_t(std::lround(f[i] * 255.0));
        char name[32];
        std::snprintf(name, sizeof name, "frame_%03zu.png", t);
        write_png(img, (dir / name).string());
    }
}

json crop_to_json(const CropBox& box) {
    return json{box.top, box.left, box.height, box.width};
}

json entry_to_json(const AugEntry& e) {
    json j;
    j["kind"] = aug_kind_name(e.kind);
    switch (e.kind) {
    case AugEntry::Kind::Basic:
        j["scale"] = e.scale;
        j["angle_deg"] = e.angle_deg;
        j["brightness"] = e.brightness;
        j["contrast"] = e.contrast;
        j["crop"] = crop_to_json(e.region);
        break;
    case AugEntry::Kind::InternalMix:
        j["alpha"] = e.alpha;
        j["frame_index"] = e.frame_index;
        break;
    case AugEntry::Kind::ExternalMix:
        j["alpha"] = e.alpha;
        j["frame_index"] = e.frame_index;
        j["donor_id"] = e.donor_id;
        j["donor_crop"] = crop_to_json(e.region);
        break;
    case AugEntry::Kind::Cutout:
        j["region"] = crop_to_json(e.region);
        break;
    }
    return j;
}

json record_to_json(const ClipAugRecord& record) {
    json arr = json::array();
    for (const auto& e : record) arr.push_back(entry_to_json(e));
    return arr;
}

json probe_result_to_json(const ProbeResult& res) {
    json j;
    j["top1"] = res.top1;
    j["per_class"] = res.per_class;
    j["confusion"] = res.confusion;
    return j;
}

int cmd_synth(const std::string& config_path, const std::string& out,
              const std::optional<std::uint64_t>& seed) {
    FullConfig cfg = load_config(config_path, seed);
    LabeledDataset ds = generate_synthetic(cfg.synth);
    write_synth_dataset(ds, out);
    std::printf("wrote %zu train and %zu test videos to %s\n", ds.train.size(),
                ds.test.size(), out.c_str());
    return kOk;
}

int cmd_pretrain(const std::string& config_path, const std::string& data,
                 const std::string& out, const std::string& resume,
                 const std::optional<std::uint64_t>& seed) {
    FullConfig cfg = load_config(config_path, seed);
    std::vector<VideoClip> videos = load_video_dirs(data);
    std::optional<fs::path> resume_path;
    if (!resume.empty()) resume_path = fs::path(resume);
    fs::path ckpt = run_pretrain(videos, cfg.train, out, resume_path, cfg.echo);
    std::printf("checkpoint: %s\n", ckpt.string().c_str());
    return kOk;
}

int cmd_probe(const std::string& checkpoint, const std::string& data, bool control,
              bool one_hot, const std::string& config_path) {
    FullConfig cfg = load_config(config_path, std::nullopt);
    Checkpoint ckpt = load_checkpoint(checkpoint);
    Encoder encoder(ckpt.spec);
    LabeledDataset ds = load_labeled_dataset(data);

    ProbeResult res;
    if (one_hot) {
        std::vector<std::size_t> train_y, test_y;
        for (const auto& lv : ds.train) train_y.push_back(lv.label);
        for (const auto& lv : ds.test) test_y.push_back(lv.label);
        std::size_t n = ds.class_names.size();
        res = probe_on_features(one_hot_features(train_y, n), train_y,
                                one_hot_features(test_y, n), test_y, n, cfg.probe);
    } else if (control) {
        res = appearance_control(encoder, ckpt.state.pair.online, ds, cfg.probe);
    } else {
        res = linear_probe(encoder, ckpt.state.pair.online, ds, cfg.probe);
    }
    std::printf("%s\n", probe_result_to_json(res).dump(2).c_str());
    return kOk;
}

int cmd_preview_triplet(const std::string& config_path, const std::string& data,
                        const std::string& video_id, const std::string& out,
                        const std::optional<std::uint64_t>& seed) {
    FullConfig cfg = load_config(config_path, seed);
    std::vector<VideoClip> videos = load_video_dirs(data);

    std::size_t index = videos.size();
    for (std::size_t i = 0; i < videos.size(); ++i)
        if (videos[i].source_id == video_id) index = i;
    if (index == videos.size())
        throw MissingFrames("preview-triplet: no video named '" + video_id + "' under " +
                            data);
    const VideoClip& donor = videos[(index + 1) % videos.size()];

    Rng rng(mix_seed(cfg.train.seed, 0x7269706c65747ull)); // stream tag for previews
    TemporalTriplet triplet = sample_triplet(videos[index], cfg.train.sampling, rng);
    triplet = augment_triplet(std::move(triplet), donor, cfg.train.basic_aug, cfg.train.tca,
                              rng);

    fs::create_directories(out);
    write_clip_frames(triplet.anchor, fs::path(out) / "anchor");
    write_clip_frames(triplet.positive, fs::path(out) / "positive");
    write_clip_frames(triplet.negative, fs::path(out) / "negative");

    json rec;
    rec["video"] = video_id;
    rec["t_a"] = triplet.t_a;
    rec["t_p"] = triplet.t_p;
    rec["t_n"] = triplet.t_n;
    rec["anchor_crop"] = crop_to_json(triplet.anchor.crop_box);
    rec["positive_crop"] = crop_to_json(triplet.positive.crop_box);
    rec["negative_crop"] = crop_to_json(triplet.negative.crop_box);
    rec["augmentation_record"] = {{"anchor", record_to_json(triplet.augmentation_record.anchor)},
                                  {"positive", record_to_json(triplet.augmentation_record.positive)},
                                  {"negative", record_to_json(triplet.augmentation_record.negative)}};
    std::ofstream rf(fs::path(out) / "record.json");
    if (!rf) throw Error("preview-triplet: cannot write record.json");
    rf << rec.dump(2) << "\n";
    std::printf("triplet written to %s\n", out.c_str());
    return kOk;
}

int cmd_selfcheck(const std::string& fault) {
    if (!fault.empty()) {
        faults::Fault f;
        if (!faults::parse(fault, &f))
            throw ConfigError("selfcheck: unknown fault '" + fault +
                              "' (expected cutout-before-mix, per-frame-alpha or "
                              "bank-no-advance)");
        faults::set(f);
        std::printf("fault injected: %s\n", faults::name(f));
    }
    auto results = run_selfcheck();
    bool all = true;
    std::printf("%-28s %-6s %8s\n", "property", "result", "time");
    for (const auto& r : results) {
        std::printf("%-28s %-6s %7.2fs%s%s\n", r.name.c_str(), r.pass ? "PASS" : "FAIL",
                    r.seconds, r.detail.empty() ? "" : "  ", r.detail.c_str());
        all = all && r.pass;
    }
    std::printf("%s\n", all ? "all properties hold" : "PROPERTY FAILURE");
    return all ? kOk : kProperty;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"temporal-discriminative video representation learning"};
    app.require_subcommand(1);

    std::string config_path, data_dir, out_path, resume_path, checkpoint_path, video_id,
        fault_name;
    bool control = false, one_hot = false;
    std::optional<std::uint64_t> seed;

    auto add_seed = [&](CLI::App* cmd) {
        cmd->add_option("--seed", seed,
                        "override the config seed (takes precedence over VTDL_SEED)");
    };

    CLI::App* synth = app.add_subcommand("synth", "generate the synthetic motion dataset");
    synth->add_option("--config", config_path, "JSON config file");
    synth->add_option("--out", out_path, "output dataset directory")->required();
    add_seed(synth);

    CLI::App* pretrain = app.add_subcommand("pretrain", "run self-supervised pretraining");
    pretrain->add_option("--config", config_path, "JSON config file");
    pretrain->add_option("--data", data_dir, "dataset directory of frame dirs")->required();
    pretrain->add_option("--out", out_path, "checkpoint directory to write")->required();
    pretrain->add_option("--resume", resume_path, "checkpoint directory to resume from");
    add_seed(pretrain);

    CLI::App* probe = app.add_subcommand("probe", "linear-probe a checkpoint");
    probe->add_option("--checkpoint", checkpoint_path, "checkpoint directory")->required();
    probe->add_option("--data", data_dir, "labeled dataset directory")->required();
    probe->add_option("--config", config_path, "JSON config file");
    probe->add_flag("--control", control, "probe motion-destroyed (static) clips instead");
    probe->add_flag("--one-hot", one_hot, "test hook: replace features with one-hot labels");

    CLI::App* preview = app.add_subcommand("preview-triplet",
                                           "sample one augmented triplet and dump PNGs");
    preview->add_option("--config", config_path, "JSON config file");
    preview->add_option("--data", data_dir, "dataset directory")->required();
    preview->add_option("--video", video_id, "source video id")->required();
    preview->add_option("--out", out_path, "output directory")->required();
    add_seed(preview);

    CLI::App* selfcheck = app.add_subcommand("selfcheck", "run the invariance suite");
    selfcheck->add_option("--inject-fault", fault_name,
                          "enable a documented defect to prove the suite catches it");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? kOk : kConfig;
    }

    try {
        if (synth->parsed()) return cmd_synth(config_path, out_path, seed);
        if (pretrain->parsed())
            return cmd_pretrain(config_path, data_dir, out_path, resume_path, seed);
        if (probe->parsed())
            return cmd_probe(checkpoint_path, data_dir, control, one_hot, config_path);
        if (preview->parsed())
            return cmd_preview_triplet(config_path, data_dir, video_id, out_path, seed);
        if (selfcheck->parsed()) return cmd_selfcheck(fault_name);
    } catch (const std::exception& e) {
        std::fprintf(stderr, "vtdl: %s\n", e.what());
        return classify(e);
    }
    return kConfig;
}
