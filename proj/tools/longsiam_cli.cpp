// Command-line entry point: synth / preprocess / train / eval / embed.
// JSON config files with flag overrides; the resolved configuration is
// echoed into each command's output directory.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "longsiam/cohort.hpp"
#include "longsiam/io_util.hpp"
#include "longsiam/model.hpp"
#include "longsiam/preprocess.hpp"
#include "longsiam/synth.hpp"
#include "longsiam/threading.hpp"
#include "longsiam/train.hpp"
#include "longsiam/tsne.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace longsiam;

namespace {

Shape parse_shape3(const std::string& text) {
    const std::vector<std::string> parts = split_csv_line(text);
    if (parts.size() != 3) throw std::invalid_argument("shape must be three comma-separated extents");
    return Shape{std::stoll(parts[0]), std::stoll(parts[1]), std::stoll(parts[2])};
}

Range parse_range(const std::string& text) {
    const std::vector<std::string> parts = split_csv_line(text);
    if (parts.size() != 2) throw std::invalid_argument("range must be LO,HI");
    return Range{std::stod(parts[0]), std::stod(parts[1])};
}

json shape_json(const Shape& s) {
    json a = json::array();
    for (int64_t d : s.dims()) a.push_back(d);
    return a;
}

Shape shape_from_json(const json& a) {
    std::vector<int64_t> dims;
    for (const auto& v : a) dims.push_back(v.get<int64_t>());
    return Shape(dims);
}

// --- CohortSpec ---

json to_json(const CohortSpec& s) {
    return json{{"n_stable", s.n_stable},
                {"n_decline", s.n_decline},
                {"volume_shape", shape_json(s.volume_shape)},
                {"noise_sigma", s.noise_sigma},
                {"decline_ventricle_growth", {s.decline_ventricle_growth.lo,
                                              s.decline_ventricle_growth.hi}},
                {"stable_drift", {s.stable_drift.lo, s.stable_drift.hi}},
                {"erosion_voxels", s.erosion_voxels},
                {"seed", s.seed}};
}

void apply_json(CohortSpec& s, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "n_stable") s.n_stable = value.get<int64_t>();
        else if (key == "n_decline") s.n_decline = value.get<int64_t>();
        else if (key == "volume_shape") s.volume_shape = shape_from_json(value);
        else if (key == "noise_sigma") s.noise_sigma = value.get<double>();
        else if (key == "decline_ventricle_growth")
            s.decline_ventricle_growth = Range{value.at(0).get<double>(), value.at(1).get<double>()};
        else if (key == "stable_drift")
            s.stable_drift = Range{value.at(0).get<double>(), value.at(1).get<double>()};
        else if (key == "erosion_voxels") s.erosion_voxels = value.get<int>();
        else if (key == "seed") s.seed = value.get<uint64_t>();
        else throw std::invalid_argument("unknown synth config key: " + key);
    }
}

// --- ModelConfig ---

json to_json(const ModelConfig& c) {
    return json{{"input_shape", shape_json(c.input_shape)},
                {"block_filters", c.block_filters},
                {"dense_widths", c.dense_widths},
                {"leaky_alpha", c.leaky_alpha},
                {"dropout_rate", c.dropout_rate},
                {"l2_coeff", c.l2_coeff},
                {"bn_epsilon", c.bn_epsilon},
                {"bn_momentum", c.bn_momentum},
                {"seed", c.seed}};
}

void apply_json(ModelConfig& c, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "input_shape") c.input_shape = shape_from_json(value);
        else if (key == "block_filters") {
            for (size_t i = 0; i < 3; ++i) c.block_filters[i] = value.at(i).get<int64_t>();
        } else if (key == "dense_widths") {
            for (size_t i = 0; i < 3; ++i) c.dense_widths[i] = value.at(i).get<int64_t>();
        } else if (key == "leaky_alpha") c.leaky_alpha = value.get<double>();
        else if (key == "dropout_rate") c.dropout_rate = value.get<double>();
        else if (key == "l2_coeff") c.l2_coeff = value.get<double>();
        else if (key == "bn_epsilon") c.bn_epsilon = value.get<double>();
        else if (key == "bn_momentum") c.bn_momentum = value.get<double>();
        else if (key == "seed") c.seed = value.get<uint64_t>();
        else throw std::invalid_argument("unknown model config key: " + key);
    }
}

// --- TrainConfig ---

const char* axis_name(Axis a) {
    switch (a) {
        case Axis::LR: return "LR";
        case Axis::AP: return "AP";
        case Axis::IS: return "IS";
    }
    return "IS";
}

Axis axis_from_name(const std::string& s) {
    if (s == "LR") return Axis::LR;
    if (s == "AP") return Axis::AP;
    if (s == "IS") return Axis::IS;
    throw std::invalid_argument("rotation_axis must be LR, AP, or IS");
}

json to_json(const TrainConfig& c) {
    return json{{"learning_rate", c.learning_rate},
                {"epochs", c.epochs},
                {"batch_size", c.batch_size},
                {"l2_coeff", c.l2_coeff},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"adam_epsilon", c.adam_epsilon},
                {"n_runs", c.n_runs},
                {"val_count", c.val_count},
                {"seed", c.seed},
                {"augment_enabled", c.augment_enabled},
                {"augment",
                 {{"max_rotation_deg", c.augment.max_rotation_deg},
                  {"rotation_axis", axis_name(c.augment.rotation_axis)},
                  {"flip_probability", c.augment.flip_probability}}}};
}

void apply_json(TrainConfig& c, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "learning_rate") c.learning_rate = value.get<double>();
        else if (key == "epochs") c.epochs = value.get<int64_t>();
        else if (key == "batch_size") c.batch_size = value.get<int64_t>();
        else if (key == "l2_coeff") c.l2_coeff = value.get<double>();
        else if (key == "beta1") c.beta1 = value.get<double>();
        else if (key == "beta2") c.beta2 = value.get<double>();
        else if (key == "adam_epsilon") c.adam_epsilon = value.get<double>();
        else if (key == "n_runs") c.n_runs = value.get<int64_t>();
        else if (key == "val_count") c.val_count = value.get<int64_t>();
        else if (key == "seed") c.seed = value.get<uint64_t>();
        else if (key == "augment_enabled") c.augment_enabled = value.get<bool>();
        else if (key == "augment") {
            for (const auto& [ak, av] : value.items()) {
                if (ak == "max_rotation_deg") c.augment.max_rotation_deg = av.get<double>();
                else if (ak == "rotation_axis")
                    c.augment.rotation_axis = axis_from_name(av.get<std::string>());
                else if (ak == "flip_probability") c.augment.flip_probability = av.get<double>();
                else throw std::invalid_argument("unknown augment config key: " + ak);
            }
        } else throw std::invalid_argument("unknown train config key: " + key);
    }
}

// --- TsneConfig ---

json to_json(const TsneConfig& c) {
    return json{{"perplexity", c.perplexity},
                {"iterations", c.iterations},
                {"early_exaggeration", c.early_exaggeration},
                {"exaggeration_iters", c.exaggeration_iters},
                {"step_size", c.step_size},
                {"momentum_initial", c.momentum_initial},
                {"momentum_final", c.momentum_final},
                {"seed", c.seed}};
}

void apply_json(TsneConfig& c, const json& j) {
    for (const auto& [key, value] : j.items()) {
        if (key == "perplexity") c.perplexity = value.get<double>();
        else if (key == "iterations") c.iterations = value.get<int64_t>();
        else if (key == "early_exaggeration") c.early_exaggeration = value.get<double>();
        else if (key == "exaggeration_iters") c.exaggeration_iters = value.get<int64_t>();
        else if (key == "step_size") c.step_size = value.get<double>();
        else if (key == "momentum_initial") c.momentum_initial = value.get<double>();
        else if (key == "momentum_final") c.momentum_final = value.get<double>();
        else if (key == "seed") c.seed = value.get<uint64_t>();
        else throw std::invalid_argument("unknown tsne config key: " + key);
    }
}

json load_config_file(const std::string& path) {
    if (path.empty()) return json::object();
    const std::vector<uint8_t> bytes = read_file_bytes(path);
    return json::parse(bytes.begin(), bytes.end());
}

json config_section(const json& file, const char* section) {
    if (!file.contains(section)) return json::object();
    return file.at(section);
}

void echo_config(const fs::path& out_dir, const json& resolved) {
    fs::create_directories(out_dir);
    atomic_write_file(out_dir / "config.json", resolved.dump(2) + "\n");
}

// ---------------------------------------------------------------------------

struct SynthArgs {
    std::string out, preset, config_path, shape, growth, drift;
    CohortSpec spec;
};

int cmd_synth(CLI::App* cmd, SynthArgs& a) {
    CohortSpec spec = a.preset == "desk" ? CohortSpec::desk() : CohortSpec();
    apply_json(spec, config_section(load_config_file(a.config_path), "synth"));
    if (cmd->count("--n-stable")) spec.n_stable = a.spec.n_stable;
    if (cmd->count("--n-decline")) spec.n_decline = a.spec.n_decline;
    if (cmd->count("--shape")) spec.volume_shape = parse_shape3(a.shape);
    if (cmd->count("--noise-sigma")) spec.noise_sigma = a.spec.noise_sigma;
    if (cmd->count("--growth")) spec.decline_ventricle_growth = parse_range(a.growth);
    if (cmd->count("--drift")) spec.stable_drift = parse_range(a.drift);
    if (cmd->count("--erosion")) spec.erosion_voxels = a.spec.erosion_voxels;
    if (cmd->count("--seed")) spec.seed = a.spec.seed;
    if (cmd->count("--null-control")) spec = spec.null_control();
    spec.validate();

    const Cohort cohort = generate_cohort_to_dir(spec, a.out);
    echo_config(a.out, json{{"command", "synth"}, {"synth", to_json(spec)}});
    std::cout << "wrote " << cohort.size() << " pairs (" << spec.n_stable << " stable, "
              << spec.n_decline << " decline) to " << a.out << "\n";
    return 0;
}

struct PreprocessArgs {
    std::string manifest, out, target = "204,216,150";
};

int cmd_preprocess(CLI::App*, PreprocessArgs& a) {
    const Shape target = parse_shape3(a.target);
    const Cohort raw = load_cohort(a.manifest);
    Cohort processed;
    processed.samples.resize(raw.samples.size());
    parallel_for(raw.size(), [&](int64_t i) {
        const Sample& s = raw.samples[static_cast<size_t>(i)];
        SamplePair p = preprocess_pair(s.baseline, s.followup, target);
        processed.samples[static_cast<size_t>(i)] =
            Sample{s.subject_id, std::move(p.baseline), std::move(p.followup), s.label};
    });
    write_cohort(processed, a.out);
    echo_config(a.out, json{{"command", "preprocess"},
                            {"target_shape", shape_json(target)},
                            {"output_shape", shape_json(processed.volume_shape())}});
    std::cout << "preprocessed " << processed.size() << " pairs to " << a.out << " at "
              << processed.volume_shape().str() << "\n";
    return 0;
}

struct TrainArgs {
    std::string manifest, out, config_path;
    TrainConfig cfg;
    ModelConfig mcfg;
    bool no_augment = false;
};

int cmd_train(CLI::App* cmd, TrainArgs& a) {
    const json file = load_config_file(a.config_path);
    ModelConfig mcfg;
    TrainConfig cfg;
    apply_json(mcfg, config_section(file, "model"));
    apply_json(cfg, config_section(file, "train"));
    if (cmd->count("--epochs")) cfg.epochs = a.cfg.epochs;
    if (cmd->count("--batch-size")) cfg.batch_size = a.cfg.batch_size;
    if (cmd->count("--lr")) cfg.learning_rate = a.cfg.learning_rate;
    if (cmd->count("--l2")) {
        cfg.l2_coeff = a.cfg.l2_coeff;
        mcfg.l2_coeff = a.cfg.l2_coeff;
    }
    if (cmd->count("--runs")) cfg.n_runs = a.cfg.n_runs;
    if (cmd->count("--val-count")) cfg.val_count = a.cfg.val_count;
    if (cmd->count("--seed")) cfg.seed = a.cfg.seed;
    if (a.no_augment) cfg.augment_enabled = false;

    const Cohort cohort = load_cohort(a.manifest);
    const json model_section = config_section(file, "model");
    if (model_section.contains("input_shape")) {
        if (mcfg.input_shape != cohort.volume_shape())
            throw std::invalid_argument("configured input_shape " + mcfg.input_shape.str() +
                                        " does not match cohort volumes " +
                                        cohort.volume_shape().str());
    } else {
        mcfg.input_shape = cohort.volume_shape();
    }
    mcfg.validate();
    cfg.validate();

    const fs::path out_dir(a.out);
    fs::create_directories(out_dir);
    echo_config(out_dir, json{{"command", "train"},
                              {"model", to_json(mcfg)},
                              {"train", to_json(cfg)}});

    ValidationSummary summary = subsampling_validation(
        cohort, mcfg, cfg, [&](int64_t run, const RunOutcome& outcome) {
            const EpochMetrics& fin = outcome.report.final_epoch();
            std::cout << "run " << (run + 1) << "/" << cfg.n_runs
                      << ": val_acc=" << fin.val_acc << " val_msle=" << fin.val_msle
                      << " train_loss=" << fin.train_loss << "\n";
            std::cout.flush();
            write_run_report_csv(out_dir / ("run_" + std::to_string(run + 1) + ".csv"),
                                 outcome.report);
            std::string ids;
            for (int64_t i : outcome.val_indices)
                ids += cohort.samples[static_cast<size_t>(i)].subject_id + "\n";
            atomic_write_file(
                out_dir / ("val_subjects_run_" + std::to_string(run + 1) + ".txt"), ids);
        });
    write_summary_csv(out_dir / "summary.csv", summary);
    save_checkpoint(summary.last_net, (out_dir / "model.ckpt").string());
    std::cout << "validation acc " << summary.val_acc_mean << " +/- " << summary.val_acc_std
              << ", msle " << summary.val_msle_mean << " +/- " << summary.val_msle_std << "\n";
    return 0;
}

struct EvalArgs {
    std::string checkpoint, manifest, out;
};

int cmd_eval(CLI::App*, EvalArgs& a) {
    SiameseNet<float> net = load_checkpoint(a.checkpoint);
    const Cohort cohort = load_cohort(a.manifest);
    if (cohort.volume_shape() != net.config.input_shape)
        throw std::invalid_argument("cohort volumes " + cohort.volume_shape().str() +
                                    " do not match checkpoint input " +
                                    net.config.input_shape.str());
    const TensorF probs = infer_probs(net, cohort);
    std::vector<int64_t> all(static_cast<size_t>(cohort.size()));
    std::iota(all.begin(), all.end(), 0);
    const std::vector<int> labels = gather_labels(cohort, all);
    const TensorF onehot = onehot_labels<float>(labels);
    const json metrics{{"n_samples", cohort.size()},
                       {"accuracy", accuracy(probs, labels)},
                       {"msle", static_cast<double>(msle(probs, onehot))},
                       {"crossentropy", static_cast<double>(crossentropy(probs, onehot))}};
    const std::string text = metrics.dump(2) + "\n";
    if (a.out.empty()) std::cout << text;
    else atomic_write_file(a.out, text);
    return 0;
}

struct EmbedArgs {
    std::string checkpoint, manifest, out, subjects, config_path;
    TsneConfig cfg;
};

int cmd_embed(CLI::App* cmd, EmbedArgs& a) {
    TsneConfig cfg;
    apply_json(cfg, config_section(load_config_file(a.config_path), "tsne"));
    if (cmd->count("--perplexity")) cfg.perplexity = a.cfg.perplexity;
    if (cmd->count("--iterations")) cfg.iterations = a.cfg.iterations;
    if (cmd->count("--seed")) cfg.seed = a.cfg.seed;

    SiameseNet<float> net = load_checkpoint(a.checkpoint);
    Cohort cohort = load_cohort(a.manifest);
    if (!a.subjects.empty()) {
        const std::vector<uint8_t> bytes = read_file_bytes(a.subjects);
        std::istringstream is(std::string(bytes.begin(), bytes.end()));
        std::vector<std::string> keep;
        for (std::string line; std::getline(is, line);) {
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (!line.empty()) keep.push_back(line);
        }
        Cohort filtered;
        for (Sample& s : cohort.samples)
            if (std::find(keep.begin(), keep.end(), s.subject_id) != keep.end())
                filtered.samples.push_back(std::move(s));
        if (filtered.empty()) throw std::invalid_argument("no manifest subjects match " + a.subjects);
        cohort = std::move(filtered);
    }
    if (cohort.volume_shape() != net.config.input_shape)
        throw std::invalid_argument("cohort volumes " + cohort.volume_shape().str() +
                                    " do not match checkpoint input " +
                                    net.config.input_shape.str());

    const auto embeddings = embed_stages(net, cohort, cfg, a.out);
    echo_config(a.out, json{{"command", "embed"}, {"tsne", to_json(cfg)}});
    for (size_t s = 0; s < embeddings.size(); ++s)
        std::cout << feature_stage_name(kAnalysisStages[s]) << ".csv: " << cohort.size()
                  << " points, final_kl=" << embeddings[s].final_kl << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Longitudinal siamese 3D pipeline: synthetic cohorts, training, analysis"};
    app.require_subcommand(1);
    int threads = 0;
    bool deterministic = false;
    app.add_option("--threads", threads,
                   "Worker threads (0 = LONGSIAM_THREADS env or hardware count)");
    app.add_flag("--deterministic", deterministic,
                 "Accepted for interface stability; outputs are deterministic for a fixed seed "
                 "regardless (reductions always run in a fixed order)");

    SynthArgs sa;
    CLI::App* synth = app.add_subcommand("synth", "Generate a synthetic labeled cohort");
    synth->add_option("--out", sa.out, "Output directory")->required();
    synth->add_option("--preset", sa.preset, "Size preset: full (default) or desk")
        ->check(CLI::IsMember({"full", "desk"}));
    synth->add_option("--config", sa.config_path, "JSON config file (synth section)");
    synth->add_option("--n-stable", sa.spec.n_stable, "Stable subject count");
    synth->add_option("--n-decline", sa.spec.n_decline, "Decline subject count");
    synth->add_option("--shape", sa.shape, "Volume extents X,Y,Z");
    synth->add_option("--noise-sigma", sa.spec.noise_sigma, "Follow-up voxel noise sigma");
    synth->add_option("--growth", sa.growth, "Decline ventricle growth range LO,HI");
    synth->add_option("--drift", sa.drift, "Stable ventricle drift range LO,HI");
    synth->add_option("--erosion", sa.spec.erosion_voxels, "Decline boundary erosion passes");
    synth->add_option("--seed", sa.spec.seed, "Master seed");
    synth->add_flag("--null-control", "Remove every class signal (growth = drift, no erosion)");

    PreprocessArgs pa;
    CLI::App* prep = app.add_subcommand("preprocess", "Mask/scale/pad/downscale a cohort");
    prep->add_option("--manifest", pa.manifest, "Input manifest CSV")->required();
    prep->add_option("--out", pa.out, "Output directory")->required();
    prep->add_option("--target", pa.target, "Pre-downscale padded shape X,Y,Z");

    TrainArgs ta;
    CLI::App* train = app.add_subcommand("train", "Random sub-sampling validation training");
    train->add_option("--manifest", ta.manifest, "Cohort manifest CSV")->required();
    train->add_option("--out", ta.out, "Output directory")->required();
    train->add_option("--config", ta.config_path, "JSON config file (model/train sections)");
    train->add_option("--epochs", ta.cfg.epochs, "Epochs per run");
    train->add_option("--batch-size", ta.cfg.batch_size, "Batch size");
    train->add_option("--lr", ta.cfg.learning_rate, "Adam base learning rate");
    train->add_option("--l2", ta.cfg.l2_coeff, "L2 coefficient on kernel weights");
    train->add_option("--runs", ta.cfg.n_runs, "Sub-sampling validation runs");
    train->add_option("--val-count", ta.cfg.val_count, "Held-out pairs per run");
    train->add_option("--seed", ta.cfg.seed, "Master seed");
    train->add_flag("--no-augment", ta.no_augment, "Disable training augmentation");

    EvalArgs ea;
    CLI::App* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a manifest");
    eval_cmd->add_option("--checkpoint", ea.checkpoint, "Model checkpoint")->required();
    eval_cmd->add_option("--manifest", ea.manifest, "Cohort manifest CSV")->required();
    eval_cmd->add_option("--out", ea.out, "Metrics JSON path (stdout when omitted)");

    EmbedArgs ba;
    CLI::App* embed = app.add_subcommand("embed", "t-SNE embeddings of the four feature stages");
    embed->add_option("--checkpoint", ba.checkpoint, "Model checkpoint")->required();
    embed->add_option("--manifest", ba.manifest, "Cohort manifest CSV")->required();
    embed->add_option("--out", ba.out, "Output directory")->required();
    embed->add_option("--subjects", ba.subjects, "Subject-id filter file (one id per line)");
    embed->add_option("--config", ba.config_path, "JSON config file (tsne section)");
    embed->add_option("--perplexity", ba.cfg.perplexity, "t-SNE perplexity");
    embed->add_option("--iterations", ba.cfg.iterations, "Gradient descent iterations");
    embed->add_option("--seed", ba.cfg.seed, "Embedding seed");

    CLI11_PARSE(app, argc, argv);
    threads::set_count(resolve_threads(threads));
    (void)deterministic;

    try {
        if (synth->parsed()) return cmd_synth(synth, sa);
        if (prep->parsed()) return cmd_preprocess(prep, pa);
        if (train->parsed()) return cmd_train(train, ta);
        if (eval_cmd->parsed()) return cmd_eval(eval_cmd, ea);
        if (embed->parsed()) return cmd_embed(embed, ba);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
