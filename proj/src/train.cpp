#include "longsiam/train.hpp"

#include <algorithm>
#include <cstring>
#include <numeric>
#include <sstream>

#include "longsiam/io_util.hpp"

namespace longsiam {

namespace {

struct SplitMetrics {
    double loss = 0, acc = 0, msle_v = 0;
};

SplitMetrics eval_split(const SiameseNet<float>& net, const Cohort& cohort, double penalty,
                        int64_t chunk) {
    const TensorF probs = infer_probs(net, cohort, chunk);
    std::vector<int64_t> all(static_cast<size_t>(cohort.size()));
    std::iota(all.begin(), all.end(), 0);
    const std::vector<int> labels = gather_labels(cohort, all);
    const TensorF y = onehot_labels<float>(labels);
    SplitMetrics m;
    m.loss = static_cast<double>(crossentropy(probs, y)) + penalty;
    m.acc = accuracy(probs, labels);
    m.msle_v = static_cast<double>(msle(probs, y));
    return m;
}

void mean_std(const std::vector<double>& xs, double& mean, double& std_out) {
    const double n = static_cast<double>(xs.size());
    mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double sq = 0;
    for (double x : xs) sq += (x - mean) * (x - mean);
    std_out = std::sqrt(sq / n);  // population std across runs
}

}  // namespace

TensorF infer_probs(const SiameseNet<float>& net, const Cohort& cohort, int64_t chunk_size) {
    if (cohort.empty()) throw std::invalid_argument("infer_probs: empty cohort");
    if (chunk_size < 1) throw std::invalid_argument("infer_probs: chunk_size must be >= 1");
    const int64_t n = cohort.size();
    TensorF probs = TensorF::zeros(Shape{n, 2});
    Rng unused(0);
    for (int64_t start = 0; start < n; start += chunk_size) {
        const int64_t count = std::min(chunk_size, n - start);
        std::vector<int64_t> idx(static_cast<size_t>(count));
        std::iota(idx.begin(), idx.end(), start);
        const TensorF bb = gather_volumes(cohort, idx, false);
        const TensorF fb = gather_volumes(cohort, idx, true);
        PairResult<float> r = forward_pair(net, bb, fb, Mode::Infer, unused, false);
        std::memcpy(probs.data() + start * 2, r.probs.data(),
                    static_cast<size_t>(count) * 2 * sizeof(float));
    }
    return probs;
}

RunReport train_run(SiameseNet<float>& net, const Cohort& train_set, const Cohort& val_set,
                    const TrainConfig& cfg, Rng& rng) {
    cfg.validate();
    if (train_set.empty() || val_set.empty())
        throw std::invalid_argument("train_run: train and validation sets must be non-empty");
    const Shape vs = train_set.volume_shape();
    if (vs != net.config.input_shape || val_set.volume_shape() != net.config.input_shape)
        throw std::invalid_argument("train_run: cohort volume shape " + vs.str() +
                                    " does not match model input " +
                                    net.config.input_shape.str());

    const std::vector<ParamRef<float>> params = trainable_params(net);
    AdamState<float> adam = init_adam(params);
    AdamConfig<float> acfg;
    acfg.learning_rate = static_cast<float>(cfg.learning_rate);
    acfg.beta1 = static_cast<float>(cfg.beta1);
    acfg.beta2 = static_cast<float>(cfg.beta2);
    acfg.epsilon = static_cast<float>(cfg.adam_epsilon);
    acfg.l2_coeff = static_cast<float>(cfg.l2_coeff);

    const int64_t n = train_set.size();
    const int64_t voxels = vs.count();
    std::vector<int64_t> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);

    RunReport report;
    report.epochs.reserve(static_cast<size_t>(cfg.epochs));
    for (int64_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        for (int64_t start = 0; start < n; start += cfg.batch_size) {
            const int64_t count = std::min(cfg.batch_size, n - start);
            if (count < 2) continue;  // batchnorm train mode needs >= 2
            TensorF bb = TensorF::zeros(Shape{count, vs[0], vs[1], vs[2]});
            TensorF fb = TensorF::zeros(Shape{count, vs[0], vs[1], vs[2]});
            std::vector<int> labels(static_cast<size_t>(count));
            for (int64_t r = 0; r < count; ++r) {
                const Sample& s =
                    train_set.samples[static_cast<size_t>(order[static_cast<size_t>(start + r)])];
                labels[static_cast<size_t>(r)] = s.label;
                if (cfg.augment_enabled) {
                    // Baseline then follow-up, two uniforms each: generator
                    // positions stay predictable.
                    const Volume ab = augment_image(s.baseline, cfg.augment, rng);
                    const Volume af = augment_image(s.followup, cfg.augment, rng);
                    std::memcpy(bb.data() + r * voxels, ab.intensities.data(),
                                static_cast<size_t>(voxels) * sizeof(float));
                    std::memcpy(fb.data() + r * voxels, af.intensities.data(),
                                static_cast<size_t>(voxels) * sizeof(float));
                } else {
                    std::memcpy(bb.data() + r * voxels, s.baseline.intensities.data(),
                                static_cast<size_t>(voxels) * sizeof(float));
                    std::memcpy(fb.data() + r * voxels, s.followup.intensities.data(),
                                static_cast<size_t>(voxels) * sizeof(float));
                }
            }
            PairResult<float> fwd = forward_pair(net, bb, fb, Mode::Train, rng, false);
            commit_running_stats(net, fwd.tapes);
            const TensorF y = onehot_labels<float>(labels);
            const TensorF grad_probs = crossentropy_grad(fwd.probs, y);
            SiameseGrads<float> grads = backward_pair(net, fwd.tapes, grad_probs);
            adam_step(params, grad_tensors(grads), adam, acfg);
        }

        const double penalty =
            static_cast<double>(l2_penalty(params, static_cast<float>(cfg.l2_coeff)));
        const SplitMetrics tr = eval_split(net, train_set, penalty, cfg.batch_size);
        const SplitMetrics va = eval_split(net, val_set, penalty, cfg.batch_size);
        report.epochs.push_back(EpochMetrics{tr.loss, va.loss, tr.acc, va.acc, tr.msle_v,
                                             va.msle_v});
    }
    return report;
}

ValidationSummary subsampling_validation(
    const Cohort& cohort, const ModelConfig& mcfg, const TrainConfig& cfg,
    const std::function<void(int64_t, const RunOutcome&)>& on_run) {
    cfg.validate();
    const int64_t n = cohort.size();
    if (n <= cfg.val_count)
        throw std::invalid_argument("subsampling_validation: cohort size " + std::to_string(n) +
                                    " must exceed val_count " + std::to_string(cfg.val_count));

    ValidationSummary summary;
    std::vector<double> ta, tm, va, vm;
    for (int64_t run = 0; run < cfg.n_runs; ++run) {
        const uint64_t run_seed = derive_seed(cfg.seed, 0xA100u + static_cast<uint64_t>(run));
        Rng split_rng(derive_seed(run_seed, 1));
        std::vector<int64_t> val_idx = split_rng.sample_without_replacement(n, cfg.val_count);
        std::sort(val_idx.begin(), val_idx.end());
        std::vector<bool> held(static_cast<size_t>(n), false);
        for (int64_t i : val_idx) held[static_cast<size_t>(i)] = true;
        std::vector<int64_t> train_idx;
        train_idx.reserve(static_cast<size_t>(n - cfg.val_count));
        for (int64_t i = 0; i < n; ++i)
            if (!held[static_cast<size_t>(i)]) train_idx.push_back(i);

        const Cohort train_set = subset(cohort, train_idx);
        const Cohort val_set = subset(cohort, val_idx);

        ModelConfig m = mcfg;
        m.seed = derive_seed(run_seed, 2);
        SiameseNet<float> net = build<float>(m);
        Rng train_rng(derive_seed(run_seed, 3));

        RunOutcome outcome;
        outcome.report = train_run(net, train_set, val_set, cfg, train_rng);
        outcome.val_indices = std::move(val_idx);
        const EpochMetrics& fin = outcome.report.final_epoch();
        ta.push_back(fin.train_acc);
        tm.push_back(fin.train_msle);
        va.push_back(fin.val_acc);
        vm.push_back(fin.val_msle);
        if (on_run) on_run(run, outcome);
        summary.runs.push_back(std::move(outcome));
        if (run == cfg.n_runs - 1) summary.last_net = std::move(net);
    }
    mean_std(ta, summary.train_acc_mean, summary.train_acc_std);
    mean_std(tm, summary.train_msle_mean, summary.train_msle_std);
    mean_std(va, summary.val_acc_mean, summary.val_acc_std);
    mean_std(vm, summary.val_msle_mean, summary.val_msle_std);
    return summary;
}

std::string run_report_csv(const RunReport& report) {
    std::ostringstream os;
    os << "epoch,train_loss,val_loss,train_acc,val_acc,train_msle,val_msle\n";
    for (size_t i = 0; i < report.epochs.size(); ++i) {
        const EpochMetrics& e = report.epochs[i];
        os << (i + 1) << ',' << format_number(e.train_loss) << ',' << format_number(e.val_loss)
           << ',' << format_number(e.train_acc) << ',' << format_number(e.val_acc) << ','
           << format_number(e.train_msle) << ',' << format_number(e.val_msle) << '\n';
    }
    return os.str();
}

std::string summary_csv(const ValidationSummary& s) {
    std::ostringstream os;
    os << "split,acc_mean,acc_std,msle_mean,msle_std\n";
    os << "train," << format_number(s.train_acc_mean) << ',' << format_number(s.train_acc_std)
       << ',' << format_number(s.train_msle_mean) << ',' << format_number(s.train_msle_std)
       << '\n';
    os << "validation," << format_number(s.val_acc_mean) << ',' << format_number(s.val_acc_std)
       << ',' << format_number(s.val_msle_mean) << ',' << format_number(s.val_msle_std) << '\n';
    return os.str();
}

void write_run_report_csv(const std::filesystem::path& path, const RunReport& report) {
    atomic_write_file(path, run_report_csv(report));
}

void write_summary_csv(const std::filesystem::path& path, const ValidationSummary& summary) {
    atomic_write_file(path, summary_csv(summary));
}

}  // namespace longsiam
