#include "tac/pipeline.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "tac/error.hpp"
#include "tac/neighbors.hpp"

namespace tac {
namespace {

namespace fs = std::filesystem;

template <class F>
auto staged(const char* stage, F&& fn) -> decltype(fn()) {
    try {
        return fn();
    } catch (const Error& e) {
        rethrow_with_stage(e, stage);
    } catch (const fs::filesystem_error& e) {
        throw FormatError(std::string("[") + stage + "] " + e.what());
    }
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::uint64_t fnv1a(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct Inputs {
    DatasetManifest manifest;
    EmbeddingMatrix images;
    std::optional<std::vector<int>> labels;
};

Inputs load_inputs(const RunConfig& cfg, PipelineResult& result) {
    return staged("load", [&] {
        DatasetManifest m = load_manifest(cfg.manifest);
        EmbeddingMatrix images = load_embeddings(m.images, {.normalize = true});
        std::optional<std::vector<int>> labels;
        if (!cfg.labels.empty()) {
            labels = load_labels(cfg.labels, images.rows());
        } else if (m.labels) {
            labels = load_labels(*m.labels, images.rows());
        } else {
            result.warnings.push_back("no labels for dataset '" + m.name + "'; writing assignments only");
        }
        return Inputs{std::move(m), std::move(images), std::move(labels)};
    });
}

void finish_with_labels(const RunConfig& cfg, const std::string& hash, const std::optional<std::vector<int>>& labels,
                        PipelineResult& result) {
    const fs::path assignments = cfg.output_dir / "assignments.txt";
    staged("write", [&] { write_labels(assignments, result.assignments); });
    result.artifacts.push_back(assignments);
    if (!labels) return;
    result.report = staged("eval", [&] { return evaluate(result.assignments, *labels); });
    result.report->seed = cfg.seed;
    result.report->config_hash = hash;
    const fs::path metrics = cfg.output_dir / "metrics.txt";
    staged("write", [&] { write_report(metrics, *result.report); });
    result.artifacts.push_back(metrics);
}

}  // namespace

const char* mode_name(Mode mode) noexcept {
    switch (mode) {
        case Mode::NoTrain: return "notrain";
        case Mode::Train: return "train";
        case Mode::Eval: return "eval";
        case Mode::ZeroShot: return "zeroshot";
        case Mode::SelectNouns: return "select-nouns";
        case Mode::Counterpart: return "counterpart";
    }
    return "unknown";
}

Mode parse_mode(const std::string& name) {
    for (Mode m : {Mode::NoTrain, Mode::Train, Mode::Eval, Mode::ZeroShot, Mode::SelectNouns, Mode::Counterpart}) {
        if (name == mode_name(m)) return m;
    }
    throw ParameterError("unknown mode '" + name + "'");
}

void validate_run_config(const RunConfig& cfg) {
    const auto& t = cfg.text;
    if (t.granularity.compact_cluster_size == 0) throw ParameterError("n_tilde must be >= 1");
    if (t.granularity.centers_per_class == 0) throw ParameterError("centers_per_class must be >= 1");
    if (t.gamma == 0) throw ParameterError("gamma must be >= 1");
    if (!(t.retrieval_tau > 0.0)) throw ParameterError("tau_tilde must be > 0");
    if (!(t.noun_temperature > 0.0)) throw ParameterError("noun_temperature must be > 0");
    if (t.kmeans.max_iter == 0) throw ParameterError("kmeans max_iter must be >= 1");
    if (!(t.kmeans.tol >= 0.0)) throw ParameterError("kmeans tol must be >= 0");
    if (!(cfg.zero_shot.clip_tau > 0.0)) throw ParameterError("clip_tau must be > 0");
    validate_config(cfg.distill);
}

std::string canonical_config(const RunConfig& cfg) {
    const auto& t = cfg.text;
    const auto& d = cfg.distill;
    std::ostringstream out;
    out << "mode = " << mode_name(cfg.mode) << '\n'
        << "manifest = " << cfg.manifest.string() << '\n'
        << "seed = " << cfg.seed << '\n'
        << "n_tilde = " << t.granularity.compact_cluster_size << '\n'
        << "centers_per_class = " << t.granularity.centers_per_class << '\n'
        << "gamma = " << t.gamma << '\n'
        << "tau_tilde = " << fmt_double(t.retrieval_tau) << '\n'
        << "noun_temperature = " << fmt_double(t.noun_temperature) << '\n'
        << "kmeans_max_iter = " << t.kmeans.max_iter << '\n'
        << "kmeans_tol = " << fmt_double(t.kmeans.tol) << '\n'
        << "n_hat = " << d.n_neighbors << '\n'
        << "tau_hat = " << fmt_double(d.loss.tau_hat) << '\n'
        << "alpha = " << fmt_double(d.loss.alpha) << '\n'
        << "use_dis = " << d.loss.use_dis << '\n'
        << "use_con = " << d.loss.use_con << '\n'
        << "use_bal = " << d.loss.use_bal << '\n'
        << "epochs = " << d.epochs << '\n'
        << "batch_size = " << d.batch_size << '\n'
        << "hidden_dim = " << d.hidden_dim << '\n'
        << "activation = " << (d.activation == Activation::Relu ? "relu" : "tanh") << '\n'
        << "lr = " << fmt_double(d.adam.lr) << '\n'
        << "adam_beta1 = " << fmt_double(d.adam.beta1) << '\n'
        << "adam_beta2 = " << fmt_double(d.adam.beta2) << '\n'
        << "adam_eps = " << fmt_double(d.adam.eps) << '\n'
        << "clip_tau = " << fmt_double(cfg.zero_shot.clip_tau) << '\n'
        << "prompt_template = " << cfg.zero_shot.prompt_template << '\n'
        << "predictions = " << cfg.predictions.string() << '\n'
        << "labels = " << cfg.labels.string() << '\n'
        << "class_names = " << cfg.class_names.string() << '\n';
    return out.str();
}

std::string config_hash(const RunConfig& cfg) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_config(cfg))));
    return buf;
}

PipelineResult run_pipeline(const RunConfig& cfg) {
    staged("config", [&] { validate_run_config(cfg); });
    const std::string hash = config_hash(cfg);
    PipelineResult result;

    staged("write", [&] {
        fs::create_directories(cfg.output_dir);
        std::ofstream out(cfg.output_dir / "config.txt", std::ios::trunc);
        if (!out) throw FormatError("cannot write " + (cfg.output_dir / "config.txt").string());
        out << canonical_config(cfg) << "config_hash = " << hash << '\n';
    });
    result.artifacts.push_back(cfg.output_dir / "config.txt");

    if (cfg.mode == Mode::Eval) {
        if (cfg.predictions.empty()) throw ParameterError("[eval] no predictions file given");
        const std::vector<int> truth = staged("load", [&] {
            if (!cfg.labels.empty()) return load_labels(cfg.labels);
            const DatasetManifest m = load_manifest(cfg.manifest);
            if (!m.labels) throw DataError("dataset '" + m.name + "' has no labels to evaluate against");
            return load_labels(*m.labels);
        });
        result.assignments = staged("load", [&] { return load_labels(cfg.predictions, truth.size()); });
        result.report = staged("eval", [&] { return evaluate(result.assignments, truth); });
        result.report->seed = cfg.seed;
        result.report->config_hash = hash;
        staged("write", [&] { write_report(cfg.output_dir / "metrics.txt", *result.report); });
        result.artifacts.push_back(cfg.output_dir / "metrics.txt");
        return result;
    }

    Inputs in = load_inputs(cfg, result);

    if (cfg.mode == Mode::ZeroShot) {
        if (cfg.class_names.empty()) throw ParameterError("[zeroshot] no class name file given");
        const NounVocabulary classes =
            staged("load", [&] { return load_vocabulary(cfg.class_names, noun_embeddings_path(cfg.class_names)); });
        staged("write", [&] {
            std::ofstream out(cfg.output_dir / "prompts.txt", std::ios::trunc);
            if (!out) throw FormatError("cannot write " + (cfg.output_dir / "prompts.txt").string());
            for (const auto& name : classes.nouns) out << apply_prompt(cfg.zero_shot.prompt_template, name) << '\n';
        });
        result.artifacts.push_back(cfg.output_dir / "prompts.txt");
        result.assignments = staged("zeroshot", [&] {
            return argmax_rows(zero_shot_classify(in.images, classes.embeddings, cfg.zero_shot));
        });
        finish_with_labels(cfg, hash, in.labels, result);
        return result;
    }

    const NounVocabulary vocab =
        staged("load", [&] { return load_vocabulary(in.manifest.nouns, noun_embeddings_path(in.manifest.nouns)); });
    const RngState kmeans_root = make_rng(cfg.seed, streams::kmeans_init);

    const NounSelection selection = staged("select-nouns", [&] {
        if (in.images.dim() != vocab.embeddings.dim()) {
            throw DimensionError("image dim " + std::to_string(in.images.dim()) + " vs noun dim " +
                                 std::to_string(vocab.embeddings.dim()));
        }
        const std::size_t k = estimate_k(in.images.rows(), in.manifest.target_k, cfg.text.granularity);
        RngState rng = rng_split(kmeans_root, 0);
        const EmbeddingMatrix centers = kmeans_fit(in.images, k, rng, cfg.text.kmeans).centers;
        return select_nouns(classify_nouns(vocab, centers, cfg.text.noun_temperature), cfg.text.gamma);
    });
    staged("write", [&] { write_selection_report(cfg.output_dir / "selection.tsv", selection, vocab, hash); });
    result.artifacts.push_back(cfg.output_dir / "selection.tsv");
    if (cfg.mode == Mode::SelectNouns) return result;

    const TextCounterparts counterparts = staged(
        "counterpart", [&] { return build_counterparts(in.images, vocab, selection, cfg.text.retrieval_tau); });
    staged("write", [&] { write_embeddings(cfg.output_dir / "counterparts.tace", counterparts.matrix); });
    result.artifacts.push_back(cfg.output_dir / "counterparts.tace");
    if (cfg.mode == Mode::Counterpart) return result;

    if (cfg.mode == Mode::NoTrain) {
        result.assignments = staged("cluster", [&] {
            RngState rng = rng_split(kmeans_root, 1);
            return cluster_no_train(in.images, counterparts, in.manifest.target_k, rng, cfg.text.kmeans);
        });
    } else {
        const auto [image_graph, text_graph] = staged("neighbors", [&] {
            return std::pair{build_graph(in.images, cfg.distill.n_neighbors),
                             build_graph(counterparts.matrix, cfg.distill.n_neighbors)};
        });
        DistillConfig dcfg = cfg.distill;
        dcfg.seed = cfg.seed;
        const TrainResult trained = staged("train", [&] {
            return train(in.images, counterparts, image_graph, text_graph, in.manifest.target_k, dcfg);
        });
        staged("write", [&] {
            write_checkpoint(cfg.output_dir / "checkpoint.tack", trained.heads, trained.steps);
            write_loss_csv(cfg.output_dir / "loss.csv", trained.history, hash);
        });
        result.artifacts.push_back(cfg.output_dir / "checkpoint.tack");
        result.artifacts.push_back(cfg.output_dir / "loss.csv");
        result.assignments = staged("predict", [&] { return predict(trained.heads.f, in.images); });
    }
    finish_with_labels(cfg, hash, in.labels, result);
    return result;
}

SweepAxis parse_sweep_axis(const std::string& name) {
    if (name == "n_tilde" || name == "compact_cluster_size") return SweepAxis::CompactClusterSize;
    if (name == "gamma") return SweepAxis::Gamma;
    if (name == "tau_tilde" || name == "retrieval_tau") return SweepAxis::RetrievalTau;
    if (name == "n_hat" || name == "n_neighbors") return SweepAxis::Neighbors;
    if (name == "tau_hat") return SweepAxis::TauHat;
    if (name == "alpha") return SweepAxis::Alpha;
    throw ParameterError("unknown sweep axis '" + name + "'");
}

const char* sweep_axis_name(SweepAxis axis) noexcept {
    switch (axis) {
        case SweepAxis::CompactClusterSize: return "n_tilde";
        case SweepAxis::Gamma: return "gamma";
        case SweepAxis::RetrievalTau: return "tau_tilde";
        case SweepAxis::Neighbors: return "n_hat";
        case SweepAxis::TauHat: return "tau_hat";
        case SweepAxis::Alpha: return "alpha";
    }
    return "unknown";
}

RunConfig with_axis_value(const RunConfig& base, SweepAxis axis, double value) {
    RunConfig cfg = base;
    const auto as_count = [&] {
        if (!(value >= 1.0) || value != std::floor(value) || value > 1e12) {
            throw ParameterError(std::string(sweep_axis_name(axis)) + " needs a positive integer, got " +
                                 fmt_double(value));
        }
        return static_cast<std::size_t>(value);
    };
    switch (axis) {
        case SweepAxis::CompactClusterSize: cfg.text.granularity.compact_cluster_size = as_count(); break;
        case SweepAxis::Gamma: cfg.text.gamma = as_count(); break;
        case SweepAxis::RetrievalTau: cfg.text.retrieval_tau = value; break;
        case SweepAxis::Neighbors: cfg.distill.n_neighbors = as_count(); break;
        case SweepAxis::TauHat: cfg.distill.loss.tau_hat = value; break;
        case SweepAxis::Alpha: cfg.distill.loss.alpha = value; break;
    }
    validate_run_config(cfg);
    return cfg;
}

std::vector<MetricsReport> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values) {
    if (values.empty()) throw ParameterError("sweep: empty value list");
    if (base.mode != Mode::NoTrain && base.mode != Mode::Train) {
        throw ParameterError("sweep: mode must be notrain or train");
    }
    std::vector<RunConfig> runs;
    for (double v : values) runs.push_back(with_axis_value(base, axis, v));

    fs::create_directories(base.output_dir);
    const fs::path csv = base.output_dir / "sweep.csv";
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw FormatError("cannot write " + csv.string());
    out << "run_id,axis,value," << report_csv_header() << '\n';

    std::vector<MetricsReport> reports;
    for (std::size_t i = 0; i < runs.size(); ++i) {
        char dir[32];
        std::snprintf(dir, sizeof dir, "run_%03zu", i);
        runs[i].output_dir = base.output_dir / dir;
        const PipelineResult r = run_pipeline(runs[i]);
        if (!r.report) throw DataError("sweep: dataset has no labels, nothing to compare");
        char value[40];
        std::snprintf(value, sizeof value, "%g", values[i]);
        out << i << ',' << sweep_axis_name(axis) << ',' << value << ',' << report_csv_row(*r.report) << '\n';
        out.flush();
        reports.push_back(*r.report);
    }
    return reports;
}

}  // namespace tac
