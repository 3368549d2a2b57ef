// Command-line front end: tac <subcommand> [options]

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tac/error.hpp"
#include "tac/parallel.hpp"
#include "tac/pipeline.hpp"
#include "tac/synthetic.hpp"

namespace {

constexpr const char* footer =
    "Environment:\n"
    "  TAC_OUTPUT_DIR  default for --out\n"
    "  TAC_THREADS     default for --threads\n"
    "\n"
    "Metrics report fields, in order (metrics.txt and sweep.csv):\n"
    "  nmi, acc, ari, n, k_pred, k_true, cluster_entropy, seed, config_hash, timestamp\n"
    "\n"
    "Exit codes:\n"
    "  0 ok, 1 other failure, 2 bad parameter or usage, 3 file format, 4 data,\n"
    "  5 dimension mismatch, 6 noun selection, 7 normalization, 8 training diverged";

struct Options {
    tac::RunConfig cfg;
    std::string mode = "notrain";
    std::string activation = "relu";
    std::string preset;
    bool no_dis = false;
    bool no_con = false;
    bool no_bal = false;
    std::size_t threads = 1;
    std::string axis;
    std::vector<double> values;
    // synth
    tac::SyntheticConfig synth;
};

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v != nullptr && *v != '\0' ? std::string(v) : fallback;
}

void add_io(CLI::App& sub, Options& o, bool manifest_required = true) {
    auto* m = sub.add_option("--manifest,-m", o.cfg.manifest, "dataset manifest");
    if (manifest_required) m->required()->check(CLI::ExistingFile);
    sub.add_option("--out,-o", o.cfg.output_dir, "run directory")->capture_default_str();
    sub.add_option("--seed", o.cfg.seed, "random seed")->capture_default_str();
    sub.add_option("--threads", o.threads, "worker threads")->capture_default_str()->check(CLI::PositiveNumber);
    sub.add_option("--labels", o.cfg.labels, "label file overriding the manifest");
}

void add_text_space(CLI::App& sub, Options& o) {
    auto& t = o.cfg.text;
    sub.add_option("--n-tilde", t.granularity.compact_cluster_size, "images per compact cluster")
        ->capture_default_str();
    sub.add_option("--centers-per-class", t.granularity.centers_per_class, "minimum centers per class")
        ->capture_default_str();
    sub.add_option("--gamma", t.gamma, "nouns kept per semantic center")->capture_default_str();
    sub.add_option("--tau-tilde", t.retrieval_tau, "noun retrieval temperature")->capture_default_str();
    sub.add_option("--noun-temperature", t.noun_temperature, "temperature of the noun classifier")
        ->capture_default_str();
    sub.add_option("--kmeans-max-iter", t.kmeans.max_iter, "k-means iteration cap")->capture_default_str();
}

void add_distill(CLI::App& sub, Options& o) {
    auto& d = o.cfg.distill;
    sub.add_option("--preset", o.preset, "large-k: tau-hat 5, batch 8192, 100 epochs")
        ->check(CLI::IsMember({"large-k"}));
    sub.add_option("--n-hat", d.n_neighbors, "neighbors per sample")->capture_default_str();
    sub.add_option("--tau-hat", d.loss.tau_hat, "distillation temperature")->capture_default_str();
    sub.add_option("--alpha", d.loss.alpha, "balance weight")->capture_default_str();
    sub.add_option("--epochs", d.epochs, "training epochs")->capture_default_str();
    sub.add_option("--batch-size", d.batch_size, "batch size")->capture_default_str();
    sub.add_option("--lr", d.adam.lr, "Adam learning rate")->capture_default_str();
    sub.add_option("--adam-beta1", d.adam.beta1)->capture_default_str();
    sub.add_option("--adam-beta2", d.adam.beta2)->capture_default_str();
    sub.add_option("--adam-eps", d.adam.eps)->capture_default_str();
    sub.add_option("--hidden", d.hidden_dim, "hidden width (0: input width)")->capture_default_str();
    sub.add_option("--activation", o.activation, "relu or tanh")
        ->capture_default_str()
        ->check(CLI::IsMember({"relu", "tanh"}));
    sub.add_flag("--no-dis", o.no_dis, "drop the distillation loss");
    sub.add_flag("--no-con", o.no_con, "drop the confidence loss");
    sub.add_flag("--no-bal", o.no_bal, "drop the balance loss");
}

// Preset values apply only where the user did not pass the flag explicitly.
void resolve(CLI::App& sub, Options& o) {
    auto& d = o.cfg.distill;
    if (o.preset == "large-k") {
        const auto preset = tac::DistillConfig::large_k();
        if (sub.count("--tau-hat") == 0) d.loss.tau_hat = preset.loss.tau_hat;
        if (sub.count("--batch-size") == 0) d.batch_size = preset.batch_size;
        if (sub.count("--epochs") == 0) d.epochs = preset.epochs;
    }
    d.activation = o.activation == "tanh" ? tac::Activation::Tanh : tac::Activation::Relu;
    d.loss.use_dis = !o.no_dis;
    d.loss.use_con = !o.no_con;
    d.loss.use_bal = !o.no_bal;
    tac::set_num_threads(o.threads);
}

int report(const tac::PipelineResult& r) {
    for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
    if (r.report) std::cout << tac::report_text(*r.report);
    for (const auto& a : r.artifacts) std::cerr << "wrote " << a.string() << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Text-aided clustering of pre-computed image embeddings"};
    app.footer(footer);
    app.require_subcommand(1);

    Options o;
    o.cfg.output_dir = env_or("TAC_OUTPUT_DIR", "tac_out");
    {
        const std::string t = env_or("TAC_THREADS", "1");
        try {
            o.threads = std::max<std::size_t>(1, std::stoul(t));
        } catch (const std::exception&) {
            std::cerr << "error: TAC_THREADS must be a positive integer\n";
            return 2;
        }
    }

    auto* select = app.add_subcommand("select-nouns", "pick discriminative nouns per semantic center");
    add_io(*select, o);
    add_text_space(*select, o);

    auto* counterpart = app.add_subcommand("counterpart", "build text counterparts for every image");
    add_io(*counterpart, o);
    add_text_space(*counterpart, o);

    auto* cluster = app.add_subcommand("cluster", "cluster images with (train) or without (notrain) the heads");
    add_io(*cluster, o);
    add_text_space(*cluster, o);
    add_distill(*cluster, o);
    cluster->add_option("--mode", o.mode, "notrain or train")
        ->capture_default_str()
        ->check(CLI::IsMember({"notrain", "train"}));

    auto* eval = app.add_subcommand("eval", "score an assignment file against labels");
    add_io(*eval, o, false);
    eval->add_option("--pred", o.cfg.predictions, "assignment file")->required()->check(CLI::ExistingFile);

    auto* zeroshot = app.add_subcommand("zeroshot", "classify images against prompt embeddings");
    add_io(*zeroshot, o);
    zeroshot->add_option("--classes", o.cfg.class_names, "class names, one per line; embeddings in <stem>.tace")
        ->required()
        ->check(CLI::ExistingFile);
    zeroshot->add_option("--clip-tau", o.cfg.zero_shot.clip_tau, "softmax temperature")->capture_default_str();
    zeroshot->add_option("--prompt", o.cfg.zero_shot.prompt_template, "prompt with one [CLASS]")
        ->capture_default_str();

    auto* sweep = app.add_subcommand("sweep", "one run per value of a single tunable");
    add_io(*sweep, o);
    add_text_space(*sweep, o);
    add_distill(*sweep, o);
    sweep->add_option("--mode", o.mode, "notrain or train")
        ->capture_default_str()
        ->check(CLI::IsMember({"notrain", "train"}));
    sweep->add_option("--axis", o.axis, "n_tilde, gamma, tau_tilde, n_hat, tau_hat or alpha")->required();
    sweep->add_option("--values", o.values, "comma-separated values")->delimiter(',');

    auto* synth = app.add_subcommand("synth", "write a synthetic paired-embedding dataset");
    synth->add_option("--out,-o", o.cfg.output_dir, "dataset directory")->capture_default_str();
    synth->add_option("--n", o.synth.n)->capture_default_str();
    synth->add_option("--dim", o.synth.dim)->capture_default_str();
    synth->add_option("--clusters", o.synth.clusters)->capture_default_str();
    synth->add_option("--styles", o.synth.styles)->capture_default_str();
    synth->add_option("--seed", o.synth.seed)->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (synth->parsed()) {
            const auto path = tac::write_synthetic_dataset(o.cfg.output_dir, tac::make_synthetic(o.synth));
            std::cout << path.string() << '\n';
            return 0;
        }
        if (select->parsed()) {
            resolve(*select, o);
            o.cfg.mode = tac::Mode::SelectNouns;
        } else if (counterpart->parsed()) {
            resolve(*counterpart, o);
            o.cfg.mode = tac::Mode::Counterpart;
        } else if (cluster->parsed()) {
            resolve(*cluster, o);
            o.cfg.mode = tac::parse_mode(o.mode);
        } else if (eval->parsed()) {
            if (o.cfg.manifest.empty() && o.cfg.labels.empty()) {
                std::cerr << "error: eval needs --labels or --manifest\n";
                return 2;
            }
            resolve(*eval, o);
            o.cfg.mode = tac::Mode::Eval;
        } else if (zeroshot->parsed()) {
            resolve(*zeroshot, o);
            o.cfg.mode = tac::Mode::ZeroShot;
        } else if (sweep->parsed()) {
            resolve(*sweep, o);
            o.cfg.mode = tac::parse_mode(o.mode);
            const auto reports = tac::run_sweep(o.cfg, tac::parse_sweep_axis(o.axis), o.values);
            std::cout << "run_id," << tac::report_csv_header() << '\n';
            for (std::size_t i = 0; i < reports.size(); ++i) {
                std::cout << i << ',' << tac::report_csv_row(reports[i]) << '\n';
            }
            std::cerr << "wrote " << (o.cfg.output_dir / "sweep.csv").string() << '\n';
            return 0;
        }
        return report(tac::run_pipeline(o.cfg));
    } catch (const tac::Error& e) {
        std::cerr << "error: " << tac::error_kind_name(e.kind()) << ": " << e.what() << '\n';
        return tac::exit_code(e.kind());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
