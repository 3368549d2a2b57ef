#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <sstream>

#include "support.hpp"
#include "tac/error.hpp"
#include "tac/parallel.hpp"
#include "tac/pipeline.hpp"
#include "tac/synthetic.hpp"

namespace fs = std::filesystem;

namespace {

// One small synthetic dataset shared by every case.
const fs::path& fixture_manifest() {
    static const fs::path path = [] {
        tac::SyntheticConfig sc;
        sc.n = 600;
        sc.dim = 16;
        sc.clusters = 3;
        sc.styles = 3;
        sc.distractors = 40;
        return tac::write_synthetic_dataset(testing::scratch_dir("pipeline_fixture"), tac::make_synthetic(sc));
    }();
    return path;
}

tac::RunConfig base_config(const std::string& out, tac::Mode mode = tac::Mode::NoTrain) {
    tac::RunConfig cfg;
    cfg.manifest = fixture_manifest();
    cfg.mode = mode;
    cfg.output_dir = testing::scratch_dir(out);
    cfg.text.granularity.compact_cluster_size = 50;
    cfg.distill.n_neighbors = 10;
    cfg.distill.batch_size = 128;
    cfg.distill.epochs = 10;
    return cfg;
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string(TAC_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::string> lines(const fs::path& p) {
    std::istringstream in(testing::slurp(p));
    std::vector<std::string> out;
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
}

}  // namespace

TEST_CASE("no-train run on the fixture") {
    const auto cfg = base_config("pl_notrain");
    const auto r = tac::run_pipeline(cfg);
    REQUIRE(r.report);
    CHECK(r.report->acc >= 0.95);
    CHECK(r.assignments.size() == 600);
    for (const char* f : {"config.txt", "selection.tsv", "counterparts.tace", "assignments.txt", "metrics.txt"}) {
        CHECK(fs::exists(cfg.output_dir / f));
    }
    CHECK_FALSE(fs::exists(cfg.output_dir / "checkpoint.tack"));

    const auto hash = tac::config_hash(cfg);
    CHECK(hash.size() == 16);
    CHECK(r.report->config_hash == hash);
    CHECK(testing::slurp(cfg.output_dir / "config.txt").find(hash) != std::string::npos);
    CHECK(testing::slurp(cfg.output_dir / "selection.tsv").find(hash) != std::string::npos);
    CHECK(testing::slurp(cfg.output_dir / "metrics.txt").find(hash) != std::string::npos);
}

TEST_CASE("train run writes checkpoint and loss history") {
    const auto cfg = base_config("pl_train", tac::Mode::Train);
    const auto r = tac::run_pipeline(cfg);
    REQUIRE(r.report);
    CHECK(fs::exists(cfg.output_dir / "checkpoint.tack"));
    const auto loss = lines(cfg.output_dir / "loss.csv");
    CHECK(loss[0] == "# config_hash: " + tac::config_hash(cfg));
    CHECK(loss[1] == "step,dis,con,bal,total");
    CHECK(loss.size() == 2 + 10 * 5);  // 10 epochs of ceil(600 / 128) steps
}

TEST_CASE("config hash ignores the output directory only") {
    auto a = base_config("pl_hash_a");
    auto b = a;
    b.output_dir = "somewhere/else";
    CHECK(tac::config_hash(a) == tac::config_hash(b));
    b.text.gamma = 3;
    CHECK(tac::config_hash(a) != tac::config_hash(b));
    b = a;
    b.seed = 1;
    CHECK(tac::config_hash(a) != tac::config_hash(b));
}

TEST_CASE("eval of labels against themselves is perfect") {
    auto cfg = base_config("pl_eval", tac::Mode::Eval);
    cfg.predictions = fixture_manifest().parent_path() / "labels.txt";
    const auto r = tac::run_pipeline(cfg);
    REQUIRE(r.report);
    CHECK(r.report->acc == 1.0);
    CHECK(r.report->nmi == doctest::Approx(1.0));
    CHECK(r.report->ari == doctest::Approx(1.0));
}

TEST_CASE("missing inputs are stage-tagged format errors") {
    const auto dir = testing::scratch_dir("pl_missing");
    testing::write_text(dir / "m.txt", "name = x\nimages = gone.tace\nnouns = gone.txt\nK = 2\n");
    auto cfg = base_config("pl_missing_out");
    cfg.manifest = dir / "m.txt";
    try {
        tac::run_pipeline(cfg);
        FAIL("expected a format error");
    } catch (const tac::FormatError& e) {
        CHECK(std::string(e.what()).rfind("[load] ", 0) == 0);
    }
    CHECK(run_cli("cluster --manifest " + (dir / "m.txt").string() + " --out " + (dir / "o").string()) == 3);
}

TEST_CASE("parameter validation") {
    auto cfg = base_config("pl_params");
    cfg.text.gamma = 0;
    CHECK_THROWS_AS(tac::run_pipeline(cfg), tac::ParameterError);
    cfg = base_config("pl_params");
    cfg.distill.loss.tau_hat = -1;
    cfg.mode = tac::Mode::Train;
    CHECK_THROWS_AS(tac::run_pipeline(cfg), tac::ParameterError);
    CHECK_THROWS_AS(tac::parse_mode("fast"), tac::ParameterError);
    CHECK_THROWS_AS(tac::parse_sweep_axis("beta"), tac::ParameterError);
    CHECK(tac::parse_sweep_axis("n_tilde") == tac::SweepAxis::CompactClusterSize);
    CHECK_THROWS_AS(tac::with_axis_value(cfg, tac::SweepAxis::Gamma, 2.5), tac::ParameterError);
}

TEST_CASE("gamma sweep") {
    auto cfg = base_config("pl_sweep_gamma");
    const auto reports = tac::run_sweep(cfg, tac::SweepAxis::Gamma, {1, 3, 5, 10});
    CHECK(reports.size() == 4);
    const auto rows = lines(cfg.output_dir / "sweep.csv");
    REQUIRE(rows.size() == 5);
    CHECK(rows[0] == "run_id,axis,value," + tac::report_csv_header());
    for (std::size_t i = 1; i < rows.size(); ++i) {
        CHECK(rows[i].rfind(std::to_string(i - 1) + ",gamma,", 0) == 0);
        CHECK(fs::exists(cfg.output_dir / ("run_00" + std::to_string(i - 1)) / "metrics.txt"));
    }
    // Each run hashes its own configuration.
    CHECK(reports[0].config_hash != reports[1].config_hash);
    CHECK_THROWS_AS(tac::run_sweep(cfg, tac::SweepAxis::Gamma, {}), tac::ParameterError);
}

TEST_CASE("balance weight spreads the clusters") {
    auto cfg = base_config("pl_sweep_alpha", tac::Mode::Train);
    const auto reports = tac::run_sweep(cfg, tac::SweepAxis::Alpha, {0, 5});
    REQUIRE(reports.size() == 2);
    CHECK(reports[0].cluster_entropy < reports[1].cluster_entropy);
}

TEST_CASE("results do not depend on the thread count") {
    for (auto mode : {tac::Mode::NoTrain, tac::Mode::Train}) {
        tac::set_num_threads(1);
        const auto a = tac::run_pipeline(base_config("pl_threads_1", mode));
        tac::set_num_threads(4);
        const auto b = tac::run_pipeline(base_config("pl_threads_4", mode));
        tac::set_num_threads(1);
        CHECK(a.assignments == b.assignments);
    }
}

TEST_CASE("missing labels produce a warning, not an error") {
    const auto dir = testing::scratch_dir("pl_nolabels");
    const auto src = fixture_manifest().parent_path();
    testing::write_text(dir / "m.txt", "name = unlabeled\nimages = " + (src / "images.tace").string() +
                                           "\nnouns = " + (src / "nouns.txt").string() + "\nK = 3\n");
    auto cfg = base_config("pl_nolabels_out");
    cfg.manifest = dir / "m.txt";
    const auto r = tac::run_pipeline(cfg);
    CHECK_FALSE(r.report);
    CHECK(r.warnings.size() == 1);
    CHECK(fs::exists(cfg.output_dir / "assignments.txt"));
    CHECK_THROWS_AS(tac::run_sweep(cfg, tac::SweepAxis::Gamma, {1}), tac::DataError);
}

TEST_CASE("command line") {
    const auto out = testing::scratch_dir("cli");
    const auto m = fixture_manifest().string();
    CHECK(run_cli("--help") == 0);
    CHECK(run_cli("") == 2);
    CHECK(run_cli("cluster --manifest " + m + " --gamma abc") == 2);
    CHECK(run_cli("cluster --manifest " + m + " --n-tilde 50 --out " + (out / "a").string()) == 0);
    CHECK(fs::exists(out / "a" / "metrics.txt"));
    CHECK(run_cli("cluster --manifest " + m + " --gamma 0 --out " + (out / "b").string()) == 2);
    CHECK(run_cli("eval --pred " + (out / "a" / "assignments.txt").string() + " --manifest " + m + " --out " +
                  (out / "c").string()) == 0);
    CHECK(run_cli("sweep --manifest " + m + " --axis gamma --values 1,3 --n-tilde 50 --out " +
                  (out / "d").string()) == 0);
    CHECK(lines(out / "d" / "sweep.csv").size() == 3);
    CHECK(run_cli("synth --n 100 --out " + (out / "e").string()) == 0);
    CHECK(fs::exists(out / "e" / "manifest.txt"));
    CHECK(run_cli("cluster --manifest " + m + " --out " + (out / "f").string() +
                  " --mode train --epochs 1 --lr 1e300 --n-hat 5") == 8);
}
