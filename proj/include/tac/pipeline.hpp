#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tac/metrics.hpp"
#include "tac/text_space.hpp"
#include "tac/trainer.hpp"

namespace tac {

enum class Mode { NoTrain, Train, Eval, ZeroShot, SelectNouns, Counterpart };

const char* mode_name(Mode mode) noexcept;
/// Accepts notrain, train, eval, zeroshot, select-nouns, counterpart.
Mode parse_mode(const std::string& name);

/// Everything one run needs. Defaults are the reference hyperparameters.
struct RunConfig {
    std::filesystem::path manifest;
    Mode mode = Mode::NoTrain;
    std::filesystem::path output_dir = "tac_out";
    std::uint64_t seed = 0;

    TextSpaceConfig text;
    DistillConfig distill;
    ZeroShotConfig zero_shot;

    std::filesystem::path predictions;   // eval: assignments to score
    std::filesystem::path labels;        // eval: overrides the manifest labels
    std::filesystem::path class_names;   // zeroshot: one name per line, embeddings beside it
};

/// Throws ParameterError naming the first field outside its domain.
void validate_run_config(const RunConfig& cfg);

/// "key = value" lines for every field that affects results, in fixed order.
/// The output directory is excluded so reruns elsewhere hash identically.
std::string canonical_config(const RunConfig& cfg);

/// 16 hex digits of the 64-bit FNV-1a hash of canonical_config().
std::string config_hash(const RunConfig& cfg);

struct PipelineResult {
    std::vector<int> assignments;           // empty for select-nouns and counterpart
    std::optional<MetricsReport> report;    // present when labels were available
    std::vector<std::string> warnings;
    std::vector<std::filesystem::path> artifacts;
};

/// Runs one mode end to end and writes its artifacts into cfg.output_dir:
/// config.txt, selection.tsv, counterparts.tace, checkpoint.tack, loss.csv,
/// assignments.txt, prompts.txt, metrics.txt (each only where the mode makes
/// it). Module errors are rethrown with the failing stage as a "[stage] " tag.
PipelineResult run_pipeline(const RunConfig& cfg);

enum class SweepAxis { CompactClusterSize, Gamma, RetrievalTau, Neighbors, TauHat, Alpha };

/// Accepts n_tilde, gamma, tau_tilde, n_hat, tau_hat, alpha (and the long
/// forms compact_cluster_size, retrieval_tau, n_neighbors).
SweepAxis parse_sweep_axis(const std::string& name);
const char* sweep_axis_name(SweepAxis axis) noexcept;

/// Copy of `base` with one tunable replaced; integer axes reject fractions.
RunConfig with_axis_value(const RunConfig& base, SweepAxis axis, double value);

/// One full run per value (sequential, shared seed) in <output_dir>/run_<id>,
/// results appended to <output_dir>/sweep.csv with columns
/// run_id, axis, value, then the report fields. Needs labels.
std::vector<MetricsReport> run_sweep(const RunConfig& base, SweepAxis axis, const std::vector<double>& values);

}  // namespace tac
