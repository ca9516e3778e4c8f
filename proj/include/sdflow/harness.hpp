#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdflow/config.hpp"
#include "sdflow/metrics.hpp"
#include "sdflow/particles.hpp"
#include "sdflow/targets.hpp"

namespace sdflow {

struct RunRow {
    int step = 0;
    double cfd = 0.0;
    double sigma2 = 0.0;
    double eta = 0.0;
    double mean_displacement = 0.0;
};

/// Everything a finished run produced. CSV serializations of this record are
/// byte-deterministic; wall_seconds is reported on stdout only.
struct RunRecord {
    std::vector<RunRow> rows;              // one row per iteration, state before that step
    ConvergenceVerdict verdict;
    ParticleSet final_particles;
    std::vector<std::pair<int, ParticleSet>> snapshots;
    ExperimentConfig config;
    double wall_seconds = 0.0;
    // Mean ||D*(z; source) - y|| over kernel-SD iterations; diagnoses how far
    // the source denoiser sits from the clean particles it stands in for.
    double mean_denoiser_residual = 0.0;
};

/// Shared per-experiment state: one target, one frequency set, one threshold,
/// reused across every run being compared. The optional overrides let callers
/// pin the exact target sample and initial particles.
struct ExperimentContext {
    TargetModel target;
    FrequencySet freqs;
    double threshold = 0.0;
    std::optional<ParticleSet> target_sample;
    std::optional<ParticleSet> initial_base;
};

ExperimentContext make_context(const ExperimentConfig& cfg);

RunRecord run_particle_experiment(const ExperimentConfig& cfg);
RunRecord run_particle_experiment(const ExperimentConfig& cfg, const ExperimentContext& ctx);

void write_run_outputs(const RunRecord& record, const std::filesystem::path& dir);

struct CellResult {
    std::vector<double> min_cfds;  // one per trial
    double avg_min_cfd = 0.0;
    bool all_converged = false;
    bool majority_converged = false;
    std::string error;  // non-empty if any trial failed to execute
};

struct ConditionTable {
    // adagrad, batch, const_noise, anneal, offset
    std::vector<std::array<bool, 5>> conditions;
    bool vary_offset = false;
    std::vector<FlowKind> methods;
    std::vector<std::vector<CellResult>> cells;  // [condition][method]
    double threshold = 0.0;
};

/// Runs trials for every (condition, method) cell with derived seeds shared
/// across cells, so methods see identical data draws per trial. Cells execute
/// concurrently on up to `jobs` threads; failures are recorded per cell.
ConditionTable run_condition_table(const ExperimentConfig& base,
                                   const std::vector<FlowKind>& methods, int trials,
                                   bool vary_offset, int jobs);

void write_table_csv(const ConditionTable& table, const std::filesystem::path& path);

struct InterpolationResult {
    RunRecord record;
    std::vector<std::pair<int, ParticleSet>> snapshots;
};

/// Initializes particles as a draw from `source` and flows them toward a
/// sample of `dest`; convergence is judged by dest's self-calibrated
/// threshold. Swap the arguments for the reverse direction.
InterpolationResult run_interpolation(const TargetModel& source, const TargetModel& dest, int n,
                                      const ExperimentConfig& cfg);

/// Diagonal-Gaussian score fitted to the sample by moments.
ScoreFunction moment_gaussian_score(const ParticleSet& ps);

}  // namespace sdflow
