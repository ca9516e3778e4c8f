#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "sdflow/flows.hpp"

namespace sdflow {

/// Full description of one particle-optimization run. All seeds are explicit;
/// nothing is seeded from the clock.
struct ExperimentConfig {
    FlowMethod method;
    std::string target = "grid25";
    bool offset = true;
    int n_particles = 1024;
    int iterations = 1000;

    // condition flags
    bool adagrad = false;
    bool batch = false;
    bool const_noise = false;
    // Annealing evaluates the kernel flows at noise-injected points
    // z = y + sigma(t) eps while the update applies to the clean particles.
    // SVGD and the analytic flow always evaluate at clean particles; the
    // reverse-process step is defined on the noisy point and always injects.
    bool anneal = true;

    int batch_size = 128;
    double eta = 0.1;
    double sigma2_max = 10.0;
    double sigma2_min = 0.5;

    double adagrad_epsilon = 1e-6;
    // Accumulator variant for the ADAGRAD condition: 0 = cumulative AdaGrad,
    // in (0,1) = the exponential accumulator used by the reference SVGD
    // release. The cumulative variant freezes once early gradients are large,
    // so experiment runs default to the exponential one.
    double adagrad_decay = 0.9;

    std::uint64_t seed_data = 1;
    std::uint64_t seed_noise = 2;
    std::uint64_t seed_frequency = 3;
    std::uint64_t seed_model = 7;  // used only by generated targets (linear50)

    int cfd_frequencies = 256;
    double threshold = -1.0;      // negative: self-calibrate
    int calibration_trials = 1000;

    std::vector<int> snapshots;   // steps at which to dump particles_<step>.csv
    std::string output_dir;

    void validate() const;
};

/// Key-value config file with [section] headers, '#' comments, and key = value
/// lines. Unknown keys are errors.
ExperimentConfig parse_config_file(const std::filesystem::path& path);
void write_config(const ExperimentConfig& cfg, const std::filesystem::path& path);

}  // namespace sdflow
