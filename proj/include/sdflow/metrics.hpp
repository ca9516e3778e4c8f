#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "sdflow/particles.hpp"

namespace sdflow {

/// Random evaluation frequencies for the characteristic function distance.
/// Drawn once per experiment and reused across every method and condition
/// being compared, so CFD values are commensurable.
struct FrequencySet {
    Eigen::MatrixXd omegas;  // K x d
    Eigen::Index count() const { return omegas.rows(); }
    Eigen::Index dim() const { return omegas.cols(); }
};

FrequencySet make_frequency_set(int k, int dim, std::uint64_t seed);

/// Empirical characteristic function of a sample evaluated at the frequency
/// set, stored as paired cosine/sine means (no complex arithmetic needed).
struct EmpiricalCf {
    Eigen::VectorXd re;
    Eigen::VectorXd im;
};

EmpiricalCf empirical_cf(const ParticleSet& ps, const FrequencySet& freqs);

double cfd_between(const EmpiricalCf& a, const EmpiricalCf& b);

/// Mean absolute difference of the empirical characteristic functions over
/// the frequency set. Symmetric, in [0, 2], zero for identical samples.
double cfd(const ParticleSet& x, const ParticleSet& y, const FrequencySet& freqs);

/// Convergence threshold: the maximum CFD between two fresh independent
/// same-size draws of the target over the given number of trials.
/// Deterministic given the seed.
double calibrate_threshold(const Sampler& sampler, int n, int trials, const FrequencySet& freqs,
                           std::uint64_t seed);

/// Distance from each point of A to its nearest point of B (excluding the
/// same index when exclude_self, in which case A and B must be the same set).
std::vector<double> nn_distances(const ParticleSet& a, const ParticleSet& b, bool exclude_self);

struct ConvergenceVerdict {
    double min_cfd = 0.0;
    double threshold = 0.0;
    bool converged = false;  // min_cfd < threshold
    int step_of_min = 0;
};

}  // namespace sdflow
