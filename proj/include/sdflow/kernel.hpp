#pragma once

#include <Eigen/Dense>

#include "sdflow/particles.hpp"

namespace sdflow {

/// Squared bandwidth / noise variance of the Gaussian kernel.
struct KernelConfig {
    double sigma2 = 1.0;
};

/// K(z, x) = exp(-||z - x||^2 / (2 sigma2)). Symmetric, in (0, 1].
double gaussian_kernel(const Eigen::VectorXd& z, const Eigen::VectorXd& x, double sigma2);

/// Entry (i, j) = ||a_i - b_j||^2. Computed from coordinate differences, so
/// the diagonal is exactly zero when both arguments are the same set.
Eigen::MatrixXd pairwise_sq_dists(const ParticleSet& a, const ParticleSet& b);

/// Bandwidth heuristic: sigma2 = 2 * median[D^2(y, y')] / ln(N + 1), with the
/// median taken over off-diagonal pairs only and natural log throughout.
/// The even-length median is the mean of the two central elements.
double median_bandwidth(const ParticleSet& y);

/// Median of a copy of the values (even length averages the central pair).
double median_of(std::vector<double> values);

}  // namespace sdflow
