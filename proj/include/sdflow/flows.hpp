#pragma once

#include <functional>
#include <string>

#include <Eigen/Dense>

#include "sdflow/particles.hpp"

namespace sdflow {

/// Map from a point to the gradient of a log-density at that point.
using ScoreFunction = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

enum class FlowKind { KernelSD, MMD, MMDNormalized, SVGD, AnalyticSD, DiffusionStep };

struct FlowMethod {
    FlowKind kind = FlowKind::KernelSD;
    // DiffusionStep only: variance after the step. Negative means the caller
    // (harness) derives it from the noise schedule.
    double diffusion_sigma2_s = -1.0;
};

FlowKind flow_kind_from_string(const std::string& name);
std::string to_string(FlowKind kind);

/// Kernel-weighted mean of `data` evaluated at each row of z: the empirical
/// optimal denoiser D*(z; sigma). Rows are normalized with a max-shifted
/// exponent, so the result is finite for any separation and always lies in
/// the convex hull of the data.
Eigen::MatrixXd denoiser(const ParticleSet& z, const ParticleSet& data, double sigma2);

/// Difference of kernel-weighted means: denoiser(z, target) - denoiser(z, source).
/// The caller applies the step size; no 1/sigma2 scaling is included.
Eigen::MatrixXd sd_update(const ParticleSet& z, const ParticleSet& target,
                          const ParticleSet& source, double sigma2);

/// Witness-function descent direction. Raw mode uses unnormalized kernel
/// weights (1/N, 1/M scaling); normalized mode rescales each side's weights to
/// sum to 1/2, which cancels the z term and reduces to sd_update / 2 exactly.
Eigen::MatrixXd mmd_update(const ParticleSet& z, const ParticleSet& target,
                           const ParticleSet& source, double sigma2, bool normalized);

/// phi(z_i) = (1/N) sum_j [ score_p(z_j) K(z_i, z_j) + K(z_i, z_j)(z_i - z_j)/sigma2 ],
/// the expectation taken over the particle set itself.
Eigen::MatrixXd svgd_update(const ParticleSet& z, const ScoreFunction& score_p, double sigma2);

/// score_p(z) - score_q(z), rowwise.
Eigen::MatrixXd analytic_sd_update(const ParticleSet& z, const ScoreFunction& score_p,
                                   const ScoreFunction& score_q);

/// One reverse-process step: y <- (1 - rho) y + rho D*(y + sigma_t eps; sigma_t)
/// with rho = 1 - sigma2_s / sigma2_t. Requires 0 <= sigma2_s <= sigma2_t.
Eigen::VectorXd diffusion_step(const Eigen::VectorXd& y, const ParticleSet& data,
                               double sigma2_t, double sigma2_s,
                               const Eigen::VectorXd& noise_eps);

namespace detail {
/// Squared distances via the inner-product expansion, clamped at zero.
/// Faster than the exact column accumulation for wide data; used inside the
/// kernel-weighted means where an exactly zero diagonal is not required.
Eigen::MatrixXd sq_dists_fast(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Row-stochastic kernel weight matrix W (max-shifted softmax of
/// -D/(2 sigma2)) applied to data: returns W * data.
Eigen::MatrixXd kernel_weighted_mean(const Eigen::MatrixXd& z, const Eigen::MatrixXd& data,
                                     double sigma2);
}  // namespace detail

}  // namespace sdflow
