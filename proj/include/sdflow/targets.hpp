#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include <Eigen/Dense>

#include "sdflow/flows.hpp"
#include "sdflow/particles.hpp"

namespace sdflow {

/// Equal-or-weighted mixture of isotropic Gaussians.
struct GaussianMixtureSpec {
    Eigen::VectorXd weights;   // simplex (sums to 1)
    Eigen::MatrixXd means;     // K x d
    Eigen::VectorXd variances; // per-component sigma^2_k

    Eigen::Index components() const { return weights.size(); }
    Eigen::Index dim() const { return means.cols(); }
    void validate() const;
};

Eigen::VectorXd mixture_mean(const GaussianMixtureSpec& spec);
double mixture_log_density(const GaussianMixtureSpec& spec, const Eigen::VectorXd& z);

/// Responsibility-weighted score sum_k r_k(z) (mu_k - z) / sigma2_k with
/// log-sum-exp stabilized responsibilities.
Eigen::VectorXd mixture_score(const GaussianMixtureSpec& spec, const Eigen::VectorXd& z);

/// Component chosen by inverse CDF on the weights from a single uniform draw,
/// then isotropic Gaussian noise around its mean.
ParticleSet sample_mixture(const GaussianMixtureSpec& spec, int n, std::uint64_t seed);

/// x = B xi + mu with xi ~ N(0, I).
struct LinearModelSpec {
    Eigen::MatrixXd b;   // d_out x d_in
    Eigen::VectorXd mu;  // d_out
};

/// A named distribution with a seeded sampler, an optional analytic score,
/// and the generative parameters behind it.
struct TargetModel {
    std::string name;
    int dim = 0;
    Sampler sampler;
    std::optional<ScoreFunction> score;
    std::optional<GaussianMixtureSpec> mixture;
    std::optional<LinearModelSpec> linear;
    Eigen::VectorXd mean;             // analytic mean
    double first_axis_extent = 0.0;   // max |x0 - mean_x0| over the component/curve skeleton
};

using Sampler = std::function<ParticleSet(int, std::uint64_t)>;

/// 5x5 grid of spherical Gaussians in R^2: centers {-4,-2,0,2,4}^2,
/// equal weights, component sigma = 0.2.
TargetModel gaussian_grid_25();

/// 30 spherical Gaussians in R^3 with sigma = 0.2, centers on the frozen
/// question-mark table below (hook arc, stem, dot, with a gentle depth twist).
TargetModel mystery_mixture_30();

/// Swiss roll in R^3: points s * (t cos t, h, t sin t), t ~ U[1.5 pi, 4.5 pi],
/// h ~ U[0, 10], scale s = 0.5.
TargetModel swiss_roll_target();

/// Random linear-Gaussian model in R^50 with 25 latent dimensions:
/// B entries ~ N(0, 0.25), mu entries ~ N(10, 1), x = B xi + mu.
TargetModel linear_gaussian_model(std::uint64_t seed);

/// Registry lookup by name: grid25, mystery30, swissroll, linear50.
/// model_seed is used only by targets that are themselves randomly generated.
TargetModel make_target(const std::string& name, std::uint64_t model_seed = 0);

/// Spherical Gaussian (sigma = 1) base sample centered at the target mean,
/// displaced by 1.5 * first_axis_extent along the first axis when offset.
ParticleSet offset_gaussian_base(const TargetModel& target, bool offset, int n,
                                 std::uint64_t seed);

/// Human-readable key-value dump of the target's generative parameters.
void save_spec(const TargetModel& target, const std::filesystem::path& path);

}  // namespace sdflow
