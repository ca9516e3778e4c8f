#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "sdflow/flows.hpp"
#include "sdflow/particles.hpp"
#include "sdflow/schedules.hpp"
#include "sdflow/targets.hpp"

namespace sdflow {

/// Linear generator y = B_hat xi + mu_hat.
struct LinearGenerator {
    Eigen::MatrixXd b_hat;   // d_out x d_in
    Eigen::VectorXd mu_hat;  // d_out

    Eigen::Index d_out() const { return b_hat.rows(); }
    Eigen::Index d_in() const { return b_hat.cols(); }
};

/// B_hat entries ~ N(0, 0.01), mu_hat = 0.
LinearGenerator init_linear_generator(int d_out, int d_in, std::uint64_t seed);

/// Rowwise map of latents (m x d_in) through the generator.
ParticleSet generate(const LinearGenerator& g, const Eigen::MatrixXd& latents);

/// One batch-mean least-squares step toward the regression targets:
/// with R = g(latents) - targets, B_hat -= lambda/m sum_i R_i xi_i^T and
/// mu_hat -= lambda/m sum_i R_i.
void regress_step(LinearGenerator& g, const Eigen::MatrixXd& latents, const ParticleSet& targets,
                  double lambda);

struct ModelOptRow {
    int step = 0;
    double cfd = 0.0;
    double sigma2 = 0.0;
    double eta = 0.0;
    double mean_displacement = 0.0;
};

struct ModelOptResult {
    LinearGenerator generator;
    std::vector<ModelOptRow> trace;
    ParticleSet final_sample;  // generator output for the last latent batch
};

/// Model optimization: per step, draw a fresh target batch and latent batch,
/// generate, perturb the generated points along the configured flow at the
/// scheduled noise level, and regress the perturbed points on the latents.
/// Deterministic given the seed.
ModelOptResult model_opt_loop(const TargetModel& target, LinearGenerator g0,
                              const FlowMethod& flow, const ScheduleSpec& schedule,
                              double lambda, int batch, int steps, std::uint64_t seed);

}  // namespace sdflow
