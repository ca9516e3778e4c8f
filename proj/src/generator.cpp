#include "sdflow/generator.hpp"

#include <cmath>
#include <stdexcept>

#include "sdflow/metrics.hpp"
#include "sdflow/rng.hpp"

namespace sdflow {

LinearGenerator init_linear_generator(int d_out, int d_in, std::uint64_t seed) {
    if (d_out < 1 || d_in < 1)
        throw std::invalid_argument("init_linear_generator: dimensions must be >= 1");
    Rng rng(derive_seed(seed, SeedStream::ModelInit));
    LinearGenerator g;
    g.b_hat = 0.1 * rng.normal_matrix(d_out, d_in);  // variance 0.01
    g.mu_hat = Eigen::VectorXd::Zero(d_out);
    return g;
}

ParticleSet generate(const LinearGenerator& g, const Eigen::MatrixXd& latents) {
    if (latents.cols() != g.d_in())
        throw std::invalid_argument("generate: latent dimension mismatch");
    Eigen::MatrixXd out = latents * g.b_hat.transpose();
    out.rowwise() += g.mu_hat.transpose();
    return ParticleSet(std::move(out));
}

void regress_step(LinearGenerator& g, const Eigen::MatrixXd& latents, const ParticleSet& targets,
                  double lambda) {
    if (latents.cols() != g.d_in() || targets.dim() != g.d_out() ||
        targets.count() != latents.rows())
        throw std::invalid_argument("regress_step: shape mismatch");
    const double m = static_cast<double>(latents.rows());
    Eigen::MatrixXd residual = latents * g.b_hat.transpose();
    residual.rowwise() += g.mu_hat.transpose();
    residual -= targets.points();
    g.b_hat -= (lambda / m) * residual.transpose() * latents;
    g.mu_hat -= (lambda / m) * residual.colwise().sum().transpose();
}

// Diagonal-Gaussian score fitted to the sample by moments; variance floored
// to keep the score finite for degenerate (near-point-mass) samples.
static ScoreFunction fitted_diagonal_score(const ParticleSet& ps) {
    const Eigen::VectorXd mean = ps.points().colwise().mean().transpose();
    Eigen::VectorXd var =
        (ps.points().rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
    var = var.cwiseMax(1e-12);
    return [mean, var](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return (mean - z).array() / var.array();
    };
}

ModelOptResult model_opt_loop(const TargetModel& target, LinearGenerator g0,
                              const FlowMethod& flow, const ScheduleSpec& schedule,
                              double lambda, int batch, int steps, std::uint64_t seed) {
    if (batch < 1) throw std::invalid_argument("model_opt_loop: batch must be >= 1");
    if (steps < 0) throw std::invalid_argument("model_opt_loop: steps must be >= 0");
    if (g0.d_out() != target.dim)
        throw std::invalid_argument("model_opt_loop: generator output dimension mismatch");
    if (flow.kind == FlowKind::DiffusionStep)
        throw std::invalid_argument("model_opt_loop: diffusion_step is not a model-opt flow");
    if ((flow.kind == FlowKind::SVGD || flow.kind == FlowKind::AnalyticSD) && !target.score)
        throw std::invalid_argument("model_opt_loop: " + to_string(flow.kind) +
                                    " needs a target with an analytic score");
    validate(schedule);

    ModelOptResult result;
    result.generator = std::move(g0);
    const int d_out = static_cast<int>(result.generator.d_out());
    const int d_in = static_cast<int>(result.generator.d_in());
    const FrequencySet freqs =
        make_frequency_set(256, d_out, derive_seed(seed, SeedStream::Frequencies));

    Eigen::MatrixXd last_latents;
    for (int t = 0; t < steps; ++t) {
        const ParticleSet x = target.sampler(batch, derive_seed(seed, SeedStream::TargetSample, t));
        Rng latent_rng(derive_seed(seed, SeedStream::Latent, t));
        const Eigen::MatrixXd xi = latent_rng.normal_matrix(batch, d_in);
        const ParticleSet y = generate(result.generator, xi);

        const double s2 = noise_at(schedule, t);
        const double eta = step_at(schedule, t);

        Rng noise_rng(derive_seed(seed, SeedStream::Noise, t));
        ParticleSet z(y.points() + std::sqrt(s2) * noise_rng.normal_matrix(batch, d_out));

        Eigen::MatrixXd dir;
        switch (flow.kind) {
            case FlowKind::KernelSD: dir = sd_update(z, x, y, s2); break;
            case FlowKind::MMD: dir = mmd_update(z, x, y, s2, false); break;
            case FlowKind::MMDNormalized: dir = mmd_update(z, x, y, s2, true); break;
            case FlowKind::SVGD: dir = svgd_update(z, *target.score, s2); break;
            case FlowKind::AnalyticSD:
                dir = analytic_sd_update(z, *target.score, fitted_diagonal_score(y));
                break;
            default: throw std::invalid_argument("model_opt_loop: unsupported flow");
        }

        ModelOptRow row;
        row.step = t;
        row.cfd = cfd(x, y, freqs);
        row.sigma2 = s2;
        row.eta = eta;
        row.mean_displacement = eta * dir.rowwise().norm().mean();

        const ParticleSet perturbed(y.points() + eta * dir);
        regress_step(result.generator, xi, perturbed, lambda);
        result.trace.push_back(row);
        last_latents = xi;
    }
    if (steps > 0)
        result.final_sample = generate(result.generator, last_latents);
    return result;
}

}  // namespace sdflow
