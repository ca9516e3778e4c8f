#include "sdflow/flows.hpp"

#include <cmath>
#include <stdexcept>

namespace sdflow {

FlowKind flow_kind_from_string(const std::string& name) {
    if (name == "kernel_sd" || name == "sd") return FlowKind::KernelSD;
    if (name == "mmd") return FlowKind::MMD;
    if (name == "mmd_normalized") return FlowKind::MMDNormalized;
    if (name == "svgd") return FlowKind::SVGD;
    if (name == "analytic_sd") return FlowKind::AnalyticSD;
    if (name == "diffusion_step") return FlowKind::DiffusionStep;
    throw std::invalid_argument("unknown flow method: " + name);
}

std::string to_string(FlowKind kind) {
    switch (kind) {
        case FlowKind::KernelSD: return "kernel_sd";
        case FlowKind::MMD: return "mmd";
        case FlowKind::MMDNormalized: return "mmd_normalized";
        case FlowKind::SVGD: return "svgd";
        case FlowKind::AnalyticSD: return "analytic_sd";
        case FlowKind::DiffusionStep: return "diffusion_step";
    }
    throw std::invalid_argument("unknown flow kind");
}

namespace detail {

// Fills `out` with scale * ||z_i - d_j||^2. The matrices involved are large
// and this sits in every flow's inner loop, so `out` is caller-provided
// scratch (reused across iterations; repeated mmap page faults from fresh
// 8 MB allocations otherwise dominate the runtime).
static void scaled_sq_dists(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double scale,
                            Eigen::MatrixXd& out) {
    const Eigen::Index na = a.rows(), nb = b.rows(), dim = a.cols();
    out.resize(na, nb);
    if (dim <= 8) {
        for (Eigen::Index j = 0; j < nb; ++j) {
            auto col = out.col(j).array();
            col = (a.col(0).array() - b(j, 0)).square();
            for (Eigen::Index k = 1; k < dim; ++k)
                col += (a.col(k).array() - b(j, k)).square();
            col *= scale;
        }
        return;
    }
    const Eigen::VectorXd an = a.rowwise().squaredNorm();
    const Eigen::VectorXd bn = b.rowwise().squaredNorm();
    out.noalias() = a * b.transpose();
    for (Eigen::Index j = 0; j < nb; ++j)
        out.col(j) = (an.array() - 2.0 * out.col(j).array() + bn(j)).cwiseMax(0.0) * scale;
}

Eigen::MatrixXd sq_dists_fast(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    Eigen::MatrixXd d;
    scaled_sq_dists(a, b, 1.0, d);
    return d;
}

Eigen::MatrixXd kernel_weighted_mean(const Eigen::MatrixXd& z, const Eigen::MatrixXd& data,
                                     double sigma2) {
    thread_local Eigen::MatrixXd e;
    scaled_sq_dists(z, data, -0.5 / sigma2, e);
    const Eigen::VectorXd shift = e.rowwise().maxCoeff();
    // row max becomes exp(0) = 1, so row sums are >= 1 and never normalize 0/0
    for (Eigen::Index j = 0; j < e.cols(); ++j)
        e.col(j) = (e.col(j) - shift).array().exp();
    const Eigen::VectorXd sums = e.rowwise().sum();
    Eigen::MatrixXd out = e * data;
    out.array().colwise() /= sums.array();
    return out;
}

}  // namespace detail

static void check_flow_inputs(const ParticleSet& z, const ParticleSet& target,
                              const ParticleSet& source, double sigma2) {
    if (target.empty() || source.empty())
        throw std::invalid_argument("flow update: target and source must be non-empty");
    if (z.dim() != target.dim() || z.dim() != source.dim())
        throw std::invalid_argument("flow update: dimension mismatch");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("flow update: sigma2 must be positive");
}

Eigen::MatrixXd denoiser(const ParticleSet& z, const ParticleSet& data, double sigma2) {
    if (data.empty()) throw std::invalid_argument("denoiser: data must be non-empty");
    if (z.dim() != data.dim()) throw std::invalid_argument("denoiser: dimension mismatch");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("denoiser: sigma2 must be positive");
    return detail::kernel_weighted_mean(z.points(), data.points(), sigma2);
}

Eigen::MatrixXd sd_update(const ParticleSet& z, const ParticleSet& target,
                          const ParticleSet& source, double sigma2) {
    check_flow_inputs(z, target, source, sigma2);
    return detail::kernel_weighted_mean(z.points(), target.points(), sigma2) -
           detail::kernel_weighted_mean(z.points(), source.points(), sigma2);
}

Eigen::MatrixXd mmd_update(const ParticleSet& z, const ParticleSet& target,
                           const ParticleSet& source, double sigma2, bool normalized) {
    check_flow_inputs(z, target, source, sigma2);
    if (normalized) return 0.5 * sd_update(z, target, source, sigma2);

    const Eigen::MatrixXd& zp = z.points();
    thread_local Eigen::MatrixXd w;
    auto side = [&](const Eigen::MatrixXd& data) -> Eigen::MatrixXd {
        detail::scaled_sq_dists(zp, data, -0.5 / sigma2, w);
        w = w.array().exp();
        Eigen::MatrixXd term = w * data;
        term -= w.rowwise().sum().asDiagonal() * zp;
        return term / (static_cast<double>(data.rows()) * sigma2);
    };
    return side(target.points()) - side(source.points());
}

Eigen::MatrixXd svgd_update(const ParticleSet& z, const ScoreFunction& score_p, double sigma2) {
    if (z.empty()) throw std::invalid_argument("svgd_update: empty particle set");
    if (!(sigma2 > 0.0)) throw std::invalid_argument("svgd_update: sigma2 must be positive");
    const Eigen::Index n = z.count(), d = z.dim();
    Eigen::MatrixXd scores(n, d);
    for (Eigen::Index j = 0; j < n; ++j) {
        Eigen::VectorXd s = score_p(z.point(j));
        if (s.size() != d) throw std::invalid_argument("svgd_update: score dimension mismatch");
        scores.row(j) = s.transpose();
    }
    thread_local Eigen::MatrixXd w;
    detail::scaled_sq_dists(z.points(), z.points(), -0.5 / sigma2, w);
    w = w.array().exp();
    // (1/N) [ W scores + (rowsum(W) z - W z) / sigma2 ]
    Eigen::MatrixXd repulsion = w.rowwise().sum().asDiagonal() * z.points() - w * z.points();
    return (w * scores + repulsion / sigma2) / static_cast<double>(n);
}

Eigen::MatrixXd analytic_sd_update(const ParticleSet& z, const ScoreFunction& score_p,
                                   const ScoreFunction& score_q) {
    const Eigen::Index n = z.count(), d = z.dim();
    Eigen::MatrixXd out(n, d);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd p = score_p(z.point(i));
        const Eigen::VectorXd q = score_q(z.point(i));
        if (p.size() != d || q.size() != d)
            throw std::invalid_argument("analytic_sd_update: score dimension mismatch");
        out.row(i) = (p - q).transpose();
    }
    return out;
}

Eigen::VectorXd diffusion_step(const Eigen::VectorXd& y, const ParticleSet& data,
                               double sigma2_t, double sigma2_s,
                               const Eigen::VectorXd& noise_eps) {
    if (!(sigma2_t > 0.0)) throw std::invalid_argument("diffusion_step: sigma2_t must be positive");
    if (sigma2_s < 0.0 || sigma2_s > sigma2_t)
        throw std::invalid_argument(
            "diffusion_step: need 0 <= sigma2_s <= sigma2_t (reverse process decreases variance)");
    if (noise_eps.size() != y.size() || data.dim() != y.size())
        throw std::invalid_argument("diffusion_step: dimension mismatch");
    const double rho = 1.0 - sigma2_s / sigma2_t;
    const Eigen::MatrixXd z = (y + std::sqrt(sigma2_t) * noise_eps).transpose();
    const Eigen::MatrixXd den = detail::kernel_weighted_mean(z, data.points(), sigma2_t);
    return (1.0 - rho) * y + rho * den.row(0).transpose();
}

}  // namespace sdflow
