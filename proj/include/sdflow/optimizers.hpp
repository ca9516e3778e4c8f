#pragma once

#include <vector>

#include <Eigen/Dense>

namespace sdflow {

enum class OptimizerKind { SGD, AdaGrad };

/// Per-particle optimizer state. The AdaGrad accumulator is keyed to particle
/// index; particles are never reordered during a run.
///
/// decay == 0 is plain AdaGrad (accumulator += direction^2). decay in (0, 1)
/// switches to the exponential accumulator used by the reference SVGD release:
/// a fresh (all-zero) row is initialized to direction^2, afterwards
/// accumulator = decay * accumulator + (1 - decay) * direction^2.
struct OptimizerState {
    OptimizerKind kind = OptimizerKind::SGD;
    Eigen::MatrixXd accumulator;  // N x d, AdaGrad only
    double epsilon = 1e-6;
    double decay = 0.0;
};

OptimizerState make_optimizer(OptimizerKind kind, Eigen::Index n, Eigen::Index d,
                              double epsilon = 1e-6, double decay = 0.0);

/// y += eta * direction (SGD) or the AdaGrad-scaled equivalent, in place.
void apply_step(OptimizerState& state, Eigen::MatrixXd& y, const Eigen::MatrixXd& direction,
                double eta);

/// Applies the update to the given particle rows only; direction has one row
/// per entry of `rows`. Accumulator rows for untouched particles are unchanged.
void apply_step_rows(OptimizerState& state, Eigen::MatrixXd& y, const std::vector<int>& rows,
                     const Eigen::MatrixXd& direction, double eta);

}  // namespace sdflow
