#include "sdflow/optimizers.hpp"

#include <stdexcept>

namespace sdflow {

OptimizerState make_optimizer(OptimizerKind kind, Eigen::Index n, Eigen::Index d, double epsilon,
                              double decay) {
    if (!(epsilon > 0.0)) throw std::invalid_argument("make_optimizer: epsilon must be positive");
    if (decay < 0.0 || decay >= 1.0)
        throw std::invalid_argument("make_optimizer: decay must be in [0, 1)");
    OptimizerState s;
    s.kind = kind;
    s.epsilon = epsilon;
    s.decay = decay;
    if (kind == OptimizerKind::AdaGrad) s.accumulator = Eigen::MatrixXd::Zero(n, d);
    return s;
}

static void update_row(OptimizerState& state, Eigen::MatrixXd& y, int row,
                       const Eigen::RowVectorXd& g, double eta) {
    if (state.kind == OptimizerKind::SGD) {
        y.row(row) += eta * g;
        return;
    }
    auto acc = state.accumulator.row(row);
    const Eigen::RowVectorXd g2 = g.array().square();
    if (state.decay == 0.0) {
        acc += g2;
    } else if (acc.isZero(0.0)) {
        acc = g2;
    } else {
        acc = state.decay * acc + (1.0 - state.decay) * g2;
    }
    y.row(row).array() += eta * g.array() / (acc.array().sqrt() + state.epsilon);
}

void apply_step(OptimizerState& state, Eigen::MatrixXd& y, const Eigen::MatrixXd& direction,
                double eta) {
    if (y.rows() != direction.rows() || y.cols() != direction.cols())
        throw std::invalid_argument("apply_step: shape mismatch");
    if (state.kind == OptimizerKind::AdaGrad &&
        (state.accumulator.rows() != y.rows() || state.accumulator.cols() != y.cols()))
        throw std::invalid_argument("apply_step: accumulator shape mismatch");
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        update_row(state, y, static_cast<int>(i), direction.row(i), eta);
}

void apply_step_rows(OptimizerState& state, Eigen::MatrixXd& y, const std::vector<int>& rows,
                     const Eigen::MatrixXd& direction, double eta) {
    if (static_cast<Eigen::Index>(rows.size()) != direction.rows() || y.cols() != direction.cols())
        throw std::invalid_argument("apply_step_rows: shape mismatch");
    if (state.kind == OptimizerKind::AdaGrad &&
        (state.accumulator.rows() != y.rows() || state.accumulator.cols() != y.cols()))
        throw std::invalid_argument("apply_step_rows: accumulator shape mismatch");
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= y.rows())
            throw std::invalid_argument("apply_step_rows: row index out of range");
        update_row(state, y, rows[i], direction.row(static_cast<Eigen::Index>(i)), eta);
    }
}

}  // namespace sdflow
