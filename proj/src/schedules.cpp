#include "sdflow/schedules.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sdflow {

void validate(const ScheduleSpec& spec) {
    if (!(spec.sigma2_max > 0.0))
        throw std::invalid_argument("ScheduleSpec: sigma2_max must be positive");
    if (spec.kind == ScheduleKind::Cosine &&
        !(spec.sigma2_min > 0.0 && spec.sigma2_min <= spec.sigma2_max))
        throw std::invalid_argument("ScheduleSpec: need 0 < sigma2_min <= sigma2_max");
    if (!(spec.eta > 0.0)) throw std::invalid_argument("ScheduleSpec: eta must be positive");
    if (spec.total_steps < 1) throw std::invalid_argument("ScheduleSpec: total_steps must be >= 1");
}

static void check_step(const ScheduleSpec& spec, int step) {
    if (step < 0 || step >= spec.total_steps)
        throw std::invalid_argument("schedule: step index out of range");
}

double noise_at(const ScheduleSpec& spec, int step) {
    check_step(spec, step);
    if (spec.kind == ScheduleKind::Constant) return spec.sigma2_max;
    const double t_max = (2.0 / std::numbers::pi) * std::acos(spec.sigma2_min / spec.sigma2_max);
    const double t = spec.total_steps == 1
                         ? 0.0
                         : t_max * static_cast<double>(step) / static_cast<double>(spec.total_steps - 1);
    return spec.sigma2_max * std::cos(std::numbers::pi * t / 2.0);
}

double step_at(const ScheduleSpec& spec, int step) {
    check_step(spec, step);
    return spec.eta;
}

}  // namespace sdflow
