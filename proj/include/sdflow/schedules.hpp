#pragma once

namespace sdflow {

enum class ScheduleKind { Constant, Cosine };

/// Noise-variance and step-size schedules indexed by iteration.
/// Constant returns sigma2_max at every step. Cosine maps the step index
/// linearly onto t in [0, t_max] with t_max = (2/pi) acos(sigma2_min/sigma2_max)
/// and evaluates sigma2(t) = sigma2_max * cos(pi t / 2), so the first step is
/// sigma2_max and the last is sigma2_min.
struct ScheduleSpec {
    ScheduleKind kind = ScheduleKind::Constant;
    double sigma2_max = 1.0;
    double sigma2_min = 1.0;
    double eta = 0.1;
    int total_steps = 1;
};

void validate(const ScheduleSpec& spec);

double noise_at(const ScheduleSpec& spec, int step);

/// Step-size schedule; constant eta in this artifact.
double step_at(const ScheduleSpec& spec, int step);

}  // namespace sdflow
