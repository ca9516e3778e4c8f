#include "sdflow/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "sdflow/kernel.hpp"
#include "sdflow/optimizers.hpp"
#include "sdflow/rng.hpp"
#include "sdflow/schedules.hpp"

namespace sdflow {

ScoreFunction moment_gaussian_score(const ParticleSet& ps) {
    const Eigen::VectorXd mean = ps.points().colwise().mean().transpose();
    Eigen::VectorXd var =
        (ps.points().rowwise() - mean.transpose()).array().square().colwise().mean().transpose();
    var = var.cwiseMax(1e-12);
    return [mean, var](const Eigen::VectorXd& z) -> Eigen::VectorXd {
        return (mean - z).array() / var.array();
    };
}

static void check_method_compatibility(const ExperimentConfig& cfg, const TargetModel& target) {
    const FlowKind k = cfg.method.kind;
    if ((k == FlowKind::SVGD || k == FlowKind::AnalyticSD) && !target.score)
        throw std::invalid_argument("config: " + to_string(k) + " requires a target (" +
                                    target.name + ") with an analytic score");
}

ExperimentContext make_context(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentContext ctx;
    ctx.target = make_target(cfg.target, cfg.seed_model);
    check_method_compatibility(cfg, ctx.target);
    ctx.freqs = make_frequency_set(cfg.cfd_frequencies, ctx.target.dim, cfg.seed_frequency);
    ctx.threshold = cfg.threshold >= 0.0
                        ? cfg.threshold
                        : calibrate_threshold(ctx.target.sampler, cfg.n_particles,
                                              cfg.calibration_trials, ctx.freqs,
                                              derive_seed(cfg.seed_data, SeedStream::Calibration));
    return ctx;
}

namespace {

struct StepOutcome {
    double mean_displacement = 0.0;
    double denoiser_residual = -1.0;  // kernel-SD only
};

// Evaluates the configured flow at z (noisy or clean per ANNEAL), applies the
// update through the optimizer to the given rows of y, and measures the
// displacement actually applied.
StepOutcome apply_flow_step(const ExperimentConfig& cfg, const TargetModel& target,
                            const ScheduleSpec& schedule, int t, double s2, double eta,
                            const ParticleSet& xb, const ParticleSet& yb,
                            const std::vector<int>& rows, ParticleSet& y, OptimizerState& opt,
                            Rng& anneal_rng) {
    const Eigen::Index d = yb.dim();
    // Noise-injected evaluation points belong to the kernel-proxy mechanism.
    // SVGD never anneals its particles and the analytic flow evaluates exact
    // scores at the clean points; the reverse-process step is defined on the
    // noisy point and so always injects.
    const FlowKind kind = cfg.method.kind;
    const bool proxy_flow = kind == FlowKind::KernelSD || kind == FlowKind::MMD ||
                            kind == FlowKind::MMDNormalized;
    const bool inject = (cfg.anneal && proxy_flow) || kind == FlowKind::DiffusionStep;
    const ParticleSet z =
        inject ? ParticleSet(yb.points() +
                             std::sqrt(s2) * anneal_rng.normal_matrix(yb.count(), d))
               : yb;

    StepOutcome outcome;
    Eigen::MatrixXd dir;
    double eta_eff = eta;
    switch (cfg.method.kind) {
        case FlowKind::KernelSD: {
            const Eigen::MatrixXd dp = detail::kernel_weighted_mean(z.points(), xb.points(), s2);
            const Eigen::MatrixXd dq = detail::kernel_weighted_mean(z.points(), yb.points(), s2);
            dir = dp - dq;
            outcome.denoiser_residual = (dq - yb.points()).rowwise().norm().mean();
            break;
        }
        case FlowKind::MMD: dir = mmd_update(z, xb, yb, s2, false); break;
        case FlowKind::MMDNormalized: dir = mmd_update(z, xb, yb, s2, true); break;
        case FlowKind::SVGD: dir = svgd_update(z, *target.score, s2); break;
        case FlowKind::AnalyticSD:
            dir = analytic_sd_update(z, *target.score, moment_gaussian_score(y));
            break;
        case FlowKind::DiffusionStep: {
            const double s2_next =
                cfg.method.diffusion_sigma2_s >= 0.0
                    ? cfg.method.diffusion_sigma2_s
                    : noise_at(schedule, std::min(t + 1, schedule.total_steps - 1));
            if (s2_next > s2)
                throw std::invalid_argument("diffusion_step: noise schedule must be non-increasing");
            dir = detail::kernel_weighted_mean(z.points(), xb.points(), s2) - yb.points();
            eta_eff = 1.0 - s2_next / s2;
            break;
        }
    }

    Eigen::MatrixXd before(static_cast<Eigen::Index>(rows.size()), d);
    for (std::size_t i = 0; i < rows.size(); ++i)
        before.row(static_cast<Eigen::Index>(i)) = y.points().row(rows[i]);
    apply_step_rows(opt, y.points(), rows, dir, eta_eff);
    double disp = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i)
        disp += (y.points().row(rows[i]) - before.row(static_cast<Eigen::Index>(i))).norm();
    outcome.mean_displacement = disp / static_cast<double>(rows.size());
    return outcome;
}

}  // namespace

RunRecord run_particle_experiment(const ExperimentConfig& cfg) {
    return run_particle_experiment(cfg, make_context(cfg));
}

RunRecord run_particle_experiment(const ExperimentConfig& cfg, const ExperimentContext& ctx) {
    const auto t_start = std::chrono::steady_clock::now();
    cfg.validate();
    check_method_compatibility(cfg, ctx.target);
    const TargetModel& target = ctx.target;
    const int n = cfg.n_particles;
    const int d = target.dim;

    const ParticleSet x =
        ctx.target_sample
            ? *ctx.target_sample
            : target.sampler(n, derive_seed(cfg.seed_data, SeedStream::TargetSample));
    ParticleSet y = ctx.initial_base
                        ? *ctx.initial_base
                        : offset_gaussian_base(target, cfg.offset, n,
                                               derive_seed(cfg.seed_data, SeedStream::BaseSample));
    if (x.dim() != d || y.dim() != d || x.count() != n || y.count() != n)
        throw std::invalid_argument("run_particle_experiment: sample shape mismatch");

    // CONST runs freeze the bandwidth at the median-heuristic value of the
    // initial base particles; otherwise the cosine schedule applies.
    ScheduleSpec schedule;
    schedule.eta = cfg.eta;
    schedule.total_steps = cfg.iterations;
    if (cfg.const_noise) {
        schedule.kind = ScheduleKind::Constant;
        schedule.sigma2_max = median_bandwidth(y);
        schedule.sigma2_min = schedule.sigma2_max;
    } else {
        schedule.kind = ScheduleKind::Cosine;
        schedule.sigma2_max = cfg.sigma2_max;
        schedule.sigma2_min = cfg.sigma2_min;
    }
    validate(schedule);

    OptimizerState opt = make_optimizer(cfg.adagrad ? OptimizerKind::AdaGrad : OptimizerKind::SGD,
                                        n, d, cfg.adagrad_epsilon, cfg.adagrad_decay);

    const EmpiricalCf target_cf = empirical_cf(x, ctx.freqs);
    Rng anneal_rng(derive_seed(cfg.seed_noise, SeedStream::Noise));

    std::vector<int> all_rows(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) all_rows[static_cast<std::size_t>(i)] = i;

    RunRecord record;
    record.config = cfg;
    record.rows.reserve(static_cast<std::size_t>(cfg.iterations));
    double residual_sum = 0.0;
    int residual_count = 0;

    for (int t = 0; t < cfg.iterations; ++t) {
        const double s2 = noise_at(schedule, t);
        const double eta = step_at(schedule, t);

        RunRow row;
        row.step = t;
        row.sigma2 = s2;
        row.eta = eta;
        // Measurement precedes the update: row 0 is the initial state, and the
        // CFD always uses the full clean particle set against the fixed target
        // sample.
        row.cfd = cfd_between(target_cf, empirical_cf(y, ctx.freqs));

        if (std::find(cfg.snapshots.begin(), cfg.snapshots.end(), t) != cfg.snapshots.end())
            record.snapshots.emplace_back(t, y);

        StepOutcome outcome;
        if (cfg.batch) {
            Rng bx(derive_seed(cfg.seed_noise, SeedStream::BatchTarget, t));
            Rng by(derive_seed(cfg.seed_noise, SeedStream::BatchSource, t));
            const std::vector<int> idx_x = bx.sample_without_replacement(n, cfg.batch_size);
            const std::vector<int> idx_y = by.sample_without_replacement(n, cfg.batch_size);
            outcome = apply_flow_step(cfg, target, schedule, t, s2, eta, x.select(idx_x),
                                      y.select(idx_y), idx_y, y, opt, anneal_rng);
        } else {
            outcome = apply_flow_step(cfg, target, schedule, t, s2, eta, x,
                                      ParticleSet(y.points()), all_rows, y, opt, anneal_rng);
        }
        row.mean_displacement = outcome.mean_displacement;
        if (outcome.denoiser_residual >= 0.0) {
            residual_sum += outcome.denoiser_residual;
            ++residual_count;
        }
        record.rows.push_back(row);
    }

    record.final_particles = y;
    record.verdict.threshold = ctx.threshold;
    record.verdict.min_cfd = record.rows.front().cfd;
    record.verdict.step_of_min = 0;
    for (const RunRow& r : record.rows) {
        if (r.cfd < record.verdict.min_cfd) {
            record.verdict.min_cfd = r.cfd;
            record.verdict.step_of_min = r.step;
        }
    }
    record.verdict.converged = record.verdict.min_cfd < ctx.threshold;
    record.mean_denoiser_residual = residual_count > 0 ? residual_sum / residual_count : 0.0;
    record.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
    return record;
}

void write_run_outputs(const RunRecord& record, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "trajectory.csv");
        if (!out) throw std::runtime_error("write_run_outputs: cannot open trajectory.csv");
        out << "step,cfd,sigma2,eta,mean_displacement\n";
        for (const RunRow& r : record.rows)
            out << r.step << ',' << format_double(r.cfd) << ',' << format_double(r.sigma2) << ','
                << format_double(r.eta) << ',' << format_double(r.mean_displacement) << '\n';
    }
    save_csv(record.final_particles, dir / "particles_final.csv");
    for (const auto& [step, ps] : record.snapshots)
        save_csv(ps, dir / ("particles_" + std::to_string(step) + ".csv"));
    {
        std::ofstream out(dir / "verdict.csv");
        if (!out) throw std::runtime_error("write_run_outputs: cannot open verdict.csv");
        out << "min_cfd,threshold,converged,step_of_min\n";
        out << format_double(record.verdict.min_cfd) << ','
            << format_double(record.verdict.threshold) << ','
            << (record.verdict.converged ? 'Y' : 'N') << ',' << record.verdict.step_of_min << '\n';
    }
    write_config(record.config, dir / "config.txt");
}

ConditionTable run_condition_table(const ExperimentConfig& base,
                                   const std::vector<FlowKind>& methods, int trials,
                                   bool vary_offset, int jobs) {
    if (trials < 1) throw std::invalid_argument("run_condition_table: trials must be >= 1");
    if (methods.empty()) throw std::invalid_argument("run_condition_table: no methods");

    ExperimentConfig probe = base;
    // context is shared; method-specific compatibility is checked per cell
    probe.method.kind = FlowKind::KernelSD;
    const ExperimentContext ctx = make_context(probe);

    ConditionTable table;
    table.vary_offset = vary_offset;
    table.methods = methods;
    table.threshold = ctx.threshold;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            for (int c = 0; c < 2; ++c)
                for (int an = 0; an < 2; ++an) {
                    if (vary_offset) {
                        for (int of = 0; of < 2; ++of)
                            table.conditions.push_back({a != 0, b != 0, c != 0, an != 0, of != 0});
                    } else {
                        table.conditions.push_back(
                            {a != 0, b != 0, c != 0, an != 0, base.offset});
                    }
                }
    table.cells.assign(table.conditions.size(), std::vector<CellResult>(methods.size()));

    struct Task {
        std::size_t cond;
        std::size_t method;
    };
    std::vector<Task> tasks;
    for (std::size_t ci = 0; ci < table.conditions.size(); ++ci)
        for (std::size_t mi = 0; mi < methods.size(); ++mi) tasks.push_back({ci, mi});

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t k = next.fetch_add(1);
            if (k >= tasks.size()) return;
            const Task task = tasks[k];
            const auto flags = table.conditions[task.cond];
            CellResult& cell = table.cells[task.cond][task.method];
            for (int r = 0; r < trials; ++r) {
                ExperimentConfig cfg = base;
                cfg.method.kind = methods[task.method];
                cfg.adagrad = flags[0];
                cfg.batch = flags[1];
                cfg.const_noise = flags[2];
                cfg.anneal = flags[3];
                cfg.offset = flags[4];
                cfg.threshold = ctx.threshold;
                // same data/noise draws for every cell at a given trial index
                cfg.seed_data = derive_seed(base.seed_data, SeedStream::Trial, r);
                cfg.seed_noise = derive_seed(base.seed_noise, SeedStream::Trial, r);
                try {
                    const RunRecord rec = run_particle_experiment(cfg, ctx);
                    cell.min_cfds.push_back(rec.verdict.min_cfd);
                } catch (const std::exception& e) {
                    cell.error = e.what();
                    break;
                }
            }
            if (cell.error.empty()) {
                cell.avg_min_cfd = 0.0;
                int converged = 0;
                for (double v : cell.min_cfds) {
                    cell.avg_min_cfd += v;
                    if (v < ctx.threshold) ++converged;
                }
                cell.avg_min_cfd /= static_cast<double>(cell.min_cfds.size());
                cell.all_converged = converged == static_cast<int>(cell.min_cfds.size());
                cell.majority_converged = 2 * converged > static_cast<int>(cell.min_cfds.size());
            }
        }
    };

    const int hw = static_cast<int>(std::thread::hardware_concurrency());
    const int nthreads = std::max(1, std::min<int>(jobs > 0 ? jobs : std::max(1, hw),
                                                   static_cast<int>(tasks.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nthreads));
    for (int i = 0; i < nthreads; ++i) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    return table;
}

void write_table_csv(const ConditionTable& table, const std::filesystem::path& path) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp);
        if (!out) throw std::runtime_error("write_table_csv: cannot open " + tmp.string());
        out << "adagrad,batch,const,anneal";
        if (table.vary_offset) out << ",offset";
        for (FlowKind m : table.methods)
            out << ',' << to_string(m) << "_avg_min_cfd" << ',' << to_string(m) << "_converged";
        out << '\n';
        for (std::size_t ci = 0; ci < table.conditions.size(); ++ci) {
            const auto& flags = table.conditions[ci];
            out << (flags[0] ? 'Y' : 'N') << ',' << (flags[1] ? 'Y' : 'N') << ','
                << (flags[2] ? 'Y' : 'N') << ',' << (flags[3] ? 'Y' : 'N');
            if (table.vary_offset) out << ',' << (flags[4] ? 'Y' : 'N');
            for (std::size_t mi = 0; mi < table.methods.size(); ++mi) {
                const CellResult& cell = table.cells[ci][mi];
                if (!cell.error.empty()) {
                    out << ",error,error";
                } else {
                    out << ',' << format_double(cell.avg_min_cfd) << ','
                        << (cell.all_converged ? 'Y' : 'N');
                }
            }
            out << '\n';
        }
    }
    std::filesystem::rename(tmp, path);
}

InterpolationResult run_interpolation(const TargetModel& source, const TargetModel& dest, int n,
                                      const ExperimentConfig& cfg) {
    if (source.dim != dest.dim)
        throw std::invalid_argument("run_interpolation: dimension mismatch");
    ExperimentConfig run_cfg = cfg;
    run_cfg.target = dest.name;
    run_cfg.n_particles = n;

    ExperimentContext ctx;
    ctx.target = dest;
    ctx.freqs = make_frequency_set(run_cfg.cfd_frequencies, dest.dim, run_cfg.seed_frequency);
    ctx.threshold =
        run_cfg.threshold >= 0.0
            ? run_cfg.threshold
            : calibrate_threshold(dest.sampler, n, run_cfg.calibration_trials, ctx.freqs,
                                  derive_seed(run_cfg.seed_data, SeedStream::Calibration));
    ctx.initial_base = source.sampler(n, derive_seed(run_cfg.seed_data, SeedStream::BaseSample));

    InterpolationResult result;
    result.record = run_particle_experiment(run_cfg, ctx);
    result.snapshots = result.record.snapshots;
    return result;
}

}  // namespace sdflow
