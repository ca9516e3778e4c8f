#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sdflow/config.hpp"
#include "sdflow/generator.hpp"
#include "sdflow/harness.hpp"
#include "sdflow/kernel.hpp"
#include "sdflow/metrics.hpp"
#include "sdflow/particles.hpp"
#include "sdflow/rng.hpp"
#include "sdflow/targets.hpp"

namespace {

using namespace sdflow;

// Every ExperimentConfig field has a flag-level override; values are applied
// on top of the config file (when given) after parsing.
struct Overrides {
    std::optional<std::string> method, target, output_dir;
    std::optional<int> n_particles, iterations, batch_size, cfd_frequencies, calibration_trials;
    std::optional<double> eta, sigma2_max, sigma2_min, threshold, adagrad_epsilon, adagrad_decay;
    std::optional<std::uint64_t> seed_data, seed_noise, seed_frequency, seed_model;
    std::optional<bool> adagrad, batch, const_noise, anneal, offset;
    std::optional<std::vector<int>> snapshots;
};

void add_override_options(CLI::App* cmd, Overrides& ov) {
    cmd->add_option("--method", ov.method,
                    "flow method: kernel_sd|mmd|mmd_normalized|svgd|analytic_sd|diffusion_step");
    cmd->add_option("--target", ov.target, "target name: grid25|mystery30|swissroll|linear50");
    cmd->add_option("--n", ov.n_particles, "number of particles");
    cmd->add_option("--iterations", ov.iterations, "number of flow iterations");
    cmd->add_option("--batch-size", ov.batch_size, "batch size for the BATCH condition");
    cmd->add_option("--eta", ov.eta, "step size");
    cmd->add_option("--sigma2-max", ov.sigma2_max, "cosine schedule maximum variance");
    cmd->add_option("--sigma2-min", ov.sigma2_min, "cosine schedule minimum variance");
    cmd->add_option("--threshold", ov.threshold, "convergence threshold (negative: calibrate)");
    cmd->add_option("--adagrad-epsilon", ov.adagrad_epsilon, "AdaGrad fudge factor");
    cmd->add_option("--adagrad-decay", ov.adagrad_decay,
                    "AdaGrad accumulator decay (0 = cumulative)");
    cmd->add_option("--seed-data", ov.seed_data, "data sampling seed");
    cmd->add_option("--seed-noise", ov.seed_noise, "noise/batch seed");
    cmd->add_option("--seed-frequency", ov.seed_frequency, "CFD frequency seed");
    cmd->add_option("--seed-model", ov.seed_model, "generated-target model seed");
    cmd->add_option("--frequencies", ov.cfd_frequencies, "number of CFD frequencies");
    cmd->add_option("--calibration-trials", ov.calibration_trials, "threshold calibration trials");
    cmd->add_option("--snapshots", ov.snapshots, "steps at which to snapshot particles")
        ->delimiter(',');
    cmd->add_option("--out", ov.output_dir, "output directory");
    cmd->add_flag_callback("--adagrad", [&ov] { ov.adagrad = true; });
    cmd->add_flag_callback("--no-adagrad", [&ov] { ov.adagrad = false; });
    cmd->add_flag_callback("--batch", [&ov] { ov.batch = true; });
    cmd->add_flag_callback("--no-batch", [&ov] { ov.batch = false; });
    cmd->add_flag_callback("--const-noise", [&ov] { ov.const_noise = true; });
    cmd->add_flag_callback("--no-const-noise", [&ov] { ov.const_noise = false; });
    cmd->add_flag_callback("--anneal", [&ov] { ov.anneal = true; });
    cmd->add_flag_callback("--no-anneal", [&ov] { ov.anneal = false; });
    cmd->add_flag_callback("--offset", [&ov] { ov.offset = true; });
    cmd->add_flag_callback("--no-offset", [&ov] { ov.offset = false; });
}

void apply_overrides(const Overrides& ov, ExperimentConfig& cfg) {
    if (ov.method) cfg.method.kind = flow_kind_from_string(*ov.method);
    if (ov.target) cfg.target = *ov.target;
    if (ov.n_particles) cfg.n_particles = *ov.n_particles;
    if (ov.iterations) cfg.iterations = *ov.iterations;
    if (ov.batch_size) cfg.batch_size = *ov.batch_size;
    if (ov.eta) cfg.eta = *ov.eta;
    if (ov.sigma2_max) cfg.sigma2_max = *ov.sigma2_max;
    if (ov.sigma2_min) cfg.sigma2_min = *ov.sigma2_min;
    if (ov.threshold) cfg.threshold = *ov.threshold;
    if (ov.adagrad_epsilon) cfg.adagrad_epsilon = *ov.adagrad_epsilon;
    if (ov.adagrad_decay) cfg.adagrad_decay = *ov.adagrad_decay;
    if (ov.seed_data) cfg.seed_data = *ov.seed_data;
    if (ov.seed_noise) cfg.seed_noise = *ov.seed_noise;
    if (ov.seed_frequency) cfg.seed_frequency = *ov.seed_frequency;
    if (ov.seed_model) cfg.seed_model = *ov.seed_model;
    if (ov.cfd_frequencies) cfg.cfd_frequencies = *ov.cfd_frequencies;
    if (ov.calibration_trials) cfg.calibration_trials = *ov.calibration_trials;
    if (ov.snapshots) cfg.snapshots = *ov.snapshots;
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.adagrad) cfg.adagrad = *ov.adagrad;
    if (ov.batch) cfg.batch = *ov.batch;
    if (ov.const_noise) cfg.const_noise = *ov.const_noise;
    if (ov.anneal) cfg.anneal = *ov.anneal;
    if (ov.offset) cfg.offset = *ov.offset;
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    apply_overrides(ov, cfg);
    const RunRecord record = run_particle_experiment(cfg);
    std::printf("run: method=%s target=%s min_cfd=%.6g threshold=%.6g converged=%s step_of_min=%d\n",
                to_string(cfg.method.kind).c_str(), cfg.target.c_str(), record.verdict.min_cfd,
                record.verdict.threshold, record.verdict.converged ? "Y" : "N",
                record.verdict.step_of_min);
    if (cfg.method.kind == FlowKind::KernelSD)
        std::printf("run: mean source-denoiser residual ||D*(z;q)-y|| = %.6g\n",
                    record.mean_denoiser_residual);
    std::printf("run: wall time %.2f s\n", record.wall_seconds);
    if (!cfg.output_dir.empty()) {
        write_run_outputs(record, cfg.output_dir);
        std::printf("run: outputs written to %s\n", cfg.output_dir.c_str());
    }
    return 0;
}

int cmd_table(const std::string& config_path, const Overrides& ov, const std::string& methods_csv,
              int trials, bool vary_offset, int jobs, const std::string& out_path) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    apply_overrides(ov, cfg);
    std::vector<FlowKind> methods;
    std::stringstream ss(methods_csv);
    std::string item;
    while (std::getline(ss, item, ',')) methods.push_back(flow_kind_from_string(item));
    const ConditionTable table = run_condition_table(cfg, methods, trials, vary_offset, jobs);
    std::printf("table: threshold=%.6g conditions=%zu methods=%zu trials=%d\n", table.threshold,
                table.conditions.size(), table.methods.size(), trials);
    if (!out_path.empty()) {
        std::filesystem::create_directories(std::filesystem::path(out_path).parent_path().empty()
                                                ? "."
                                                : std::filesystem::path(out_path).parent_path());
        write_table_csv(table, out_path);
        std::printf("table: written to %s\n", out_path.c_str());
    }
    for (std::size_t ci = 0; ci < table.conditions.size(); ++ci) {
        const auto& f = table.conditions[ci];
        std::printf("  %c %c %c %c", f[0] ? 'Y' : 'N', f[1] ? 'Y' : 'N', f[2] ? 'Y' : 'N',
                    f[3] ? 'Y' : 'N');
        if (table.vary_offset) std::printf(" %c", f[4] ? 'Y' : 'N');
        for (std::size_t mi = 0; mi < table.methods.size(); ++mi) {
            const CellResult& cell = table.cells[ci][mi];
            if (!cell.error.empty())
                std::printf("  | %s: error", to_string(table.methods[mi]).c_str());
            else
                std::printf("  | %s: %.4f %c", to_string(table.methods[mi]).c_str(),
                            cell.avg_min_cfd, cell.all_converged ? 'Y' : 'N');
        }
        std::printf("\n");
    }
    return 0;
}

int cmd_calibrate(const std::string& target_name, int n, int trials, std::uint64_t seed_data,
                  std::uint64_t seed_frequency, int frequencies, std::uint64_t seed_model,
                  const std::string& out_path) {
    const TargetModel target = make_target(target_name, seed_model);
    const FrequencySet freqs = make_frequency_set(frequencies, target.dim, seed_frequency);
    const double threshold = calibrate_threshold(target.sampler, n, trials, freqs,
                                                 derive_seed(seed_data, SeedStream::Calibration));
    std::printf("calibrate: target=%s n=%d trials=%d threshold=%s\n", target_name.c_str(), n,
                trials, format_double(threshold).c_str());
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        out << format_double(threshold) << "\n";
    }
    return 0;
}

int cmd_interpolate(const std::string& source_name, const std::string& dest_name,
                    const std::string& config_path, const Overrides& ov, int n,
                    std::uint64_t seed_model, const std::string& out_dir) {
    ExperimentConfig cfg;
    if (!config_path.empty()) cfg = parse_config_file(config_path);
    apply_overrides(ov, cfg);
    const TargetModel source = make_target(source_name, seed_model);
    const TargetModel dest = make_target(dest_name, seed_model);
    const InterpolationResult result = run_interpolation(source, dest, n, cfg);
    std::printf("interpolate: %s -> %s min_cfd=%.6g threshold=%.6g converged=%s\n",
                source_name.c_str(), dest_name.c_str(), result.record.verdict.min_cfd,
                result.record.verdict.threshold, result.record.verdict.converged ? "Y" : "N");
    if (!out_dir.empty()) {
        write_run_outputs(result.record, out_dir);
        std::printf("interpolate: outputs written to %s\n", out_dir.c_str());
    }
    return 0;
}

int cmd_model_opt(int steps, int batch, double eta, double lambda, double noise_multiplier,
                  std::uint64_t seed, const std::string& out_dir) {
    const TargetModel target = linear_gaussian_model(seed);
    LinearGenerator g0 = init_linear_generator(50, 25, derive_seed(seed, SeedStream::ModelInit, 1));

    // Constant noise variance set to noise_multiplier times the mean distance
    // from the initial generated batch to first nearest neighbors in a target
    // draw; the value is logged for inspection.
    Rng latent_rng(derive_seed(seed, SeedStream::Latent));
    const ParticleSet y0 = generate(g0, latent_rng.normal_matrix(batch, 25));
    const ParticleSet x0 = target.sampler(batch, derive_seed(seed, SeedStream::TargetSample));
    const std::vector<double> nn = nn_distances(y0, x0, false);
    double mean_nn = 0.0;
    for (double v : nn) mean_nn += v;
    mean_nn /= static_cast<double>(nn.size());
    const double sigma2 = noise_multiplier * mean_nn;
    std::printf("model-opt: mean base-to-target NN distance %.3f, constant sigma2 = %.3f\n",
                mean_nn, sigma2);

    ScheduleSpec schedule;
    schedule.kind = ScheduleKind::Constant;
    schedule.sigma2_max = sigma2;
    schedule.sigma2_min = sigma2;
    schedule.eta = eta;
    schedule.total_steps = steps;

    const ModelOptResult result = model_opt_loop(target, std::move(g0), FlowMethod{}, schedule,
                                                 lambda, batch, steps, seed);

    const auto& lin = *target.linear;
    const double mu_err = (result.generator.mu_hat - lin.mu).norm() / lin.mu.norm();
    const Eigen::MatrixXd cov_true = lin.b * lin.b.transpose();
    const Eigen::MatrixXd cov_hat = result.generator.b_hat * result.generator.b_hat.transpose();
    const Eigen::VectorXd ct = Eigen::Map<const Eigen::VectorXd>(cov_true.data(), cov_true.size());
    const Eigen::VectorXd ch = Eigen::Map<const Eigen::VectorXd>(cov_hat.data(), cov_hat.size());
    const Eigen::VectorXd ctc = ct.array() - ct.mean();
    const Eigen::VectorXd chc = ch.array() - ch.mean();
    const double corr = ctc.dot(chc) / (ctc.norm() * chc.norm());
    std::printf("model-opt: relative mean error %.4f, covariance-entry correlation %.5f\n", mu_err,
                corr);

    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        const std::filesystem::path dir(out_dir);
        {
            std::ofstream out(dir / "trace.csv");
            out << "step,cfd,sigma2,eta,mean_displacement\n";
            for (const ModelOptRow& r : result.trace)
                out << r.step << ',' << format_double(r.cfd) << ',' << format_double(r.sigma2)
                    << ',' << format_double(r.eta) << ',' << format_double(r.mean_displacement)
                    << '\n';
        }
        save_csv(ParticleSet(result.generator.b_hat), dir / "b_hat.csv");
        save_csv(ParticleSet(result.generator.mu_hat.transpose()), dir / "mu_hat.csv");
        save_csv(ParticleSet(lin.b), dir / "b_true.csv");
        save_csv(ParticleSet(lin.mu.transpose()), dir / "mu_true.csv");
        {
            // scatter data behind the three panels: mean pairs, covariance
            // entry pairs, NN distance lists
            std::ofstream out(dir / "mean_pairs.csv");
            out << "mu,mu_hat\n";
            for (Eigen::Index i = 0; i < lin.mu.size(); ++i)
                out << format_double(lin.mu(i)) << ','
                    << format_double(result.generator.mu_hat(i)) << '\n';
        }
        {
            std::ofstream out(dir / "cov_pairs.csv");
            out << "bbt,bbt_hat\n";
            for (Eigen::Index i = 0; i < ct.size(); ++i)
                out << format_double(ct(i)) << ',' << format_double(ch(i)) << '\n';
        }
        {
            const ParticleSet xeval =
                target.sampler(batch, derive_seed(seed, SeedStream::TargetSample, 999999));
            const std::vector<double> gen_nn = nn_distances(result.final_sample, xeval, false);
            const std::vector<double> self_nn = nn_distances(xeval, xeval, true);
            std::ofstream out(dir / "nn_distances.csv");
            out << "kind,distance\n";
            for (double v : gen_nn) out << "generated," << format_double(v) << '\n';
            for (double v : self_nn) out << "target," << format_double(v) << '\n';
        }
        std::printf("model-opt: outputs written to %s\n", out_dir.c_str());
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Score-difference flow sampling toolkit"};
    app.require_subcommand(1);

    // run
    auto* run = app.add_subcommand("run", "run one particle-optimization experiment");
    std::string run_config;
    run->add_option("--config", run_config, "config file (key = value with [sections])")
        ->check(CLI::ExistingFile);
    Overrides run_ov;
    add_override_options(run, run_ov);

    // table
    auto* table = app.add_subcommand("table", "run a condition-grid of experiments");
    std::string table_config, table_methods = "kernel_sd,mmd,svgd", table_out;
    int table_trials = 5, table_jobs = 0;
    bool table_vary_offset = false;
    table->add_option("--config", table_config)->check(CLI::ExistingFile);
    table->add_option("--methods", table_methods, "comma-separated flow methods");
    table->add_option("--trials", table_trials, "trials per cell");
    table->add_option("--jobs", table_jobs, "worker threads (0 = hardware)");
    table->add_flag("--vary-offset", table_vary_offset, "include OFFSET as a condition flag");
    table->add_option("--table-out", table_out, "table CSV path");
    Overrides table_ov;
    add_override_options(table, table_ov);

    // calibrate
    auto* calibrate = app.add_subcommand("calibrate", "compute a convergence threshold");
    std::string cal_target = "grid25", cal_out;
    int cal_n = 1024, cal_trials = 1000, cal_freqs = 256;
    std::uint64_t cal_seed_data = 1, cal_seed_freq = 3, cal_seed_model = 7;
    calibrate->add_option("--target", cal_target);
    calibrate->add_option("--n", cal_n);
    calibrate->add_option("--trials", cal_trials);
    calibrate->add_option("--frequencies", cal_freqs);
    calibrate->add_option("--seed-data", cal_seed_data);
    calibrate->add_option("--seed-frequency", cal_seed_freq);
    calibrate->add_option("--seed-model", cal_seed_model);
    calibrate->add_option("--out", cal_out, "write the threshold to this file");

    // interpolate
    auto* interpolate = app.add_subcommand("interpolate", "flow one data set onto another");
    std::string interp_source = "swissroll", interp_dest = "mystery30", interp_config,
                interp_out;
    int interp_n = 1024;
    std::uint64_t interp_seed_model = 7;
    interpolate->add_option("--source", interp_source);
    interpolate->add_option("--dest", interp_dest);
    interpolate->add_option("--config", interp_config)->check(CLI::ExistingFile);
    interpolate->add_option("--num", interp_n, "number of particles");
    interpolate->add_option("--model-seed", interp_seed_model);
    interpolate->add_option("--out-dir", interp_out);
    Overrides interp_ov;
    add_override_options(interpolate, interp_ov);

    // model-opt
    auto* model_opt = app.add_subcommand("model-opt", "train the linear generator in R^50");
    int mo_steps = 1000, mo_batch = 1024;
    double mo_eta = 1.0, mo_lambda = 1.024, mo_noise_mult = 10.0;
    std::uint64_t mo_seed = 1;
    std::string mo_out;
    model_opt->add_option("--steps", mo_steps);
    model_opt->add_option("--batch", mo_batch);
    model_opt->add_option("--eta", mo_eta);
    model_opt->add_option("--lambda", mo_lambda, "regression rate (batch-mean convention)");
    model_opt->add_option("--noise-multiplier", mo_noise_mult,
                          "constant sigma2 as a multiple of the mean base-to-target NN distance");
    model_opt->add_option("--seed", mo_seed);
    model_opt->add_option("--out", mo_out);

    // targets
    auto* targets_cmd = app.add_subcommand("targets", "inspect and export target distributions");
    auto* targets_export = targets_cmd->add_subcommand("export", "sample a target to CSV");
    std::string te_name = "grid25", te_out = "points.csv";
    int te_n = 1024;
    std::uint64_t te_seed = 1, te_seed_model = 7;
    bool te_header = false;
    targets_export->add_option("--name", te_name)->required();
    targets_export->add_option("--n", te_n);
    targets_export->add_option("--seed", te_seed);
    targets_export->add_option("--seed-model", te_seed_model);
    targets_export->add_option("--out", te_out)->required();
    targets_export->add_flag("--header", te_header, "write the x0,x1,... header row");
    auto* targets_spec = targets_cmd->add_subcommand("spec", "dump generative parameters");
    std::string ts_name = "grid25", ts_out = "spec.txt";
    std::uint64_t ts_seed_model = 7;
    targets_spec->add_option("--name", ts_name)->required();
    targets_spec->add_option("--seed-model", ts_seed_model);
    targets_spec->add_option("--out", ts_out)->required();
    targets_cmd->require_subcommand(1);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run->parsed()) return cmd_run(run_config, run_ov);
        if (table->parsed())
            return cmd_table(table_config, table_ov, table_methods, table_trials,
                             table_vary_offset, table_jobs, table_out);
        if (calibrate->parsed())
            return cmd_calibrate(cal_target, cal_n, cal_trials, cal_seed_data, cal_seed_freq,
                                 cal_freqs, cal_seed_model, cal_out);
        if (interpolate->parsed())
            return cmd_interpolate(interp_source, interp_dest, interp_config, interp_ov, interp_n,
                                   interp_seed_model, interp_out);
        if (model_opt->parsed())
            return cmd_model_opt(mo_steps, mo_batch, mo_eta, mo_lambda, mo_noise_mult, mo_seed,
                                 mo_out);
        if (targets_cmd->parsed()) {
            if (targets_export->parsed()) {
                const TargetModel target = make_target(te_name, te_seed_model);
                save_csv(target.sampler(te_n, te_seed), te_out, te_header);
                std::printf("targets export: %d points of %s written to %s\n", te_n,
                            te_name.c_str(), te_out.c_str());
                return 0;
            }
            if (targets_spec->parsed()) {
                save_spec(make_target(ts_name, ts_seed_model), ts_out);
                std::printf("targets spec: %s written to %s\n", ts_name.c_str(), ts_out.c_str());
                return 0;
            }
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
