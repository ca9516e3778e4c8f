#include <doctest.h>

#include <stdexcept>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "sdflow/harness.hpp"
#include "sdflow/rng.hpp"

using namespace sdflow;

namespace {

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.method.kind = FlowKind::KernelSD;
    cfg.target = "grid25";
    cfg.n_particles = 128;
    cfg.iterations = 40;
    cfg.batch_size = 32;
    cfg.cfd_frequencies = 64;
    cfg.threshold = 0.5;  // skip calibration in smoke tests
    return cfg;
}

}  // namespace

TEST_CASE("config file round trip and strictness") {
    const auto dir = std::filesystem::temp_directory_path() / "sdflow_cfg_test";
    std::filesystem::create_directories(dir);
    ExperimentConfig cfg = small_config();
    cfg.method.kind = FlowKind::SVGD;
    cfg.adagrad = true;
    cfg.anneal = false;
    cfg.snapshots = {0, 10};
    cfg.seed_noise = 77;
    cfg.output_dir = "out/x";
    write_config(cfg, dir / "c.txt");
    const ExperimentConfig back = parse_config_file(dir / "c.txt");
    CHECK(back.method.kind == FlowKind::SVGD);
    CHECK(back.adagrad == true);
    CHECK(back.anneal == false);
    CHECK(back.snapshots == std::vector<int>{0, 10});
    CHECK(back.seed_noise == 77);
    CHECK(back.n_particles == cfg.n_particles);
    CHECK(back.threshold == cfg.threshold);
    CHECK(back.output_dir == "out/x");

    std::ofstream bad(dir / "bad.txt");
    bad << "[experiment]\nmystery_knob = 3\n";
    bad.close();
    CHECK_THROWS_AS(parse_config_file(dir / "bad.txt"), std::invalid_argument);
    std::filesystem::remove_all(dir);
}

TEST_CASE("config validation rejects inconsistent settings") {
    ExperimentConfig cfg = small_config();
    cfg.batch_size = cfg.n_particles + 1;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.iterations = 0;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    cfg = small_config();
    cfg.sigma2_min = 20.0;  // above sigma2_max
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("svgd without an analytic score is a configuration error") {
    ExperimentConfig cfg = small_config();
    cfg.target = "swissroll";
    cfg.method.kind = FlowKind::SVGD;
    CHECK_THROWS_AS(run_particle_experiment(cfg), std::invalid_argument);
}

TEST_CASE("identical configs produce byte-identical outputs") {
    const auto base = std::filesystem::temp_directory_path() / "sdflow_det_test";
    std::filesystem::remove_all(base);
    ExperimentConfig cfg = small_config();
    cfg.snapshots = {0, 20};
    for (const char* sub : {"a", "b"}) {
        const RunRecord rec = run_particle_experiment(cfg);
        write_run_outputs(rec, base / sub);
    }
    for (const char* f :
         {"trajectory.csv", "particles_final.csv", "verdict.csv", "particles_20.csv"})
        CHECK(slurp(base / "a" / f) == slurp(base / "b" / f));
    CHECK(!slurp(base / "a" / "trajectory.csv").empty());
    std::filesystem::remove_all(base);
}

TEST_CASE("base equal to the target sample converges immediately for any method") {
    const TargetModel grid = gaussian_grid_25();
    const ParticleSet sample = grid.sampler(96, 12345);
    for (FlowKind k : {FlowKind::KernelSD, FlowKind::MMD, FlowKind::SVGD}) {
        ExperimentConfig cfg = small_config();
        cfg.method.kind = k;
        cfg.n_particles = 96;
        cfg.iterations = 3;
        ExperimentContext ctx;
        ctx.target = grid;
        ctx.freqs = make_frequency_set(cfg.cfd_frequencies, grid.dim, cfg.seed_frequency);
        ctx.threshold = 0.05;
        ctx.target_sample = sample;
        ctx.initial_base = sample;
        const RunRecord rec = run_particle_experiment(cfg, ctx);
        CHECK(rec.rows[0].cfd == 0.0);
        CHECK(rec.verdict.converged);
        CHECK(rec.verdict.min_cfd == 0.0);
        CHECK(rec.verdict.step_of_min == 0);
    }
}

TEST_CASE("anneal toggle is a no-op as sigma approaches zero") {
    ExperimentConfig cfg = small_config();
    cfg.iterations = 10;
    cfg.sigma2_max = 1e-30;
    cfg.sigma2_min = 1e-30;
    cfg.anneal = true;
    const RunRecord with_noise = run_particle_experiment(cfg);
    cfg.anneal = false;
    const RunRecord without = run_particle_experiment(cfg);
    REQUIRE(with_noise.rows.size() == without.rows.size());
    for (std::size_t i = 0; i < with_noise.rows.size(); ++i)
        CHECK(with_noise.rows[i].cfd == without.rows[i].cfd);
    CHECK(with_noise.final_particles.points() == without.final_particles.points());
}

TEST_CASE("row bookkeeping: one row per iteration, verdict matches the column") {
    ExperimentConfig cfg = small_config();
    cfg.adagrad = true;
    cfg.batch = true;
    const RunRecord rec = run_particle_experiment(cfg);
    CHECK(rec.rows.size() == static_cast<std::size_t>(cfg.iterations));
    double min_cfd = rec.rows[0].cfd;
    for (const RunRow& r : rec.rows) min_cfd = std::min(min_cfd, r.cfd);
    CHECK(rec.verdict.min_cfd == min_cfd);
    CHECK(rec.verdict.converged == (min_cfd < rec.verdict.threshold));
    for (const RunRow& r : rec.rows) {
        CHECK(std::isfinite(r.cfd));
        CHECK(r.sigma2 > 0.0);
    }
}

TEST_CASE("const-noise freezes the schedule at the initial median bandwidth") {
    ExperimentConfig cfg = small_config();
    cfg.const_noise = true;
    const RunRecord rec = run_particle_experiment(cfg);
    const double first = rec.rows.front().sigma2;
    for (const RunRow& r : rec.rows) CHECK(r.sigma2 == first);

    cfg.const_noise = false;
    const RunRecord cosine = run_particle_experiment(cfg);
    CHECK(cosine.rows.front().sigma2 == doctest::Approx(cfg.sigma2_max));
    CHECK(cosine.rows.back().sigma2 < cosine.rows.front().sigma2);
}

TEST_CASE("diffusion-step method follows the schedule and moves particles") {
    ExperimentConfig cfg = small_config();
    cfg.method.kind = FlowKind::DiffusionStep;
    cfg.iterations = 30;
    const RunRecord rec = run_particle_experiment(cfg);
    CHECK(rec.rows.size() == 30);
    // reverse-process steps shrink the variance, so particles must move
    double total_move = 0.0;
    for (const RunRow& r : rec.rows) total_move += r.mean_displacement;
    CHECK(total_move > 0.0);
}

TEST_CASE("condition table runs cells and aggregates verdicts") {
    ExperimentConfig cfg = small_config();
    cfg.n_particles = 64;
    cfg.iterations = 15;
    cfg.batch_size = 16;
    cfg.calibration_trials = 20;
    cfg.threshold = -1.0;  // calibrate
    const std::vector<FlowKind> methods = {FlowKind::KernelSD, FlowKind::MMD};
    const ConditionTable table = run_condition_table(cfg, methods, 2, false, 2);
    CHECK(table.conditions.size() == 16);
    CHECK(table.cells.size() == 16);
    CHECK(table.threshold > 0.0);
    for (const auto& row : table.cells) {
        REQUIRE(row.size() == 2);
        for (const CellResult& cell : row) {
            REQUIRE(cell.error.empty());
            CHECK(cell.min_cfds.size() == 2);
            CHECK(cell.avg_min_cfd >= 0.0);
        }
    }

    const auto path = std::filesystem::temp_directory_path() / "sdflow_table_test.csv";
    write_table_csv(table, path);
    const std::string text = slurp(path);
    CHECK(text.find("adagrad,batch,const,anneal,kernel_sd_avg_min_cfd") == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 17);  // header + 16 rows
    std::filesystem::remove(path);
}

TEST_CASE("vary-offset doubles the condition grid") {
    ExperimentConfig cfg = small_config();
    cfg.target = "mystery30";
    cfg.n_particles = 48;
    cfg.iterations = 5;
    cfg.batch_size = 16;
    cfg.threshold = 0.9;
    const ConditionTable table =
        run_condition_table(cfg, {FlowKind::KernelSD}, 1, true, 2);
    CHECK(table.conditions.size() == 32);
    int offset_count = 0;
    for (const auto& c : table.conditions) offset_count += c[4] ? 1 : 0;
    CHECK(offset_count == 16);
}

TEST_CASE("failed cells are recorded without aborting the table") {
    ExperimentConfig cfg = small_config();
    cfg.target = "swissroll";  // no analytic score: SVGD cell must fail
    cfg.n_particles = 32;
    cfg.iterations = 5;
    cfg.batch_size = 8;
    cfg.threshold = 0.9;
    const ConditionTable table =
        run_condition_table(cfg, {FlowKind::KernelSD, FlowKind::SVGD}, 1, false, 2);
    for (const auto& row : table.cells) {
        CHECK(row[0].error.empty());
        CHECK(!row[1].error.empty());
    }
}

TEST_CASE("interpolation with matching source and dest stays below threshold") {
    const TargetModel grid = gaussian_grid_25();
    ExperimentConfig cfg = small_config();
    cfg.n_particles = 256;
    cfg.iterations = 60;
    cfg.calibration_trials = 100;
    cfg.threshold = -1.0;
    const InterpolationResult res = run_interpolation(grid, grid, 256, cfg);
    CHECK(res.record.verdict.converged);
    for (const RunRow& r : res.record.rows) CHECK(r.cfd < res.record.verdict.threshold);
}

TEST_CASE("interpolation rejects mismatched dimensions") {
    ExperimentConfig cfg = small_config();
    CHECK_THROWS_AS(run_interpolation(gaussian_grid_25(), mystery_mixture_30(), 64, cfg),
                    std::invalid_argument);
}

TEST_CASE("snapshots are emitted at the requested steps") {
    ExperimentConfig cfg = small_config();
    cfg.iterations = 12;
    cfg.snapshots = {0, 5, 11};
    const RunRecord rec = run_particle_experiment(cfg);
    REQUIRE(rec.snapshots.size() == 3);
    CHECK(rec.snapshots[0].first == 0);
    CHECK(rec.snapshots[1].first == 5);
    CHECK(rec.snapshots[2].first == 11);
    CHECK(rec.snapshots[0].second.count() == cfg.n_particles);
}
