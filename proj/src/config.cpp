#include "sdflow/config.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "sdflow/particles.hpp"

namespace sdflow {

void ExperimentConfig::validate() const {
    if (n_particles < 1) throw std::invalid_argument("config: n_particles must be >= 1");
    if (iterations < 1) throw std::invalid_argument("config: iterations must be >= 1");
    if (batch_size < 1 || batch_size > n_particles)
        throw std::invalid_argument("config: need 1 <= batch_size <= n_particles");
    if (!(eta > 0.0)) throw std::invalid_argument("config: eta must be positive");
    if (!(sigma2_max > 0.0) || !(sigma2_min > 0.0) || sigma2_min > sigma2_max)
        throw std::invalid_argument("config: need 0 < sigma2_min <= sigma2_max");
    if (cfd_frequencies < 1) throw std::invalid_argument("config: cfd_frequencies must be >= 1");
    if (calibration_trials < 1)
        throw std::invalid_argument("config: calibration_trials must be >= 1");
    if (!(adagrad_epsilon > 0.0))
        throw std::invalid_argument("config: adagrad_epsilon must be positive");
    if (adagrad_decay < 0.0 || adagrad_decay >= 1.0)
        throw std::invalid_argument("config: adagrad_decay must be in [0, 1)");
}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

bool parse_bool(const std::string& v, const std::string& key) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": " + v);
}

double parse_double(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad number for " + key + ": " + v);
    }
}

int parse_int(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const long d = std::stol(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return static_cast<int>(d);
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad integer for " + key + ": " + v);
    }
}

std::uint64_t parse_u64(const std::string& v, const std::string& key) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument(v);
        return d;
    } catch (const std::exception&) {
        throw std::invalid_argument("config: bad seed for " + key + ": " + v);
    }
}

}  // namespace

ExperimentConfig parse_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open " + path.string());
    ExperimentConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw std::invalid_argument("config: bad section at line " + std::to_string(lineno));
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("config: expected key = value at line " +
                                        std::to_string(lineno));
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));

        if (key == "experiment.method") cfg.method.kind = flow_kind_from_string(val);
        else if (key == "experiment.snapshots") {
            cfg.snapshots.clear();
            std::stringstream ss(val);
            std::string item;
            while (std::getline(ss, item, ','))
                cfg.snapshots.push_back(parse_int(trim(item), key));
        }
        else if (key == "experiment.target") cfg.target = val;
        else if (key == "experiment.offset") cfg.offset = parse_bool(val, key);
        else if (key == "experiment.n_particles") cfg.n_particles = parse_int(val, key);
        else if (key == "experiment.iterations") cfg.iterations = parse_int(val, key);
        else if (key == "experiment.batch_size") cfg.batch_size = parse_int(val, key);
        else if (key == "experiment.eta") cfg.eta = parse_double(val, key);
        else if (key == "flags.adagrad") cfg.adagrad = parse_bool(val, key);
        else if (key == "flags.batch") cfg.batch = parse_bool(val, key);
        else if (key == "flags.const_noise") cfg.const_noise = parse_bool(val, key);
        else if (key == "flags.anneal") cfg.anneal = parse_bool(val, key);
        else if (key == "noise.sigma2_max") cfg.sigma2_max = parse_double(val, key);
        else if (key == "noise.sigma2_min") cfg.sigma2_min = parse_double(val, key);
        else if (key == "optimizer.epsilon") cfg.adagrad_epsilon = parse_double(val, key);
        else if (key == "optimizer.decay") cfg.adagrad_decay = parse_double(val, key);
        else if (key == "seeds.data") cfg.seed_data = parse_u64(val, key);
        else if (key == "seeds.noise") cfg.seed_noise = parse_u64(val, key);
        else if (key == "seeds.frequency") cfg.seed_frequency = parse_u64(val, key);
        else if (key == "seeds.model") cfg.seed_model = parse_u64(val, key);
        else if (key == "metrics.frequencies") cfg.cfd_frequencies = parse_int(val, key);
        else if (key == "metrics.threshold") cfg.threshold = parse_double(val, key);
        else if (key == "metrics.calibration_trials") cfg.calibration_trials = parse_int(val, key);
        else if (key == "output.dir") cfg.output_dir = val;
        else throw std::invalid_argument("config: unknown key " + key);
    }
    return cfg;
}

void write_config(const ExperimentConfig& cfg, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("config: cannot open " + path.string());
    out << "[experiment]\n";
    out << "method = " << to_string(cfg.method.kind) << "\n";
    out << "target = " << cfg.target << "\n";
    out << "offset = " << (cfg.offset ? "true" : "false") << "\n";
    out << "n_particles = " << cfg.n_particles << "\n";
    out << "iterations = " << cfg.iterations << "\n";
    out << "batch_size = " << cfg.batch_size << "\n";
    out << "eta = " << format_double(cfg.eta) << "\n";
    if (!cfg.snapshots.empty()) {
        out << "snapshots = ";
        for (std::size_t i = 0; i < cfg.snapshots.size(); ++i) {
            if (i > 0) out << ',';
            out << cfg.snapshots[i];
        }
        out << "\n";
    }
    out << "\n[flags]\n";
    out << "adagrad = " << (cfg.adagrad ? "true" : "false") << "\n";
    out << "batch = " << (cfg.batch ? "true" : "false") << "\n";
    out << "const_noise = " << (cfg.const_noise ? "true" : "false") << "\n";
    out << "anneal = " << (cfg.anneal ? "true" : "false") << "\n";
    out << "\n[noise]\n";
    out << "sigma2_max = " << format_double(cfg.sigma2_max) << "\n";
    out << "sigma2_min = " << format_double(cfg.sigma2_min) << "\n";
    out << "\n[optimizer]\n";
    out << "epsilon = " << format_double(cfg.adagrad_epsilon) << "\n";
    out << "decay = " << format_double(cfg.adagrad_decay) << "\n";
    out << "\n[seeds]\n";
    out << "data = " << cfg.seed_data << "\n";
    out << "noise = " << cfg.seed_noise << "\n";
    out << "frequency = " << cfg.seed_frequency << "\n";
    out << "model = " << cfg.seed_model << "\n";
    out << "\n[metrics]\n";
    out << "frequencies = " << cfg.cfd_frequencies << "\n";
    out << "threshold = " << format_double(cfg.threshold) << "\n";
    out << "calibration_trials = " << cfg.calibration_trials << "\n";
    out << "\n[output]\n";
    out << "dir = " << cfg.output_dir << "\n";
}

}  // namespace sdflow
