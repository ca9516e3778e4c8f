#include "sdflow/particles.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace sdflow {

ParticleSet::ParticleSet(Eigen::MatrixXd pts) : points_(std::move(pts)) {
    if (points_.rows() < 1 || points_.cols() < 1)
        throw std::invalid_argument("ParticleSet: need at least one point and one dimension");
    if (!points_.allFinite())
        throw std::invalid_argument("ParticleSet: coordinates must be finite");
}

ParticleSet ParticleSet::select(const std::vector<int>& rows) const {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), dim());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] < 0 || rows[i] >= count())
            throw std::invalid_argument("ParticleSet::select: row index out of range");
        out.row(static_cast<Eigen::Index>(i)) = points_.row(rows[i]);
    }
    return ParticleSet(std::move(out));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void save_csv(const ParticleSet& ps, const std::filesystem::path& path, bool header) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("save_csv: cannot open " + path.string());
    if (header) {
        for (Eigen::Index j = 0; j < ps.dim(); ++j) {
            if (j > 0) out << ',';
            out << 'x' << j;
        }
        out << '\n';
    }
    for (Eigen::Index i = 0; i < ps.count(); ++i) {
        for (Eigen::Index j = 0; j < ps.dim(); ++j) {
            if (j > 0) out << ',';
            out << format_double(ps.points()(i, j));
        }
        out << '\n';
    }
}

ParticleSet load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("load_csv: cannot open " + path.string());
    std::vector<std::vector<double>> rows;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string field;
        bool parse_ok = true;
        while (std::getline(ss, field, ',')) {
            try {
                std::size_t pos = 0;
                double v = std::stod(field, &pos);
                row.push_back(v);
                (void)pos;
            } catch (const std::exception&) {
                parse_ok = false;
                break;
            }
        }
        if (!parse_ok) {
            if (first) { first = false; continue; }  // header row
            throw std::runtime_error("load_csv: malformed line in " + path.string());
        }
        first = false;
        if (!rows.empty() && row.size() != rows.front().size())
            throw std::runtime_error("load_csv: inconsistent column count in " + path.string());
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw std::runtime_error("load_csv: no data in " + path.string());
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows.front().size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    return ParticleSet(std::move(m));
}

}  // namespace sdflow
