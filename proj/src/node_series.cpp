#include "dgx/bytes.hpp"
#include "dgx/io.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace dgx {

namespace {

std::vector<std::string> csv_fields(const std::string& line) {
    std::vector<std::string> out;
    std::string field;
    std::istringstream in(line);
    while (std::getline(in, field, ',')) {
        while (!field.empty() && (field.back() == '\r' || field.back() == ' ')) field.pop_back();
        while (!field.empty() && field.front() == ' ') field.erase(field.begin());
        out.push_back(field);
    }
    return out;
}

double to_double(const std::string& s, const std::string& where) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw FormatError(where + ": cannot parse number '" + s + "'");
    }
    return v;
}

std::vector<std::vector<std::string>> read_rows(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) {
        throw FormatError("missing file: " + path.string());
    }
    std::istringstream in(read_file(path));
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        rows.push_back(csv_fields(line));
    }
    if (rows.empty()) {
        throw FormatError(path.string() + ": empty file (header required)");
    }
    return rows;
}

}  // namespace

DynamicGraph load_node_series(const std::filesystem::path& adjacency_path, const std::filesystem::path& readings_path) {
    const auto readings = read_rows(readings_path);
    const auto edges = read_rows(adjacency_path);
    const std::size_t n = readings.front().size() - 1;
    if (readings.front().size() < 2) {
        throw FormatError(readings_path.string() + ": header must be interval,<sensor>...");
    }
    if (readings.size() < 2) {
        throw FormatError(readings_path.string() + ": no readings");
    }

    Matrix a = Matrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t r = 1; r < edges.size(); ++r) {
        const std::string where = adjacency_path.string() + " line " + std::to_string(r + 1);
        if (edges[r].size() < 2) {
            throw FormatError(where + ": expected from,to[,cost]");
        }
        const double from = to_double(edges[r][0], where);
        const double to = to_double(edges[r][1], where);
        if (from < 0 || to < 0 || from >= static_cast<double>(n) || to >= static_cast<double>(n) ||
            from != std::floor(from) || to != std::floor(to)) {
            throw ValidationError(where + ": sensor index out of range for " + std::to_string(n) + " sensors");
        }
        const auto i = static_cast<Eigen::Index>(from);
        const auto j = static_cast<Eigen::Index>(to);
        a(i, j) = 1.0;
        a(j, i) = 1.0;
    }

    std::vector<Matrix> series;
    for (std::size_t r = 1; r < readings.size(); ++r) {
        const std::string where = readings_path.string() + " line " + std::to_string(r + 1);
        if (readings[r].size() != n + 1) {
            throw ValidationError(where + ": " + std::to_string(readings[r].size() - 1) + " readings but " +
                                  std::to_string(n) + " sensors");
        }
        Matrix x(static_cast<Eigen::Index>(n), 1);
        for (std::size_t s = 0; s < n; ++s) {
            x(static_cast<Eigen::Index>(s), 0) = to_double(readings[r][s + 1], where);
        }
        series.push_back(std::move(x));
    }
    const auto normalized = zero_mean_normalize(series);

    DynamicGraph g;
    for (std::size_t t = 0; t < normalized.size(); ++t) {
        g.snapshots.push_back({a, normalized[t], static_cast<int>(t + 1)});
    }
    return validate_dynamic_graph(g), g;
}

Dataset make_regression_task(const DynamicGraph& full) {
    validate_dynamic_graph(full);
    if (full.num_steps() < 2) {
        throw ValidationError("regression task needs at least two intervals (inputs + targets)");
    }
    Dataset d;
    d.graph.snapshots.assign(full.snapshots.begin(), full.snapshots.end() - 1);
    d.task.kind = HeadKind::node_regression;
    const Matrix& last = full.snapshots.back().features;
    for (Eigen::Index i = 0; i < last.rows(); ++i) {
        d.task.nodes.push_back(static_cast<std::size_t>(i));
        d.task.targets.push_back(last(i, 0));
    }
    return d;
}

}  // namespace dgx
