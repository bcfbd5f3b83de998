#include "dgx/graph.hpp"

#include <cmath>
#include <sstream>

namespace dgx {

namespace {

void check_adjacency(const Matrix& adjacency, const std::string& context) {
    if (adjacency.rows() != adjacency.cols()) {
        std::ostringstream os;
        os << context << "adjacency is not square (" << adjacency.rows() << "x" << adjacency.cols() << ")";
        throw ValidationError(os.str());
    }
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
        for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
            const double a = adjacency(i, j);
            if (!std::isfinite(a) || a < 0.0) {
                std::ostringstream os;
                os << context << "adjacency entry (" << i << "," << j << ") is " << a
                   << "; entries must be finite and >= 0";
                throw ValidationError(os.str());
            }
        }
    }
}

}  // namespace

NormalizedAdjacency normalize_adjacency(const Matrix& adjacency) {
    check_adjacency(adjacency, "");
    const Eigen::Index n = adjacency.rows();
    Vector degree(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        degree(i) = 1.0 + adjacency.row(i).sum();
    }
    Matrix v(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) {
            const double a_tilde = adjacency(i, j) + (i == j ? 1.0 : 0.0);
            v(i, j) = a_tilde / std::sqrt(degree(i) * degree(j));
        }
    }
    return {std::move(v)};
}

const DynamicGraph& validate_dynamic_graph(const DynamicGraph& graph) {
    if (graph.snapshots.empty()) {
        throw ValidationError("dynamic graph has no snapshots (T must be >= 1)");
    }
    const auto n = graph.snapshots.front().adjacency.rows();
    const auto d = graph.snapshots.front().features.cols();
    for (std::size_t k = 0; k < graph.snapshots.size(); ++k) {
        const Snapshot& s = graph.snapshots[k];
        const std::string context = "t=" + std::to_string(k + 1) + ": ";
        check_adjacency(s.adjacency, context);
        if (s.adjacency.rows() != n) {
            throw ValidationError(context + "snapshot has N=" + std::to_string(s.adjacency.rows()) +
                                  " but t=1 has N=" + std::to_string(n));
        }
        if (s.features.rows() != n) {
            throw ValidationError(context + "feature matrix has " + std::to_string(s.features.rows()) +
                                  " rows, expected N=" + std::to_string(n));
        }
        if (s.features.cols() != d) {
            throw ValidationError(context + "feature matrix has D=" + std::to_string(s.features.cols()) +
                                  " but t=1 has D=" + std::to_string(d));
        }
        for (Eigen::Index i = 0; i < s.features.rows(); ++i) {
            for (Eigen::Index j = 0; j < s.features.cols(); ++j) {
                if (!std::isfinite(s.features(i, j))) {
                    std::ostringstream os;
                    os << context << "feature entry (" << i << "," << j << ") is not finite";
                    throw ValidationError(os.str());
                }
            }
        }
    }
    return graph;
}

std::vector<Matrix> zero_mean_normalize(std::span<const Matrix> series) {
    if (series.empty()) {
        throw ValidationError("zero_mean_normalize: empty series");
    }
    const auto rows = series.front().rows();
    const auto cols = series.front().cols();
    Vector sum = Vector::Zero(cols);
    for (std::size_t t = 0; t < series.size(); ++t) {
        if (series[t].rows() != rows || series[t].cols() != cols) {
            throw ValidationError("zero_mean_normalize: matrix " + std::to_string(t) + " has shape " +
                                  std::to_string(series[t].rows()) + "x" + std::to_string(series[t].cols()) +
                                  ", expected " + std::to_string(rows) + "x" + std::to_string(cols));
        }
        sum += series[t].colwise().sum().transpose();
    }
    const double count = static_cast<double>(rows) * static_cast<double>(series.size());
    const Vector mean = count > 0 ? Vector(sum / count) : Vector::Zero(cols);
    std::vector<Matrix> out;
    out.reserve(series.size());
    for (const Matrix& m : series) {
        out.push_back(m.rowwise() - mean.transpose());
    }
    return out;
}

std::size_t count_undirected_edges(const Matrix& adjacency) {
    std::size_t edges = 0;
    for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < adjacency.cols(); ++j) {
            if (adjacency(i, j) != 0.0 || adjacency(j, i) != 0.0) {
                ++edges;
            }
        }
    }
    return edges;
}

}  // namespace dgx
