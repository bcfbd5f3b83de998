#include "dgx/bytes.hpp"
#include "dgx/io.hpp"
#include "dgx/rng.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace dgx {

namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split(std::string_view line, char delim) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t pos = line.find(delim, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::optional<double> parse_number(std::string_view s) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
        return std::nullopt;
    }
    return v;
}

int column_of(const std::vector<std::string_view>& header, std::initializer_list<std::string_view> names) {
    for (std::size_t k = 0; k < header.size(); ++k) {
        std::string lower(header[k]);
        std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
        for (std::string_view n : names) {
            if (lower == n) return static_cast<int>(k);
        }
    }
    return -1;
}

}  // namespace

TemporalEdgeList parse_temporal_edgelist(std::string_view text) {
    TemporalEdgeList out;
    std::map<std::string, std::size_t, std::less<>> ids;
    auto id_of = [&](std::string_view name) {
        auto it = ids.find(name);
        if (it != ids.end()) return it->second;
        const std::size_t idx = out.vocabulary.size();
        ids.emplace(std::string(name), idx);
        out.vocabulary.emplace_back(name);
        return idx;
    };

    std::size_t line_no = 0;
    std::size_t start = 0;
    char delim = ',';
    int c_src = -1, c_dst = -1, c_t = -1, c_w = -1;
    bool have_header = false;
    while (start <= text.size()) {
        const std::size_t end = text.find('\n', start);
        const std::string_view raw = text.substr(start, end == std::string_view::npos ? std::string_view::npos : end - start);
        start = end == std::string_view::npos ? text.size() + 1 : end + 1;
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty() || line.front() == '#') continue;
        if (!have_header) {
            delim = line.find('\t') != std::string_view::npos ? '\t' : ',';
            const auto header = split(line, delim);
            c_src = column_of(header, {"src", "source", "u", "from"});
            c_dst = column_of(header, {"dst", "target", "v", "to"});
            c_t = column_of(header, {"t", "time", "timestamp", "ts"});
            c_w = column_of(header, {"w", "weight"});
            if (c_src < 0 || c_dst < 0 || c_t < 0) {
                throw FormatError("edge list line " + std::to_string(line_no) +
                                  ": header must name src, dst and t columns");
            }
            have_header = true;
            continue;
        }
        const auto fields = split(line, delim);
        const int needed = std::max({c_src, c_dst, c_t, c_w});
        if (static_cast<int>(fields.size()) <= needed) {
            throw FormatError("edge list line " + std::to_string(line_no) + ": expected " +
                              std::to_string(needed + 1) + " fields, found " + std::to_string(fields.size()));
        }
        const auto t = parse_number(fields[static_cast<std::size_t>(c_t)]);
        if (!t) {
            throw FormatError("edge list line " + std::to_string(line_no) + ": unparsable timestamp '" +
                              std::string(fields[static_cast<std::size_t>(c_t)]) + "'");
        }
        double w = 1.0;
        if (c_w >= 0) {
            const auto parsed = parse_number(fields[static_cast<std::size_t>(c_w)]);
            if (!parsed || *parsed < 0.0) {
                throw FormatError("edge list line " + std::to_string(line_no) + ": unparsable weight '" +
                                  std::string(fields[static_cast<std::size_t>(c_w)]) + "'");
            }
            w = *parsed;
        }
        const std::string_view src = fields[static_cast<std::size_t>(c_src)];
        const std::string_view dst = fields[static_cast<std::size_t>(c_dst)];
        if (src.empty() || dst.empty()) {
            throw FormatError("edge list line " + std::to_string(line_no) + ": empty node id");
        }
        const std::size_t u = id_of(src);
        const std::size_t v = id_of(dst);
        out.records.push_back({u, v, *t, w});
    }
    if (!have_header) {
        throw FormatError("edge list is empty (header required)");
    }
    return out;
}

Matrix degree_features(const Matrix& adjacency) {
    const Eigen::Index n = adjacency.rows();
    const double scale = 1.0 / static_cast<double>(std::max<Eigen::Index>(1, n - 1));
    Matrix x(n, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::Index degree = 0;
        for (Eigen::Index j = 0; j < n; ++j) {
            if (j != i && adjacency(i, j) != 0.0) ++degree;
        }
        x(i, 0) = static_cast<double>(degree) * scale;
        x(i, 1) = 1.0;
    }
    return x;
}

DynamicGraph edgelist_to_graph(const TemporalEdgeList& list, const EdgeListOptions& options) {
    if (list.records.empty()) {
        throw ValidationError("edge list has no records");
    }
    if (!(options.rule.value > 0.0)) {
        throw ValidationError("snapshot rule value must be > 0");
    }
    const auto n = static_cast<Eigen::Index>(list.vocabulary.size());
    std::vector<std::size_t> order(list.records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return list.records[a].timestamp < list.records[b].timestamp;
    });

    std::size_t steps = 0;
    std::vector<std::size_t> bucket(list.records.size());
    if (options.rule.kind == SnapshotRule::Kind::count) {
        steps = static_cast<std::size_t>(options.rule.value);
        if (steps == 0 || static_cast<double>(steps) != options.rule.value) {
            throw ValidationError("snapshot count must be a positive integer");
        }
        // Equal-count buckets over the time-sorted records.
        for (std::size_t k = 0; k < order.size(); ++k) {
            bucket[order[k]] = k * steps / order.size();
        }
    } else {
        const double t0 = list.records[order.front()].timestamp;
        for (std::size_t k = 0; k < order.size(); ++k) {
            const double offset = (list.records[order[k]].timestamp - t0) / options.rule.value;
            bucket[order[k]] = static_cast<std::size_t>(std::floor(offset));
            steps = std::max(steps, bucket[order[k]] + 1);
        }
    }

    DynamicGraph g;
    for (std::size_t t = 0; t < steps; ++t) {
        g.snapshots.push_back({Matrix::Zero(n, n), Matrix(), static_cast<int>(t + 1)});
    }
    for (std::size_t k = 0; k < list.records.size(); ++k) {
        const TemporalEdge& e = list.records[k];
        Matrix& a = g.snapshots[bucket[k]].adjacency;
        const auto u = static_cast<Eigen::Index>(e.source);
        const auto v = static_cast<Eigen::Index>(e.target);
        if (options.weighted) {
            a(u, v) += e.weight;
            if (!options.directed && u != v) a(v, u) += e.weight;
        } else {
            a(u, v) = 1.0;
            if (!options.directed) a(v, u) = 1.0;
        }
    }
    for (Snapshot& s : g.snapshots) {
        s.features = degree_features(s.adjacency);
    }
    return validate_dynamic_graph(g), g;
}

DynamicGraph load_temporal_edgelist(const std::filesystem::path& path, const EdgeListOptions& options) {
    return edgelist_to_graph(parse_temporal_edgelist(read_file(path)), options);
}

Dataset make_link_task(const DynamicGraph& full, std::uint64_t seed) {
    validate_dynamic_graph(full);
    if (full.num_steps() < 2) {
        throw ValidationError("link task needs at least two snapshots (inputs + labels)");
    }
    Dataset d;
    d.graph.snapshots.assign(full.snapshots.begin(), full.snapshots.end() - 1);
    const Matrix& last = full.snapshots.back().adjacency;
    d.task.kind = HeadKind::link_prediction;
    std::vector<std::pair<std::size_t, std::size_t>> negatives;
    for (Eigen::Index i = 0; i < last.rows(); ++i) {
        for (Eigen::Index j = i + 1; j < last.cols(); ++j) {
            if (last(i, j) != 0.0 || last(j, i) != 0.0) {
                d.task.links.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), 1.0});
            } else {
                negatives.emplace_back(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
            }
        }
    }
    if (d.task.links.empty()) {
        throw ValidationError("label snapshot has no edges; cannot build a link task");
    }
    Rng rng(seed);
    const std::size_t want = std::min(d.task.links.size(), negatives.size());
    for (std::size_t k = 0; k < want; ++k) {
        const std::size_t pick = k + static_cast<std::size_t>(rng.below(negatives.size() - k));
        std::swap(negatives[k], negatives[pick]);
        d.task.links.push_back({negatives[k].first, negatives[k].second, 0.0});
    }
    return d;
}

}  // namespace dgx
