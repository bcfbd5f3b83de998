#include "dgx/bytes.hpp"
#include "dgx/model.hpp"

#include <json.hpp>

#include <fstream>
#include <iterator>

namespace dgx {

namespace {

constexpr std::string_view kMagic = "DGXW";
constexpr std::uint32_t kVersion = 1;

ModelParams skeleton_from_header(const nlohmann::json& header) {
    ModelParams p;
    p.gcn.activation = parse_activation(header.at("gcn_activation").get<std::string>());
    p.head.kind = parse_head_kind(header.at("head_kind").get<std::string>());
    p.head.mode = parse_regression_mode(header.at("regression_mode").get<std::string>());
    p.init_seed = header.at("init_seed").get<std::uint64_t>();
    const auto& list = header.at("tensors");
    std::size_t layers = 0;
    for (const auto& t : list) {
        if (t.at("name").get<std::string>().starts_with("gcn.w")) {
            ++layers;
        }
    }
    p.gcn.weights.resize(layers);
    return p;
}

}  // namespace

std::string encode_params(const ModelParams& params) {
    validate_params(params);
    nlohmann::json header;
    header["format"] = "dgx-weights";
    header["gcn_activation"] = std::string(to_string(params.gcn.activation));
    header["head_kind"] = std::string(to_string(params.head.kind));
    header["regression_mode"] = std::string(to_string(params.head.mode));
    header["h0"] = "zeros";
    header["init"] = "uniform(-1/sqrt(fan_in), 1/sqrt(fan_in))";
    header["init_seed"] = params.init_seed;
    header["byte_order"] = "little";
    header["element_order"] = "row_major";
    nlohmann::json list = nlohmann::json::array();
    for (const ConstTensorView& t : tensors(params)) {
        list.push_back({{"name", t.name}, {"rows", t.rows}, {"cols", t.cols}});
    }
    header["tensors"] = std::move(list);
    const std::string header_text = header.dump();

    std::string out;
    out.append(kMagic);
    append_u32_le(out, kVersion);
    append_u64_le(out, header_text.size());
    out.append(header_text);
    for (const ConstTensorView& t : tensors(params)) {
        const Eigen::Map<const Matrix> m(t.data, t.rows, t.cols);
        for (Eigen::Index i = 0; i < t.rows; ++i) {
            for (Eigen::Index j = 0; j < t.cols; ++j) {
                append_f64_le(out, m(i, j));
            }
        }
    }
    return out;
}

ModelParams decode_params(std::string_view bytes) {
    ByteReader in(bytes, "weight file");
    if (bytes.size() < kMagic.size() || bytes.substr(0, kMagic.size()) != kMagic) {
        throw FormatError("weight file: bad magic bytes (expected \"DGXW\")");
    }
    in.skip(kMagic.size());
    const std::uint32_t version = in.u32();
    if (version != kVersion) {
        throw FormatError("weight file: unsupported format version " + std::to_string(version) + " (expected " +
                          std::to_string(kVersion) + ")");
    }
    const std::uint64_t header_len = in.u64();
    const std::string_view header_text = in.take(header_len);
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weight file: header is not valid JSON: ") + e.what());
    }

    ModelParams p;
    try {
        p = skeleton_from_header(header);
    } catch (const nlohmann::json::exception& e) {
        throw FormatError(std::string("weight file: malformed header: ") + e.what());
    }
    const auto& list = header.at("tensors");
    std::uint64_t payload = 0;
    for (const auto& t : list) {
        payload += t.at("rows").get<std::uint64_t>() * t.at("cols").get<std::uint64_t>() * 8;
    }
    if (in.remaining() < payload) {
        throw FormatError("weight file: truncated payload (" + std::to_string(in.remaining()) + " bytes, header declares " +
                          std::to_string(payload) + ")");
    }
    if (in.remaining() > payload) {
        throw FormatError("weight file: shape header inconsistent with payload (" + std::to_string(in.remaining() - payload) +
                          " trailing bytes)");
    }

    // Resize every destination tensor from the header, then fill in declaration order.
    std::vector<std::pair<std::string, std::pair<Eigen::Index, Eigen::Index>>> shapes;
    for (const auto& t : list) {
        shapes.push_back({t.at("name").get<std::string>(),
                          {t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>()}});
    }
    auto resize = [&](const std::string& name, auto& m) {
        for (const auto& [n, shape] : shapes) {
            if (n == name) {
                if constexpr (std::is_same_v<std::decay_t<decltype(m)>, Vector>) {
                    if (shape.second != 1) {
                        throw FormatError("weight file: tensor " + name + " must have one column");
                    }
                    m.resize(shape.first);
                } else {
                    m.resize(shape.first, shape.second);
                }
                return;
            }
        }
        throw FormatError("weight file: missing tensor " + name);
    };
    for (std::size_t l = 0; l < p.gcn.weights.size(); ++l) {
        resize("gcn.w" + std::to_string(l), p.gcn.weights[l]);
    }
    resize("gru.w_ir", p.gru.w_ir);
    resize("gru.w_iz", p.gru.w_iz);
    resize("gru.w_in", p.gru.w_in);
    resize("gru.w_hr", p.gru.w_hr);
    resize("gru.w_hz", p.gru.w_hz);
    resize("gru.w_hn", p.gru.w_hn);
    resize("gru.b_ir", p.gru.b_ir);
    resize("gru.b_hr", p.gru.b_hr);
    resize("gru.b_iz", p.gru.b_iz);
    resize("gru.b_hz", p.gru.b_hz);
    resize("gru.b_in", p.gru.b_in);
    resize("gru.b_hn", p.gru.b_hn);
    resize("head.w1", p.head.w1);
    resize("head.b1", p.head.b1);
    resize("head.w2", p.head.w2);
    resize("head.b2", p.head.b2);

    auto views = tensors(p);
    if (views.size() != shapes.size()) {
        throw FormatError("weight file: header declares " + std::to_string(shapes.size()) + " tensors, expected " +
                          std::to_string(views.size()));
    }
    for (std::size_t k = 0; k < views.size(); ++k) {
        if (views[k].name != shapes[k].first) {
            throw FormatError("weight file: tensor " + std::to_string(k) + " is " + shapes[k].first + ", expected " +
                              views[k].name);
        }
        Eigen::Map<Matrix> m(views[k].data, views[k].rows, views[k].cols);
        for (Eigen::Index i = 0; i < views[k].rows; ++i) {
            for (Eigen::Index j = 0; j < views[k].cols; ++j) {
                m(i, j) = in.f64();
            }
        }
    }
    try {
        validate_params(p);
    } catch (const ValidationError& e) {
        throw FormatError(std::string("weight file: inconsistent shapes: ") + e.what());
    }
    return p;
}

void save_params(const ModelParams& params, const std::filesystem::path& path) {
    write_file(path, encode_params(params));
}

ModelParams load_params(const std::filesystem::path& path) { return decode_params(read_file(path)); }

}  // namespace dgx
