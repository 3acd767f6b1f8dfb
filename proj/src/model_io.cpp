#include "liftguard/model_io.hpp"

#include <fstream>
#include <sstream>

#include <boost/crc.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include "liftguard/errors.hpp"

namespace liftguard {

namespace {

using nlohmann::json;

std::string_view activation_name(Activation a) {
    switch (a) {
        case Activation::Relu: return "relu";
        case Activation::Softmax: return "softmax";
        case Activation::Identity: return "identity";
    }
    return "?";
}

Activation activation_from(const std::string& s) {
    if (s == "relu") return Activation::Relu;
    if (s == "softmax") return Activation::Softmax;
    if (s == "identity") return Activation::Identity;
    throw FormatError(fmt::format("unknown activation '{}'", s));
}

json row_major(const Eigen::MatrixXd& m) {
    json out = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < m.cols(); ++c) out.push_back(m(r, c));
    }
    return out;
}

json vector_json(const Eigen::VectorXd& v) {
    return json(std::vector<double>(v.data(), v.data() + v.size()));
}

Eigen::MatrixXd matrix_from(const json& j, Eigen::Index rows, Eigen::Index cols,
                            std::string_view what) {
    if (!j.is_array() || j.size() != static_cast<std::size_t>(rows * cols)) {
        throw FormatError(fmt::format("{} should hold {}x{} values", what, rows, cols));
    }
    Eigen::MatrixXd m(rows, cols);
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[k++].get<double>();
    }
    return m;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index n, std::string_view what) {
    return matrix_from(j, n, 1, what);
}

json to_document(const ModelParams& m) {
    json lstm = json::array();
    for (const auto& layer : m.lstm) {
        json gates;
        json biases;
        for (auto [g, name] : {std::pair{Gate::Input, "i"}, std::pair{Gate::Forget, "f"},
                               std::pair{Gate::Output, "o"}, std::pair{Gate::Candidate, "c"}}) {
            gates[name] = row_major(layer.gate_weights(g));
            biases[name] = vector_json(layer.gate_bias(g));
        }
        lstm.push_back({{"input", layer.input()},
                        {"hidden", layer.hidden()},
                        {"W", std::move(gates)},
                        {"b", std::move(biases)}});
    }
    json dense = json::array();
    for (const auto& layer : m.dense) {
        dense.push_back({{"in", layer.in()},
                         {"out", layer.out()},
                         {"activation", activation_name(layer.activation)},
                         {"W", row_major(layer.weights)},
                         {"b", vector_json(layer.bias)}});
    }
    json descriptor = {{"input_width", m.arch.input_width},
                       {"lstm_units", m.arch.lstm_units},
                       {"dense_units", m.arch.dense_units},
                       {"filter_head", m.arch.filter_head},
                       {"canonicalize", m.arch.canonicalize},
                       {"classes", {"good", "bad"}},
                       {"seed", m.seed}};
    return {{"descriptor", std::move(descriptor)},
            {"lstm", std::move(lstm)},
            {"dense", std::move(dense)}};
}

ModelParams from_document(const json& doc) {
    ModelParams m;
    const auto& d = doc.at("descriptor");
    m.arch.input_width = d.at("input_width").get<std::size_t>();
    m.arch.lstm_units = d.at("lstm_units").get<std::vector<std::size_t>>();
    m.arch.dense_units = d.at("dense_units").get<std::vector<std::size_t>>();
    m.arch.filter_head = d.at("filter_head").get<bool>();
    m.arch.canonicalize = d.at("canonicalize").get<bool>();
    m.seed = d.at("seed").get<std::uint64_t>();
    if (d.at("classes").size() != kClassCount) {
        throw FormatError("descriptor does not list exactly two classes");
    }

    for (const auto& l : doc.at("lstm")) {
        const auto in = l.at("input").get<std::size_t>();
        const auto hidden = l.at("hidden").get<std::size_t>();
        auto layer = LstmLayerParams::zeros(in, hidden);
        const auto h = static_cast<Eigen::Index>(hidden);
        for (auto [g, name] : {std::pair{Gate::Input, "i"}, std::pair{Gate::Forget, "f"},
                               std::pair{Gate::Output, "o"}, std::pair{Gate::Candidate, "c"}}) {
            layer.gate_weights(g) = matrix_from(l.at("W").at(name), h,
                                                static_cast<Eigen::Index>(hidden + in), "gate weights");
            layer.gate_bias(g) = vector_from(l.at("b").at(name), h, "gate bias");
        }
        m.lstm.push_back(std::move(layer));
    }
    for (const auto& l : doc.at("dense")) {
        const auto in = l.at("in").get<std::size_t>();
        const auto out = l.at("out").get<std::size_t>();
        DenseLayerParams layer;
        layer.activation = activation_from(l.at("activation").get<std::string>());
        layer.weights = matrix_from(l.at("W"), static_cast<Eigen::Index>(out),
                                    static_cast<Eigen::Index>(in), "dense weights");
        layer.bias = vector_from(l.at("b"), static_cast<Eigen::Index>(out), "dense bias");
        m.dense.push_back(std::move(layer));
    }
    return m;
}

}  // namespace

std::uint32_t crc32(std::string_view bytes) {
    boost::crc_32_type crc;
    crc.process_bytes(bytes.data(), bytes.size());
    return crc.checksum();
}

std::string serialize_model(const ModelParams& m) {
    m.validate();
    const std::string body = to_document(m).dump();
    return fmt::format("{} {}\n{}\ncrc32 {:08x}\n", kModelMagic, kModelFormatVersion, body,
                       crc32(body));
}

ModelParams deserialize_model(std::string_view text) {
    const auto first_nl = text.find('\n');
    if (first_nl == std::string_view::npos) throw FormatError("model file is truncated");
    const std::string_view header = text.substr(0, first_nl);
    if (header.substr(0, kModelMagic.size()) != kModelMagic ||
        header.size() <= kModelMagic.size() || header[kModelMagic.size()] != ' ') {
        throw FormatError("not a model file (bad magic)");
    }
    const std::string_view version = header.substr(kModelMagic.size() + 1);
    if (version != std::to_string(kModelFormatVersion)) {
        throw FormatError(fmt::format("unsupported model format version '{}'", version));
    }
    const auto second_nl = text.find('\n', first_nl + 1);
    if (second_nl == std::string_view::npos) throw FormatError("model file is truncated");
    const std::string_view body = text.substr(first_nl + 1, second_nl - first_nl - 1);
    std::string_view trailer = text.substr(second_nl + 1);
    if (!trailer.empty() && trailer.back() == '\n') trailer.remove_suffix(1);
    constexpr std::string_view kCrcTag = "crc32 ";
    if (trailer.substr(0, kCrcTag.size()) != kCrcTag) {
        throw FormatError("model file has no checksum trailer");
    }
    const std::string expected = fmt::format("{:08x}", crc32(body));
    if (trailer.substr(kCrcTag.size()) != expected) {
        throw FormatError("model checksum mismatch");
    }

    const json doc = json::parse(body, nullptr, false);
    if (doc.is_discarded()) throw FormatError("model document is not valid JSON");
    ModelParams m;
    try {
        m = from_document(doc);
    } catch (const json::exception& e) {
        throw FormatError(fmt::format("model document is malformed: {}", e.what()));
    }
    try {
        m.validate();
    } catch (const Error& e) {
        throw FormatError(fmt::format("model shapes are inconsistent: {}", e.what()));
    }
    return m;
}

void save_model(const ModelParams& m, const std::filesystem::path& path) {
    const std::string text = serialize_model(m);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError(fmt::format("cannot write model '{}'", path.string()));
    out << text;
    if (!out) throw FormatError(fmt::format("failed writing model '{}'", path.string()));
}

ModelParams load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(fmt::format("cannot open model '{}'", path.string()));
    std::ostringstream buf;
    buf << in.rdbuf();
    return deserialize_model(buf.str());
}

}  // namespace liftguard
