#include "dprn/model_io.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace dprn {
namespace {

constexpr char kMagic[4] = {'D', 'P', 'R', 'N'};
constexpr std::uint32_t kVersion = 1;

nlohmann::json header_json(const Network& net) {
    nlohmann::json layers = nlohmann::json::array();
    for (const auto& spec : net.layers()) {
        nlohmann::json l;
        l["in_dim"] = spec.in_dim;
        l["out_dim"] = spec.out_dim;
        l["activation"] = to_string(spec.activation);
        if (spec.tied_to)
            l["tied_to"] = *spec.tied_to;
        else
            l["tied_to"] = nullptr;
        layers.push_back(std::move(l));
    }
    return nlohmann::json{{"layers", std::move(layers)},
                          {"parameter_count", net.parameter_count()}};
}

}  // namespace

std::string encode_dprn(const Network& net) {
    net.validate();
    const std::string header = header_json(net).dump();
    const Eigen::VectorXd params = net.flatten();

    std::string out;
    out.reserve(12 + header.size() + static_cast<std::size_t>(params.size()) * 4);
    out.append(kMagic, 4);
    const auto append_u32 = [&out](std::uint32_t v) {
        char b[4];
        std::memcpy(b, &v, 4);
        out.append(b, 4);
    };
    append_u32(kVersion);
    append_u32(static_cast<std::uint32_t>(header.size()));
    out += header;
    for (Eigen::Index i = 0; i < params.size(); ++i) {
        const float f = static_cast<float>(params(i));
        char b[4];
        std::memcpy(b, &f, 4);
        out.append(b, 4);
    }
    return out;
}

Network decode_dprn(const std::string& bytes) {
    if (bytes.size() < 12 || std::memcmp(bytes.data(), kMagic, 4) != 0)
        throw ParseError("DPRN: bad magic");
    std::uint32_t version, header_len;
    std::memcpy(&version, bytes.data() + 4, 4);
    std::memcpy(&header_len, bytes.data() + 8, 4);
    if (version != kVersion)
        throw ParseError("DPRN: unsupported version " + std::to_string(version));
    if (bytes.size() < 12 + static_cast<std::size_t>(header_len))
        throw ParseError("DPRN: truncated header: declared " + std::to_string(header_len) +
                         " bytes, file holds " + std::to_string(bytes.size() - 12));

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.substr(12, header_len));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("DPRN: header is not valid JSON: ") + e.what());
    }

    std::vector<LayerSpec> specs;
    try {
        for (const auto& l : header.at("layers")) {
            LayerSpec s;
            s.in_dim = l.at("in_dim").get<Eigen::Index>();
            s.out_dim = l.at("out_dim").get<Eigen::Index>();
            s.activation = activation_from_string(l.at("activation").get<std::string>());
            if (!l.at("tied_to").is_null()) s.tied_to = l.at("tied_to").get<std::size_t>();
            specs.push_back(s);
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("DPRN: malformed header fields: ") + e.what());
    }
    Network net;
    try {
        net = Network(std::move(specs));
    } catch (const ContractError& e) {
        throw ParseError(std::string("DPRN: inconsistent layer specs: ") + e.what());
    }

    const Eigen::Index count = net.parameter_count();
    if (header.contains("parameter_count") &&
        header["parameter_count"].get<Eigen::Index>() != count)
        throw ParseError("DPRN: header parameter_count disagrees with layer dims");
    const std::size_t expected = static_cast<std::size_t>(count) * 4;
    const std::size_t actual = bytes.size() - 12 - header_len;
    if (actual != expected)
        throw ParseError("DPRN: payload is " + std::to_string(actual) + " bytes, expected " +
                         std::to_string(expected));

    Eigen::VectorXd params(count);
    const char* p = bytes.data() + 12 + header_len;
    for (Eigen::Index i = 0; i < count; ++i) {
        float f;
        std::memcpy(&f, p + static_cast<std::size_t>(i) * 4, 4);
        if (!std::isfinite(f))
            throw ParseError("DPRN: non-finite parameter at index " + std::to_string(i));
        params(i) = static_cast<double>(f);
    }
    net.unflatten(params);
    return net;
}

void save_model(const Network& net, const std::filesystem::path& path) {
    const std::string bytes = encode_dprn(net);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("short write to " + path.string());
}

Network load_model(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return decode_dprn(buf.str());
    } catch (const ParseError& e) {
        throw ParseError(std::string(e.what()) + " (" + path.string() + ")");
    }
}

}  // namespace dprn
