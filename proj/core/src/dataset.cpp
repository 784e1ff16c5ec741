#include "dprn/dataset.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

static_assert(std::endian::native == std::endian::little,
              "DPDS/DPRN writers assume a little-endian host");

namespace dprn {
namespace {

constexpr char kMagic[4] = {'D', 'P', 'D', 'S'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in, const char* field) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw ParseError(std::string("DPDS: truncated while reading ") + field);
    return v;
}

}  // namespace

void Dataset::validate() const {
    if (inputs.rows() < 1) throw ContractError("dataset is empty");
    if (targets.rows() != inputs.rows() || dc.size() != inputs.rows())
        throw ContractError("dataset row counts differ between inputs, targets and dc");
}

void save_dpds(const Dataset& ds, const std::filesystem::path& path) {
    ds.validate();
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(ds.size()));
    put(out, static_cast<std::uint32_t>(ds.inputs.cols()));
    put(out, static_cast<std::uint32_t>(ds.targets.cols()));
    std::vector<float> record(static_cast<std::size_t>(ds.inputs.cols() + ds.targets.cols() + 1));
    for (Eigen::Index i = 0; i < ds.size(); ++i) {
        float* p = record.data();
        for (Eigen::Index j = 0; j < ds.inputs.cols(); ++j) *p++ = ds.inputs(i, j);
        for (Eigen::Index j = 0; j < ds.targets.cols(); ++j) *p++ = ds.targets(i, j);
        *p = ds.dc(i);
        out.write(reinterpret_cast<const char*>(record.data()),
                  static_cast<std::streamsize>(record.size() * sizeof(float)));
    }
    if (!out) throw ParseError("short write to " + path.string());
}

Dataset load_dpds(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw ParseError("DPDS: bad magic in " + path.string());
    const auto version = get<std::uint32_t>(in, "version");
    if (version != kVersion)
        throw ParseError("DPDS: unsupported version " + std::to_string(version));
    const auto n = get<std::uint64_t>(in, "record count");
    const auto d_in = get<std::uint32_t>(in, "input dim");
    const auto d_out = get<std::uint32_t>(in, "target dim");
    if (n == 0 || d_in == 0 || d_out == 0) throw ParseError("DPDS: zero counts in header");

    const std::uint64_t record_floats = static_cast<std::uint64_t>(d_in) + d_out + 1;
    const std::uint64_t expected_payload = n * record_floats * sizeof(float);
    const auto header_end = in.tellg();
    in.seekg(0, std::ios::end);
    const std::uint64_t actual_payload = static_cast<std::uint64_t>(in.tellg() - header_end);
    if (actual_payload != expected_payload)
        throw ParseError("DPDS: payload is " + std::to_string(actual_payload) +
                         " bytes, header declares " + std::to_string(expected_payload));
    in.seekg(header_end);

    Dataset ds;
    ds.inputs.resize(static_cast<Eigen::Index>(n), d_in);
    ds.targets.resize(static_cast<Eigen::Index>(n), d_out);
    ds.dc.resize(static_cast<Eigen::Index>(n));
    std::vector<float> record(record_floats);
    for (std::uint64_t i = 0; i < n; ++i) {
        in.read(reinterpret_cast<char*>(record.data()),
                static_cast<std::streamsize>(record.size() * sizeof(float)));
        if (!in) throw ParseError("DPDS: truncated record " + std::to_string(i));
        const float* p = record.data();
        for (std::uint32_t j = 0; j < d_in; ++j)
            ds.inputs(static_cast<Eigen::Index>(i), j) = *p++;
        for (std::uint32_t j = 0; j < d_out; ++j)
            ds.targets(static_cast<Eigen::Index>(i), j) = *p++;
        ds.dc(static_cast<Eigen::Index>(i)) = *p;
    }
    return ds;
}

}  // namespace dprn
