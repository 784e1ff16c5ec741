#include "dprn/pgm.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

namespace dprn {
namespace {

[[noreturn]] void fail(std::size_t offset, const std::string& what) {
    throw ParseError("PGM parse error at byte offset " + std::to_string(offset) + ": " + what);
}

bool is_space(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

// Skips whitespace and '#' comments (comments run to end of line).
void skip_separators(const std::string& b, std::size_t& p) {
    while (p < b.size()) {
        if (is_space(b[p])) {
            ++p;
        } else if (b[p] == '#') {
            while (p < b.size() && b[p] != '\n') ++p;
        } else {
            break;
        }
    }
}

unsigned parse_uint(const std::string& b, std::size_t& p, const char* field) {
    skip_separators(b, p);
    if (p >= b.size() || b[p] < '0' || b[p] > '9')
        fail(p, std::string("expected unsigned integer for ") + field);
    unsigned long v = 0;
    while (p < b.size() && b[p] >= '0' && b[p] <= '9') {
        v = v * 10 + static_cast<unsigned long>(b[p] - '0');
        if (v > 1u << 30) fail(p, std::string(field) + " out of range");
        ++p;
    }
    return static_cast<unsigned>(v);
}

}  // namespace

GrayImage decode_pgm(const std::string& bytes) {
    if (bytes.size() < 2) fail(0, "file too short for a PNM magic");
    if (bytes[0] != 'P' || bytes[1] != '5') {
        if (bytes[0] == 'P' && bytes[1] >= '1' && bytes[1] <= '6')
            fail(0, std::string("unsupported PNM variant P") + bytes[1] +
                        " (only binary P5 is supported)");
        fail(0, "not a PGM file (missing P5 magic)");
    }
    std::size_t p = 2;
    const unsigned width = parse_uint(bytes, p, "width");
    const unsigned height = parse_uint(bytes, p, "height");
    const unsigned maxval = parse_uint(bytes, p, "maxval");
    if (width == 0 || height == 0) fail(p, "zero image dimension");
    if (maxval != 255) fail(p, "unsupported maxval " + std::to_string(maxval) + " (need 255)");
    if (p >= bytes.size() || !is_space(bytes[p])) fail(p, "expected single whitespace after maxval");
    ++p;  // exactly one separator byte before the raster

    const std::size_t need = static_cast<std::size_t>(width) * height;
    if (bytes.size() - p < need)
        fail(bytes.size(), "truncated raster: need " + std::to_string(need) + " bytes, have " +
                               std::to_string(bytes.size() - p));
    GrayImage img(static_cast<int>(height), static_cast<int>(width));
    for (std::size_t i = 0; i < need; ++i)
        img.pixels[i] = static_cast<double>(static_cast<std::uint8_t>(bytes[p + i])) / 255.0;
    return img;
}

std::string encode_pgm(const GrayImage& img) {
    std::ostringstream out;
    out << "P5\n" << img.width << " " << img.height << "\n255\n";
    std::string header = out.str();
    std::string data;
    data.reserve(header.size() + img.size());
    data = std::move(header);
    for (double v : img.pixels) {
        const double clamped = v < 0.0 ? 0.0 : (v > 1.0 ? 1.0 : v);
        data.push_back(static_cast<char>(
            static_cast<std::uint8_t>(std::lround(clamped * 255.0))));
    }
    return data;
}

GrayImage load_pgm(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ParseError("cannot open " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return decode_pgm(buf.str());
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
    const std::string bytes = encode_pgm(img);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw ParseError("cannot open " + path.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ParseError("short write to " + path.string());
}

}  // namespace dprn
