#pragma once

#include <filesystem>
#include <string>

#include "dprn/image.hpp"

namespace dprn {

/// Parses a binary PGM ("P5", maxval 255). Byte v maps to v/255 exactly.
/// Malformed input throws ParseError naming the byte offset.
GrayImage decode_pgm(const std::string& bytes);

/// Encodes as binary PGM: clamp to [0,1], scale by 255, round half away from
/// zero.
std::string encode_pgm(const GrayImage& img);

GrayImage load_pgm(const std::filesystem::path& path);
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

}  // namespace dprn
