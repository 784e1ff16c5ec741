#pragma once

#include <filesystem>
#include <string>

#include "dprn/network.hpp"

namespace dprn {

/// DPRN file format: magic "DPRN", u32 version=1, u32 header length, JSON
/// header describing the layers (dims, activation names, tied indices), then
/// every free parameter block as little-endian float32 in flattened order.
/// Loading validates counts and finiteness; parameters round-trip exactly at
/// single precision.
std::string encode_dprn(const Network& net);
Network decode_dprn(const std::string& bytes);

void save_model(const Network& net, const std::filesystem::path& path);
Network load_model(const std::filesystem::path& path);

}  // namespace dprn
