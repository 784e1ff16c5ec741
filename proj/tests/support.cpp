#include "support.hpp"

#include <filesystem>

#include "dprn/pgm.hpp"

namespace dprn::testing {

void write_synthetic_corpus(const std::filesystem::path& dir, int count, int h, int w,
                            std::uint64_t seed) {
    std::filesystem::create_directories(dir);
    for (int i = 0; i < count; ++i) {
        char name[32];
        std::snprintf(name, sizeof(name), "img%02d.pgm", i);
        save_pgm(synthetic_image(seed + static_cast<std::uint64_t>(i) * 1000003ULL, h, w),
                 dir / name);
    }
}

}  // namespace dprn::testing
