#pragma once

#include <array>
#include <cstdint>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "cbricks/error.hpp"

namespace cbricks::io {

using Rgb = std::array<std::uint8_t, 3>;

struct Raster {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;  // row-major RGB

    Raster() = default;
    Raster(std::size_t w, std::size_t h, Rgb fill) : width(w), height(h), pixels(w * h * 3) {
        for (std::size_t i = 0; i < w * h; ++i) set(i % w, i / w, fill);
    }

    void set(std::size_t x, std::size_t y, Rgb c) {
        const std::size_t o = (y * width + x) * 3;
        pixels[o] = c[0];
        pixels[o + 1] = c[1];
        pixels[o + 2] = c[2];
    }

    Rgb at(std::size_t x, std::size_t y) const {
        const std::size_t o = (y * width + x) * 3;
        return {pixels[o], pixels[o + 1], pixels[o + 2]};
    }

    void fill_rect(std::size_t x0, std::size_t y0, std::size_t w, std::size_t h, Rgb c) {
        for (std::size_t y = y0; y < y0 + h && y < height; ++y)
            for (std::size_t x = x0; x < x0 + w && x < width; ++x) set(x, y, c);
    }

    bool operator==(const Raster&) const = default;
};

/// Binary portable pixmap (P6, maxval 255).
inline void write_ppm(std::ostream& os, const Raster& r) {
    os << "P6\n" << r.width << ' ' << r.height << "\n255\n";
    os.write(reinterpret_cast<const char*>(r.pixels.data()), static_cast<std::streamsize>(r.pixels.size()));
}

inline void write_ppm(const std::string& path, const Raster& r) {
    std::ofstream os(path, std::ios::binary);
    require(static_cast<bool>(os), "cannot open " + path + " for writing");
    write_ppm(os, r);
}

}  // namespace cbricks::io
