#pragma once

#include <cstdint>
#include <vector>

#include "synthdr/math.hpp"

namespace synthdr {

// Linear HDR radiance, one Vec3 per pixel, row-major from the top-left.
struct RenderBuffer {
    int width = 0, height = 0;
    std::vector<Vec3> pixels;

    RenderBuffer() = default;
    RenderBuffer(int w, int h) : width(w), height(h), pixels(static_cast<size_t>(w) * h) {}

    Vec3& at(int x, int y) { return pixels[static_cast<size_t>(y) * width + x]; }
    const Vec3& at(int x, int y) const { return pixels[static_cast<size_t>(y) * width + x]; }
};

// Per-pixel instance id; 0 = background (scene box, walls, distractors).
struct IdBuffer {
    int width = 0, height = 0;
    std::vector<uint16_t> ids;

    IdBuffer() = default;
    IdBuffer(int w, int h) : width(w), height(h), ids(static_cast<size_t>(w) * h, 0) {}

    uint16_t& at(int x, int y) { return ids[static_cast<size_t>(y) * width + x]; }
    uint16_t at(int x, int y) const { return ids[static_cast<size_t>(y) * width + x]; }
};

// 8-bit sRGB, interleaved RGB.
struct ImageRgb8 {
    int width = 0, height = 0;
    std::vector<uint8_t> data;

    ImageRgb8() = default;
    ImageRgb8(int w, int h) : width(w), height(h), data(static_cast<size_t>(w) * h * 3, 0) {}

    uint8_t* pixel(int x, int y) { return data.data() + (static_cast<size_t>(y) * width + x) * 3; }
    const uint8_t* pixel(int x, int y) const {
        return data.data() + (static_cast<size_t>(y) * width + x) * 3;
    }
};

inline double srgb_encode(double linear) {
    if (linear <= 0.0031308) return 12.92 * linear;
    return 1.055 * std::pow(linear, 1.0 / 2.4) - 0.055;
}

inline double srgb_decode(double encoded) {
    if (encoded <= 0.04045) return encoded / 12.92;
    return std::pow((encoded + 0.055) / 1.055, 2.4);
}

inline uint8_t to_byte(double linear) {
    return static_cast<uint8_t>(std::lround(clamp01(srgb_encode(clamp01(linear))) * 255.0));
}

}  // namespace synthdr
