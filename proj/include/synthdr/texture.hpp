#pragma once

#include <memory>
#include <string>
#include <vector>

#include "synthdr/image.hpp"
#include "synthdr/image_io.hpp"
#include "synthdr/math.hpp"

namespace synthdr {

// Decoded, linearized RGB texture. All shading happens in linear space;
// sRGB decode is applied once at load.
struct TextureImage {
    int width = 0, height = 0;
    std::vector<float> rgb;  // 3 floats per pixel, values in [0, 1]

    Vec3 texel(int x, int y) const {
        const float* p = rgb.data() + (static_cast<size_t>(y) * width + x) * 3;
        return {p[0], p[1], p[2]};
    }
};

inline TextureImage make_constant_texture(const Vec3& color) {
    TextureImage t;
    t.width = t.height = 1;
    t.rgb = {static_cast<float>(color.x), static_cast<float>(color.y), static_cast<float>(color.z)};
    return t;
}

inline TextureImage load_texture(const std::string& path, bool srgb = true) {
    DecodedImage img = read_image_file(path);
    TextureImage t;
    t.width = img.width;
    t.height = img.height;
    t.rgb.resize(static_cast<size_t>(img.width) * img.height * 3);
    size_t n = static_cast<size_t>(img.width) * img.height;
    for (size_t i = 0; i < n; ++i) {
        for (int c = 0; c < 3; ++c) {
            uint8_t byte = img.channels == 1 ? img.data[i] : img.data[i * img.channels + c];
            double v = byte / 255.0;
            t.rgb[i * 3 + c] = static_cast<float>(srgb ? srgb_decode(v) : v);
        }
    }
    return t;
}

// Bilinear sample with wraparound addressing; u,v in texture repeats.
inline Vec3 sample_bilinear_wrap(const TextureImage& tex, double u, double v) {
    double x = u * tex.width - 0.5;
    double y = v * tex.height - 0.5;
    double fx = std::floor(x), fy = std::floor(y);
    double ax = x - fx, ay = y - fy;
    auto wrap = [](long i, int n) {
        long m = i % n;
        return static_cast<int>(m < 0 ? m + n : m);
    };
    int x0 = wrap(static_cast<long>(fx), tex.width);
    int x1 = wrap(static_cast<long>(fx) + 1, tex.width);
    int y0 = wrap(static_cast<long>(fy), tex.height);
    int y1 = wrap(static_cast<long>(fy) + 1, tex.height);
    Vec3 c00 = tex.texel(x0, y0), c10 = tex.texel(x1, y0);
    Vec3 c01 = tex.texel(x0, y1), c11 = tex.texel(x1, y1);
    return lerp(lerp(c00, c10, ax), lerp(c01, c11, ax), ay);
}

// Triplanar projection for meshes without UVs: blend of the three planar
// projections weighted by |normal|, normalized to sum 1. tiling_scale is
// meters per texture repeat.
inline Vec3 triplanar_lookup(const TextureImage& tex, const Vec3& point, const Vec3& normal,
                             double tiling_scale) {
    Vec3 w{std::abs(normal.x), std::abs(normal.y), std::abs(normal.z)};
    double sum = w.x + w.y + w.z;
    if (sum < 1e-12) {
        w = {0, 0, 1};
        sum = 1.0;
    }
    w = w / sum;
    double inv = 1.0 / tiling_scale;
    Vec3 cx = sample_bilinear_wrap(tex, point.y * inv, point.z * inv);  // yz plane
    Vec3 cy = sample_bilinear_wrap(tex, point.x * inv, point.z * inv);  // xz plane
    Vec3 cz = sample_bilinear_wrap(tex, point.x * inv, point.y * inv);  // xy plane
    return cx * w.x + cy * w.y + cz * w.z;
}

}  // namespace synthdr
