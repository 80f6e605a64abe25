#pragma once

#include "synthdr/image.hpp"
#include "synthdr/rng.hpp"

namespace synthdr {

struct PostFxConfig {
    double noise_probability = 0.1;
    double noise_amount_min = 0.005;  // fraction of pixels
    double noise_amount_max = 0.03;
    double blur_probability = 0.1;
    double blur_sigma_min = 0.5;  // pixels
    double blur_sigma_max = 2.0;
};

// What apply_postfx actually did; recorded in the dataset manifest.
struct PostFxResult {
    bool blur_applied = false;
    double blur_sigma = 0.0;
    bool noise_applied = false;
    double noise_amount = 0.0;
};

// Whole-pixel salt & pepper: each pixel is independently replaced with
// probability `amount`, black or white with equal chance across all three
// channels.
inline ImageRgb8 salt_pepper(const ImageRgb8& image, double amount, Rng& rng) {
    ImageRgb8 out = image;
    size_t n = static_cast<size_t>(image.width) * image.height;
    for (size_t i = 0; i < n; ++i) {
        if (rng.uniform() >= amount) continue;
        uint8_t v = rng.uniform() < 0.5 ? 255 : 0;
        out.data[i * 3 + 0] = v;
        out.data[i * 3 + 1] = v;
        out.data[i * 3 + 2] = v;
    }
    return out;
}

namespace detail {

// Discrete Gaussian T(i, t) = exp(-t) I_i(t) with t = sigma^2 (Lindeberg).
// Point-sampled weights break the semigroup property badly at small sigma;
// the discrete Gaussian composes exactly under convolution.
inline std::vector<double> gaussian_kernel(double sigma) {
    int radius = static_cast<int>(std::ceil(3.0 * sigma));
    double t = sigma * sigma;
    std::vector<double> k(2 * radius + 1);
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        double w = std::exp(-t) * std::cyl_bessel_i(std::abs(i), t);
        k[i + radius] = w;
        sum += w;
    }
    for (double& w : k) w /= sum;
    return k;
}

inline int reflect_index(int i, int n) {
    while (i < 0 || i >= n) {
        if (i < 0) i = -i - 1;
        if (i >= n) i = 2 * n - i - 1;
    }
    return i;
}

}  // namespace detail

// Separable convolution, kernel radius ceil(3*sigma), reflect padding,
// channels independent.
inline ImageRgb8 gaussian_blur(const ImageRgb8& image, double sigma) {
    if (sigma <= 0.0) throw std::invalid_argument("gaussian_blur: sigma must be positive");
    std::vector<double> kernel = detail::gaussian_kernel(sigma);
    int radius = static_cast<int>(kernel.size() / 2);
    int w = image.width, h = image.height;

    std::vector<double> tmp(static_cast<size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    int xi = detail::reflect_index(x + k, w);
                    acc += kernel[k + radius] * image.data[(static_cast<size_t>(y) * w + xi) * 3 + c];
                }
                tmp[(static_cast<size_t>(y) * w + x) * 3 + c] = acc;
            }

    ImageRgb8 out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
            for (int c = 0; c < 3; ++c) {
                double acc = 0.0;
                for (int k = -radius; k <= radius; ++k) {
                    int yi = detail::reflect_index(y + k, h);
                    acc += kernel[k + radius] * tmp[(static_cast<size_t>(yi) * w + x) * 3 + c];
                }
                out.data[(static_cast<size_t>(y) * w + x) * 3 + c] =
                    static_cast<uint8_t>(std::clamp(std::lround(acc), 0L, 255L));
            }
    return out;
}

// Independent per-effect decisions; blur runs before noise so the grain
// survives, as sensor noise does.
inline ImageRgb8 apply_postfx(const ImageRgb8& image, const PostFxConfig& config, Rng& rng,
                              PostFxResult* result = nullptr) {
    PostFxResult r;
    r.blur_applied = rng.uniform() < config.blur_probability;
    if (r.blur_applied) r.blur_sigma = rng.uniform(config.blur_sigma_min, config.blur_sigma_max);
    r.noise_applied = rng.uniform() < config.noise_probability;
    if (r.noise_applied)
        r.noise_amount = rng.uniform(config.noise_amount_min, config.noise_amount_max);

    ImageRgb8 out = image;
    if (r.blur_applied) out = gaussian_blur(out, r.blur_sigma);
    if (r.noise_applied) out = salt_pepper(out, r.noise_amount, rng);
    if (result) *result = r;
    return out;
}

}  // namespace synthdr
