#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "synthdr/rng.hpp"
#include "synthdr/texture.hpp"

namespace synthdr {

inline constexpr double kRoughnessFloor = 0.02;  // avoids a singular specular lobe
inline constexpr double kDefaultTilingScale = 0.2;  // one texture repeat per 0.2 m

enum class TextureMode { solid, image, pbr };

inline const char* texture_mode_name(TextureMode m) {
    switch (m) {
        case TextureMode::solid: return "solid";
        case TextureMode::image: return "image";
        case TextureMode::pbr: return "pbr";
    }
    return "?";
}

// One of three texture modes; exactly one payload is meaningful.
struct MaterialSpec {
    TextureMode mode = TextureMode::solid;

    Vec3 solid_color{0.5, 0.5, 0.5};

    std::string image_path;          // image mode
    double tiling_scale = kDefaultTilingScale;

    std::string name;                // pbr mode: material set name
    std::string albedo_map_path;     // empty -> constant albedo
    Vec3 albedo_constant{0.5, 0.5, 0.5};
    double metalness = 0.0;          // [0, 1]
    double roughness = 0.6;          // [kRoughnessFloor, 1]
};

// Material bound to loaded texture data, ready for shading.
struct ResolvedMaterial {
    std::shared_ptr<const TextureImage> albedo_map;  // null -> constant
    Vec3 albedo_constant{0.5, 0.5, 0.5};
    double tiling_scale = kDefaultTilingScale;
    double metalness = 0.0;
    double roughness = 0.6;
    Vec3 emission{0, 0, 0};  // radiance; nonzero only for light surfaces
    bool diffuse_only = false;

    bool emissive() const { return emission.x > 0 || emission.y > 0 || emission.z > 0; }

    Vec3 albedo_at(const Vec3& point, const Vec3& normal) const {
        if (!albedo_map) return albedo_constant;
        return triplanar_lookup(*albedo_map, point, normal, tiling_scale);
    }
};

// Point-evaluated shading parameters. diffuse_only drops the specular lobe
// entirely (exact Lambert), used by validation scenes like the furnace box;
// user-facing materials always carry the full model.
struct ShadingParams {
    Vec3 albedo{0.5, 0.5, 0.5};
    double metalness = 0.0;
    double roughness = 0.6;
    bool diffuse_only = false;
};

// ---------------------------------------------------------------------------
// GGX microfacet BRDF with Smith height-correlated visibility and Schlick
// Fresnel, plus a Lambertian diffuse lobe scaled by (1 - metalness).
// Directions are in world space; wo and wi point away from the surface.

namespace brdf {

inline double ggx_d(double n_dot_h, double alpha) {
    double a2 = alpha * alpha;
    double d = n_dot_h * n_dot_h * (a2 - 1.0) + 1.0;
    return a2 / (kPi * d * d);
}

// Smith height-correlated visibility term V = G / (4 nv nl).
inline double smith_v(double n_dot_v, double n_dot_l, double alpha) {
    double a2 = alpha * alpha;
    double gv = n_dot_l * std::sqrt(n_dot_v * n_dot_v * (1.0 - a2) + a2);
    double gl = n_dot_v * std::sqrt(n_dot_l * n_dot_l * (1.0 - a2) + a2);
    return 0.5 / std::max(gv + gl, 1e-12);
}

inline Vec3 fresnel_schlick(double cos_theta, const Vec3& f0) {
    double f = std::pow(std::clamp(1.0 - cos_theta, 0.0, 1.0), 5.0);
    return f0 + (Vec3{1, 1, 1} - f0) * f;
}

}  // namespace brdf

// Reflectance density (1/sr). Zero when either direction lies below the
// shading hemisphere.
inline Vec3 evaluate_brdf(const ShadingParams& mat, const Vec3& wi, const Vec3& wo, const Vec3& n) {
    double n_dot_l = dot(n, wi);
    double n_dot_v = dot(n, wo);
    if (n_dot_l <= 0.0 || n_dot_v <= 0.0) return {0, 0, 0};
    if (mat.diffuse_only) return mat.albedo * (kInvPi * (1.0 - mat.metalness));

    Vec3 h = normalize(wi + wo);
    double n_dot_h = std::clamp(dot(n, h), 0.0, 1.0);
    double h_dot_v = std::clamp(dot(h, wo), 0.0, 1.0);

    double alpha = mat.roughness * mat.roughness;
    Vec3 f0 = lerp(Vec3{0.04, 0.04, 0.04}, mat.albedo, mat.metalness);
    Vec3 fresnel = brdf::fresnel_schlick(h_dot_v, f0);

    Vec3 specular = fresnel * (brdf::ggx_d(n_dot_h, alpha) * brdf::smith_v(n_dot_v, n_dot_l, alpha));
    // Fresnel-balanced diffuse (view- and light-angle factors, Shirley-style)
    // keeps the combined lobe under unit albedo at grazing incidence while
    // staying reciprocal.
    Vec3 balance = (Vec3{1, 1, 1} - brdf::fresnel_schlick(n_dot_l, f0)) *
                   (Vec3{1, 1, 1} - brdf::fresnel_schlick(n_dot_v, f0));
    Vec3 diffuse = balance * mat.albedo * (kInvPi * (1.0 - mat.metalness));
    return diffuse + specular;
}

struct BrdfSample {
    Vec3 wi;
    double pdf = 0.0;
    Vec3 reflectance;  // evaluate_brdf at (wi, wo)
};

namespace brdf {

// Lobe weights for the sampling mixture, proportional to rough energy
// estimates of the diffuse and specular terms.
inline void lobe_weights(const ShadingParams& mat, double& w_diffuse, double& w_specular) {
    double diffuse_energy = max_component(mat.albedo) * (1.0 - mat.metalness);
    double f0 = max_component(lerp(Vec3{0.04, 0.04, 0.04}, mat.albedo, mat.metalness));
    double sum = diffuse_energy + f0;
    if (sum < 1e-9) {
        w_diffuse = 0.5;
        w_specular = 0.5;
        return;
    }
    w_diffuse = diffuse_energy / sum;
    w_specular = f0 / sum;
}

inline Vec3 cosine_sample_hemisphere(const Vec3& n, Rng& rng) {
    double u1 = rng.uniform(), u2 = rng.uniform();
    double r = std::sqrt(u1);
    double phi = kTwoPi * u2;
    Vec3 t, b;
    branchless_onb(n, t, b);
    double z = std::sqrt(std::max(0.0, 1.0 - u1));
    return normalize(t * (r * std::cos(phi)) + b * (r * std::sin(phi)) + n * z);
}

// GGX NDF half-vector sampling (the D * cos(theta_h) distribution).
inline Vec3 sample_ggx_half_vector(const Vec3& n, double alpha, Rng& rng) {
    double u1 = rng.uniform(), u2 = rng.uniform();
    double a2 = alpha * alpha;
    double cos2 = (1.0 - u1) / (1.0 + (a2 - 1.0) * u1);
    double cos_t = std::sqrt(std::max(0.0, cos2));
    double sin_t = std::sqrt(std::max(0.0, 1.0 - cos2));
    double phi = kTwoPi * u2;
    Vec3 t, b;
    branchless_onb(n, t, b);
    return normalize(t * (sin_t * std::cos(phi)) + b * (sin_t * std::sin(phi)) + n * cos_t);
}

}  // namespace brdf

// pdf of the mixture sampler for a given pair; needed for MIS.
inline double brdf_pdf(const ShadingParams& mat, const Vec3& wi, const Vec3& wo, const Vec3& n) {
    double n_dot_l = dot(n, wi);
    double n_dot_v = dot(n, wo);
    if (n_dot_l <= 0.0 || n_dot_v <= 0.0) return 0.0;
    if (mat.diffuse_only) return n_dot_l * kInvPi;
    double w_diffuse, w_specular;
    brdf::lobe_weights(mat, w_diffuse, w_specular);

    double pdf_diffuse = n_dot_l * kInvPi;

    Vec3 h = normalize(wi + wo);
    double n_dot_h = std::clamp(dot(n, h), 0.0, 1.0);
    double h_dot_v = std::max(dot(h, wo), 1e-12);
    double alpha = mat.roughness * mat.roughness;
    // half-vector pdf D(h) cos(theta_h), mapped to wi via the reflection Jacobian
    double pdf_specular = brdf::ggx_d(n_dot_h, alpha) * n_dot_h / (4.0 * h_dot_v);

    return w_diffuse * pdf_diffuse + w_specular * pdf_specular;
}

inline std::optional<BrdfSample> sample_brdf(const ShadingParams& mat, const Vec3& wo, const Vec3& n,
                                             Rng& rng) {
    if (dot(n, wo) <= 0.0) return std::nullopt;
    double w_diffuse, w_specular;
    brdf::lobe_weights(mat, w_diffuse, w_specular);
    if (mat.diffuse_only) w_diffuse = 1.0;

    Vec3 wi;
    if (rng.uniform() < w_diffuse) {
        wi = brdf::cosine_sample_hemisphere(n, rng);
    } else {
        double alpha = mat.roughness * mat.roughness;
        Vec3 h = brdf::sample_ggx_half_vector(n, alpha, rng);
        wi = normalize(h * (2.0 * dot(wo, h)) - wo);
    }
    if (dot(n, wi) <= 0.0) return std::nullopt;

    double pdf = brdf_pdf(mat, wi, wo, n);
    if (pdf <= 1e-12) return std::nullopt;
    return BrdfSample{wi, pdf, evaluate_brdf(mat, wi, wo, n)};
}

// ---------------------------------------------------------------------------
// PBR material library: one subdirectory per material set, holding either
// texture maps (albedo.png/jpg) or a plain-text descriptor with constant
// values. Recognized descriptor keys: albedo r g b, metalness x, roughness x.

namespace detail {

inline bool parse_material_descriptor(const std::filesystem::path& file, MaterialSpec& spec,
                                      std::string& error) {
    std::ifstream in(file);
    if (!in) {
        error = "cannot open descriptor";
        return false;
    }
    std::string key;
    while (in >> key) {
        if (key.empty() || key[0] == '#') {
            std::string rest;
            std::getline(in, rest);
            continue;
        }
        if (key == "albedo") {
            Vec3 c;
            if (!(in >> c.x >> c.y >> c.z)) {
                error = "albedo needs three values";
                return false;
            }
            spec.albedo_constant = c;
        } else if (key == "metalness") {
            if (!(in >> spec.metalness)) {
                error = "metalness needs a value";
                return false;
            }
        } else if (key == "roughness") {
            if (!(in >> spec.roughness)) {
                error = "roughness needs a value";
                return false;
            }
        } else {
            error = "unknown descriptor key '" + key + "'";
            return false;
        }
    }
    return true;
}

}  // namespace detail

// Loads every material set under `dir`. Invalid sets are reported to
// `errors` and skipped; the rest load normally.
inline std::vector<MaterialSpec> load_material_library(const std::string& dir,
                                                       std::vector<std::string>* errors = nullptr) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(dir)) throw std::runtime_error(dir + ": material directory does not exist");

    std::vector<fs::path> entries;
    for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
    std::sort(entries.begin(), entries.end());

    std::vector<MaterialSpec> out;
    for (const fs::path& entry : entries) {
        MaterialSpec spec;
        spec.mode = TextureMode::pbr;
        spec.name = entry.filename().string();
        std::string error;
        bool ok = true;

        if (fs::is_directory(entry)) {
            for (const char* stem : {"albedo.png", "albedo.jpg", "albedo.jpeg"}) {
                if (fs::exists(entry / stem)) {
                    spec.albedo_map_path = (entry / stem).string();
                    break;
                }
            }
            fs::path desc = entry / "material.txt";
            if (fs::exists(desc)) ok = detail::parse_material_descriptor(desc, spec, error);
            else if (spec.albedo_map_path.empty()) {
                ok = false;
                error = "no albedo map and no material.txt";
            }
        } else if (entry.extension() == ".txt") {
            spec.name = entry.stem().string();
            ok = detail::parse_material_descriptor(entry, spec, error);
        } else {
            continue;  // loose files that are not descriptors
        }

        if (ok) {
            if (spec.metalness < 0.0 || spec.metalness > 1.0) {
                ok = false;
                error = "metalness " + std::to_string(spec.metalness) + " outside [0, 1]";
            } else if (spec.roughness < kRoughnessFloor || spec.roughness > 1.0) {
                ok = false;
                error = "roughness " + std::to_string(spec.roughness) + " outside [" +
                        std::to_string(kRoughnessFloor) + ", 1]";
            } else if (min_component(spec.albedo_constant) < 0.0 ||
                       max_component(spec.albedo_constant) > 1.0) {
                ok = false;
                error = "albedo outside [0, 1]";
            }
        }

        if (!ok) {
            if (errors) errors->push_back(spec.name + ": " + error);
            else std::cerr << "material " << spec.name << ": " << error << " (skipped)\n";
            continue;
        }
        out.push_back(std::move(spec));
    }
    return out;
}

}  // namespace synthdr
