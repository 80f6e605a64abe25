#pragma once

#include "synthdr/bvh.hpp"
#include "synthdr/math.hpp"

namespace synthdr {

// Spherical-shell offset around a focus center:
// (x, y, z) = (r cos(phi) sin(theta), r sin(phi) sin(theta), r cos(theta)).
inline Vec3 spherical_offset(double r, double theta, double phi) {
    double st = std::sin(theta);
    return {r * std::cos(phi) * st, r * std::sin(phi) * st, r * std::cos(theta)};
}

struct CameraSpec {
    double r = 2.0;        // meters
    double theta = 0.8;    // polar angle, radians
    double phi = 0.0;      // azimuthal angle, radians

    Vec3 position{0, 0, 2};
    Vec3 look_at{0, 0, 0};

    double focal_length_mm = 50.0;
    double sensor_width_mm = 36.0;
    int image_width = 720;
    int image_height = 720;

    double fov_x() const { return 2.0 * std::atan(sensor_width_mm / (2.0 * focal_length_mm)); }
};

// Pinhole camera frame. Ray generation and point projection are exact
// inverses so the rasterized id pass and traced primary visibility agree.
class CameraFrame {
public:
    explicit CameraFrame(const CameraSpec& spec) : spec_(spec) {
        forward_ = normalize(spec.look_at - spec.position);
        Vec3 up_hint{0, 0, 1};
        if (std::abs(dot(forward_, up_hint)) > 0.999) up_hint = {0, 1, 0};
        right_ = normalize(cross(forward_, up_hint));
        up_ = cross(right_, forward_);
        tan_half_x_ = std::tan(spec.fov_x() * 0.5);
        tan_half_y_ = tan_half_x_ * spec.image_height / spec.image_width;
    }

    const CameraSpec& spec() const { return spec_; }

    // px, py are continuous pixel coordinates in [0, width] x [0, height];
    // pixel (i, j) has its center at (i + 0.5, j + 0.5).
    Ray ray_through(double px, double py) const {
        double sx = (2.0 * px / spec_.image_width - 1.0) * tan_half_x_;
        double sy = (1.0 - 2.0 * py / spec_.image_height) * tan_half_y_;
        Ray ray;
        ray.origin = spec_.position;
        ray.dir = normalize(forward_ + right_ * sx + up_ * sy);
        return ray;
    }

    // World point -> (px, py, camera-space depth). Depth <= 0 means behind
    // the camera.
    Vec3 project(const Vec3& world) const {
        Vec3 d = world - spec_.position;
        double zc = dot(d, forward_);
        double xc = dot(d, right_);
        double yc = dot(d, up_);
        if (zc <= 0.0) return {0, 0, zc};
        double px = (xc / (zc * tan_half_x_) + 1.0) * 0.5 * spec_.image_width;
        double py = (1.0 - yc / (zc * tan_half_y_)) * 0.5 * spec_.image_height;
        return {px, py, zc};
    }

    // Camera-space coordinates (right, up, forward depth).
    Vec3 to_camera(const Vec3& world) const {
        Vec3 d = world - spec_.position;
        return {dot(d, right_), dot(d, up_), dot(d, forward_)};
    }

    // Projection of a camera-space point; valid for z > 0.
    Vec3 project_camera(const Vec3& cam) const {
        double px = (cam.x / (cam.z * tan_half_x_) + 1.0) * 0.5 * spec_.image_width;
        double py = (1.0 - cam.y / (cam.z * tan_half_y_)) * 0.5 * spec_.image_height;
        return {px, py, cam.z};
    }

private:
    CameraSpec spec_;
    Vec3 forward_, right_, up_;
    double tan_half_x_, tan_half_y_;
};

}  // namespace synthdr
