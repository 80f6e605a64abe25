#pragma once

#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "synthdr/image.hpp"
#include "synthdr/image_io.hpp"

namespace synthdr {

inline constexpr uint64_t kDefaultMinVisiblePixels = 25;

// Inclusive pixel bounds; a single-pixel object is (x, y, x, y).
struct PixelBox {
    int x_min = 0, y_min = 0, x_max = 0, y_max = 0;
};

// Normalized center-size record, YOLO line order: class cx cy w h.
struct YoloRecord {
    int class_index = 0;
    double cx = 0, cy = 0, w = 0, h = 0;
};

struct InstanceMask {
    std::vector<uint8_t> mask;  // 1 where the instance is visible
    uint64_t count = 0;         // popcount of mask
};

// Splits the id pass into per-instance binary masks. Index i holds
// instance id i + 1.
inline std::vector<InstanceMask> masks_from_id_pass(const IdBuffer& ids, uint32_t instance_count) {
    std::vector<InstanceMask> masks(instance_count);
    size_t n = ids.ids.size();
    for (auto& m : masks) m.mask.assign(n, 0);
    for (size_t i = 0; i < n; ++i) {
        uint16_t id = ids.ids[i];
        if (id >= 1 && id <= instance_count) {
            masks[id - 1].mask[i] = 1;
            ++masks[id - 1].count;
        }
    }
    return masks;
}

inline std::optional<PixelBox> bbox_from_mask(const InstanceMask& m, int width, int height) {
    PixelBox box{width, height, -1, -1};
    for (int y = 0; y < height; ++y) {
        const uint8_t* row = m.mask.data() + static_cast<size_t>(y) * width;
        for (int x = 0; x < width; ++x) {
            if (!row[x]) continue;
            box.x_min = std::min(box.x_min, x);
            box.x_max = std::max(box.x_max, x);
            box.y_min = std::min(box.y_min, y);
            box.y_max = std::max(box.y_max, y);
        }
    }
    if (box.x_max < 0) return std::nullopt;
    return box;
}

// Inclusive box with the +1 size convention, so single pixels are
// representable and the round trip is exact.
inline YoloRecord to_yolo(const PixelBox& box, int width, int height, int class_index) {
    YoloRecord r;
    r.class_index = class_index;
    r.cx = (box.x_min + box.x_max + 1) / 2.0 / width;
    r.cy = (box.y_min + box.y_max + 1) / 2.0 / height;
    r.w = static_cast<double>(box.x_max - box.x_min + 1) / width;
    r.h = static_cast<double>(box.y_max - box.y_min + 1) / height;
    return r;
}

inline PixelBox yolo_to_pixel_box(const YoloRecord& r, int width, int height) {
    PixelBox box;
    box.x_min = static_cast<int>(std::lround(r.cx * width - 0.5 * r.w * width));
    box.x_max = static_cast<int>(std::lround(r.cx * width + 0.5 * r.w * width)) - 1;
    box.y_min = static_cast<int>(std::lround(r.cy * height - 0.5 * r.h * height));
    box.y_max = static_cast<int>(std::lround(r.cy * height + 0.5 * r.h * height)) - 1;
    return box;
}

// One line per record, 6 decimal places, newline-terminated. Empty scenes
// still produce the (empty) file.
inline void write_labels(const std::vector<YoloRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open label file for writing");
    char line[160];
    for (const YoloRecord& r : records) {
        std::snprintf(line, sizeof line, "%d %.6f %.6f %.6f %.6f\n", r.class_index, r.cx, r.cy,
                      r.w, r.h);
        out << line;
    }
    if (!out) throw std::runtime_error(path + ": write failed");
}

inline void write_mask_image(const IdBuffer& ids, const std::string& path) {
    write_mask_png(path, ids);
}

// Labels for one rendered scene: instance ids 1..N with their class
// indices, filtered by the visibility threshold.
struct LabeledInstance {
    uint32_t instance_id;  // 1..N
    int class_index;
};

inline std::vector<YoloRecord> annotate_image(const IdBuffer& ids,
                                              const std::vector<LabeledInstance>& instances,
                                              uint64_t min_visible_pixels = kDefaultMinVisiblePixels) {
    uint32_t max_id = 0;
    for (const LabeledInstance& li : instances) max_id = std::max(max_id, li.instance_id);
    std::vector<InstanceMask> masks = masks_from_id_pass(ids, max_id);
    std::vector<YoloRecord> records;
    for (const LabeledInstance& li : instances) {
        const InstanceMask& m = masks[li.instance_id - 1];
        if (m.count < min_visible_pixels) continue;
        auto box = bbox_from_mask(m, ids.width, ids.height);
        if (!box) continue;
        records.push_back(to_yolo(*box, ids.width, ids.height, li.class_index));
    }
    return records;
}

}  // namespace synthdr
