#pragma once

#include <csetjmp>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>

#include <jpeglib.h>
#include <png.h>

#include "synthdr/image.hpp"

namespace synthdr {

namespace detail {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

inline FilePtr open_file(const std::string& path, const char* mode) {
    FilePtr f(std::fopen(path.c_str(), mode));
    if (!f) throw std::runtime_error(path + ": cannot open file");
    return f;
}

[[noreturn]] inline void png_error_fn(png_structp png, png_const_charp msg) {
    *static_cast<std::string*>(png_get_error_ptr(png)) = msg ? msg : "png error";
    longjmp(png_jmpbuf(png), 1);
}

inline void png_warn_fn(png_structp, png_const_charp) {}

}  // namespace detail

// Fixed compression settings keep written files byte-identical across runs.
inline void write_png(const std::string& path, int width, int height, int channels,
                      const uint8_t* data) {
    detail::FilePtr fp = detail::open_file(path, "wb");
    std::string errmsg;
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                              detail::png_error_fn, detail::png_warn_fn);
    if (!png) throw std::runtime_error(path + ": png_create_write_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_write_struct(&png, nullptr);
        throw std::runtime_error(path + ": png_create_info_struct failed");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw std::runtime_error(path + ": " + errmsg);
    }
    png_init_io(png, fp.get());
    png_set_compression_level(png, 6);
    png_set_filter(png, 0, PNG_FILTER_NONE);
    int color = channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB;
    png_set_IHDR(png, info, width, height, 8, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < height; ++y)
        png_write_row(png, const_cast<png_bytep>(data + static_cast<size_t>(y) * width * channels));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

inline void write_png_rgb8(const std::string& path, const ImageRgb8& img) {
    write_png(path, img.width, img.height, 3, img.data.data());
}

inline void write_mask_png(const std::string& path, const IdBuffer& ids) {
    std::vector<uint8_t> bytes(ids.ids.size());
    for (size_t i = 0; i < ids.ids.size(); ++i) {
        if (ids.ids[i] > 255)
            throw std::runtime_error(path + ": instance id " + std::to_string(ids.ids[i]) +
                                     " exceeds 8-bit mask range");
        bytes[i] = static_cast<uint8_t>(ids.ids[i]);
    }
    write_png(path, ids.width, ids.height, 1, bytes.data());
}

// Decodes PNG (any depth/type) or JPEG to 8-bit; channels = 1 or 3.
struct DecodedImage {
    int width = 0, height = 0, channels = 0;
    std::vector<uint8_t> data;
};

inline DecodedImage read_png_file(const std::string& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");
    std::string errmsg;
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &errmsg,
                                             detail::png_error_fn, detail::png_warn_fn);
    if (!png) throw std::runtime_error(path + ": png_create_read_struct failed");
    png_infop info = png_create_info_struct(png);
    if (!info) {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw std::runtime_error(path + ": png_create_info_struct failed");
    }
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw std::runtime_error(path + ": " + errmsg);
    }
    png_init_io(png, fp.get());
    png_read_info(png, info);

    png_uint_32 w = png_get_image_width(png, info);
    png_uint_32 h = png_get_image_height(png, info);
    int color = png_get_color_type(png, info);
    int depth = png_get_bit_depth(png, info);

    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    if (depth == 16) png_set_strip_16(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    int channels = png_get_channels(png, info);
    DecodedImage img;
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.channels = channels;
    img.data.resize(static_cast<size_t>(w) * h * channels);
    rows.resize(h);
    for (png_uint_32 y = 0; y < h; ++y)
        rows[y] = img.data.data() + static_cast<size_t>(y) * w * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
    png_destroy_read_struct(&png, &info, nullptr);
    return img;
}

namespace detail {
struct JpegError {
    jpeg_error_mgr pub;
    jmp_buf env;
    char msg[JMSG_LENGTH_MAX];
};

inline void jpeg_error_exit(j_common_ptr cinfo) {
    JpegError* err = reinterpret_cast<JpegError*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->msg);
    longjmp(err->env, 1);
}
}  // namespace detail

inline DecodedImage read_jpeg_file(const std::string& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");
    jpeg_decompress_struct cinfo{};
    detail::JpegError jerr{};
    cinfo.err = jpeg_std_error(&jerr.pub);
    jerr.pub.error_exit = detail::jpeg_error_exit;
    DecodedImage img;
    if (setjmp(jerr.env)) {
        jpeg_destroy_decompress(&cinfo);
        throw std::runtime_error(path + ": " + jerr.msg);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_stdio_src(&cinfo, fp.get());
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = JCS_RGB;
    jpeg_start_decompress(&cinfo);
    img.width = static_cast<int>(cinfo.output_width);
    img.height = static_cast<int>(cinfo.output_height);
    img.channels = 3;
    img.data.resize(static_cast<size_t>(img.width) * img.height * 3);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = img.data.data() + static_cast<size_t>(cinfo.output_scanline) * img.width * 3;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return img;
}

inline DecodedImage read_image_file(const std::string& path) {
    detail::FilePtr fp = detail::open_file(path, "rb");
    unsigned char magic[4] = {0};
    size_t got = std::fread(magic, 1, 4, fp.get());
    fp.reset();
    if (got >= 4 && png_sig_cmp(magic, 0, 4) == 0) return read_png_file(path);
    if (got >= 2 && magic[0] == 0xFF && magic[1] == 0xD8) return read_jpeg_file(path);
    throw std::runtime_error(path + ": not a PNG or JPEG file");
}

}  // namespace synthdr
