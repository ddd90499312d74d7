#include "droplet/image.hpp"

#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <memory>
#include <sstream>

#include <png.h>

namespace droplet {

namespace {

struct FileCloser {
    void operator()(std::FILE* f) const {
        if (f) std::fclose(f);
    }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    // Rec.601 weights, rounded half-up.
    const double y = 0.299 * r + 0.587 * g + 0.114 * b;
    return static_cast<std::uint8_t>(std::floor(y + 0.5));
}

DropletImage load_png_file(const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "rb"));
    if (!fp) {
        throw BadImageError("cannot open image '" + path.string() + "'");
    }

    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw BadImageError("libpng initialization failed for '" + path.string() + "'");
    }

    std::vector<std::uint8_t> data;
    std::vector<png_bytep> rows;
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        throw BadImageError("corrupt PNG file '" + path.string() + "'");
    }

    png_init_io(png, fp.get());
    png_read_info(png, info);

    const png_uint_32 width = png_get_image_width(png, info);
    const png_uint_32 height = png_get_image_height(png, info);
    const int color_type = png_get_color_type(png, info);
    const int bit_depth = png_get_bit_depth(png, info);

    if (bit_depth == 16) png_set_strip_16(png);
    if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
    png_set_strip_alpha(png);
    png_read_update_info(png, info);

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    data.resize(rowbytes * height);
    rows.resize(height);
    for (png_uint_32 r = 0; r < height; ++r) {
        rows[r] = data.data() + r * rowbytes;
    }
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);

    const int channels = png_get_channels(png, info);
    png_destroy_read_struct(&png, &info, nullptr);

    DropletImage img(static_cast<int>(width), static_cast<int>(height));
    if (channels == 1) {
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            img.pixels[i] = data[i];
        }
    } else if (channels == 3) {
        for (std::size_t i = 0; i < img.pixel_count(); ++i) {
            img.pixels[i] = luminance(data[3 * i], data[3 * i + 1], data[3 * i + 2]);
        }
    } else {
        throw BadImageError("unsupported PNG channel count in '" + path.string() + "'");
    }
    return img;
}

DropletImage load_pgm_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw BadImageError("cannot open image '" + path.string() + "'");
    }
    std::string magic;
    in >> magic;
    if (magic != "P5") {
        throw BadImageError("'" + path.string() + "' is not a binary PGM (P5) file");
    }
    auto next_token = [&in, &path]() -> long {
        // Skips whitespace and '#' comment lines between header fields.
        while (in) {
            int c = in.peek();
            if (c == '#') {
                std::string line;
                std::getline(in, line);
            } else if (std::isspace(c)) {
                in.get();
            } else {
                break;
            }
        }
        long v = -1;
        in >> v;
        if (!in) throw BadImageError("truncated PGM header in '" + path.string() + "'");
        return v;
    };
    const long width = next_token();
    const long height = next_token();
    const long maxval = next_token();
    if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 255) {
        throw BadImageError("unsupported PGM geometry in '" + path.string() + "'");
    }
    in.get();  // single whitespace after maxval
    DropletImage img(static_cast<int>(width), static_cast<int>(height));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixel_count()));
    if (in.gcount() != static_cast<std::streamsize>(img.pixel_count())) {
        throw BadImageError("truncated PGM pixel data in '" + path.string() + "'");
    }
    return img;
}

}  // namespace

DropletImage load_image(const std::filesystem::path& path) {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) {
        throw BadImageError("cannot open image '" + path.string() + "'");
    }
    unsigned char sig[8] = {0};
    probe.read(reinterpret_cast<char*>(sig), sizeof(sig));
    probe.close();

    static const unsigned char png_sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (std::memcmp(sig, png_sig, 8) == 0) {
        return load_png_file(path);
    }
    if (sig[0] == 'P' && sig[1] == '5') {
        return load_pgm_file(path);
    }
    throw BadImageError("'" + path.string() + "' is neither PNG nor PGM (P5)");
}

void save_png(const DropletImage& image, const std::filesystem::path& path) {
    FilePtr fp(std::fopen(path.string().c_str(), "wb"));
    if (!fp) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
        png_destroy_write_struct(&png, &info);
        throw IoError("libpng initialization failed for '" + path.string() + "'");
    }
    if (setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        throw IoError("failed to write PNG '" + path.string() + "'");
    }
    png_init_io(png, fp.get());
    png_set_IHDR(png, info, image.width, image.height, 8, PNG_COLOR_TYPE_GRAY,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int r = 0; r < image.height; ++r) {
        png_write_row(png, const_cast<png_bytep>(image.pixels.data() +
                                                 static_cast<std::size_t>(r) * image.width));
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
}

void save_pgm(const DropletImage& image, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + path.string() + "' for writing");
    }
    out << "P5\n" << image.width << " " << image.height << "\n255\n";
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixel_count()));
    if (!out) {
        throw IoError("failed to write PGM '" + path.string() + "'");
    }
}

}  // namespace droplet
