#include "flowscale/gridio.hpp"

#include <png.h>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace flowscale {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'G', 'D'};

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
           (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

}  // namespace

void write_grid(const Grid& g, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_grid: cannot open " + path);
    out.write(kMagic, 4);
    put_u32(out, static_cast<std::uint32_t>(g.channels));
    put_u32(out, static_cast<std::uint32_t>(g.height));
    put_u32(out, static_cast<std::uint32_t>(g.width));
    for (double v : g.data) {
        const float f = static_cast<float>(v);
        std::uint32_t bits;
        std::memcpy(&bits, &f, 4);
        put_u32(out, bits);
    }
    if (!out) throw std::runtime_error("write_grid: write failed for " + path);
}

Grid read_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_grid: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("read_grid: bad magic in " + path);
    const std::uint32_t c = get_u32(in), h = get_u32(in), w = get_u32(in);
    if (!in || c == 0 || h == 0 || w == 0)
        throw std::runtime_error("read_grid: bad header in " + path);
    Grid g(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
    for (double& v : g.data) {
        const std::uint32_t bits = get_u32(in);
        float f;
        std::memcpy(&f, &bits, 4);
        v = f;
    }
    if (!in) throw std::runtime_error("read_grid: truncated data in " + path);
    return g;
}

void write_png(const Grid& g, const std::string& path, double lo, double hi) {
    if (g.channels != 1 && g.channels != 3)
        throw std::invalid_argument("write_png: only 1 or 3 channels supported");
    if (!(hi > lo)) throw std::invalid_argument("write_png: window must satisfy hi > lo");
    FILE* fp = std::fopen(path.c_str(), "wb");
    if (!fp) throw std::runtime_error("write_png: cannot open " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_write_struct(&png, &info);
        std::fclose(fp);
        throw std::runtime_error("write_png: libpng failure for " + path);
    }
    png_init_io(png, fp);
    png_set_IHDR(png, info, g.width, g.height, 8,
                 g.channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    std::vector<png_byte> row(static_cast<size_t>(g.width) * g.channels);
    const double scale = 255.0 / (hi - lo);
    for (int y = 0; y < g.height; ++y) {
        for (int x = 0; x < g.width; ++x) {
            for (int c = 0; c < g.channels; ++c) {
                double u = (g.at(c, y, x) - lo) * scale;
                u = u < 0.0 ? 0.0 : (u > 255.0 ? 255.0 : u);
                row[static_cast<size_t>(x) * g.channels + c] =
                    static_cast<png_byte>(std::lround(u));
            }
        }
        png_write_row(png, row.data());
    }
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
}

Grid read_png(const std::string& path, double lo, double hi) {
    FILE* fp = std::fopen(path.c_str(), "rb");
    if (!fp) throw std::runtime_error("read_png: cannot open " + path);
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info || setjmp(png_jmpbuf(png))) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("read_png: libpng failure for " + path);
    }
    png_init_io(png, fp);
    png_read_info(png, info);
    const int w = static_cast<int>(png_get_image_width(png, info));
    const int h = static_cast<int>(png_get_image_height(png, info));
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth != 8 || (color != PNG_COLOR_TYPE_GRAY && color != PNG_COLOR_TYPE_RGB)) {
        png_destroy_read_struct(&png, &info, nullptr);
        std::fclose(fp);
        throw std::runtime_error("read_png: unsupported format in " + path);
    }
    const int channels = color == PNG_COLOR_TYPE_GRAY ? 1 : 3;
    Grid g(channels, h, w);
    std::vector<png_byte> row(static_cast<size_t>(w) * channels);
    const double scale = (hi - lo) / 255.0;
    for (int y = 0; y < h; ++y) {
        png_read_row(png, row.data(), nullptr);
        for (int x = 0; x < w; ++x) {
            for (int c = 0; c < channels; ++c) {
                g.at(c, y, x) = lo + row[static_cast<size_t>(x) * channels + c] * scale;
            }
        }
    }
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    return g;
}

std::uint64_t spec_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

struct CsvWriter::Impl {
    std::ofstream out;
};

CsvWriter::CsvWriter(const std::string& path, const std::string& header,
                     std::uint64_t spec_hash)
    : impl_(new Impl) {
    impl_->out.open(path, std::ios::binary);  // binary: identical bytes on every platform
    if (!impl_->out) {
        delete impl_;
        throw std::runtime_error("CsvWriter: cannot open " + path);
    }
    char prov[128];
    std::snprintf(prov, sizeof(prov), "# %s spec_hash=%016llx", kToolVersion,
                  static_cast<unsigned long long>(spec_hash));
    impl_->out << prov << "\n" << header << "\n";
}

CsvWriter::~CsvWriter() { delete impl_; }

void CsvWriter::raw_line(const std::string& line) { impl_->out << line << "\n"; }

void CsvWriter::row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->out << ",";
        impl_->out << cells[i];
    }
    impl_->out << "\n";
}

std::string CsvWriter::num(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

std::string CsvWriter::num(long long v) { return std::to_string(v); }

}  // namespace flowscale
