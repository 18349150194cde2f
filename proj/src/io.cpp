#include "lsseg/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace lsseg {

namespace {

void put_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                          static_cast<unsigned char>((v >> 8) & 0xff),
                          static_cast<unsigned char>((v >> 16) & 0xff),
                          static_cast<unsigned char>((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

uint32_t get_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

void put_f32le(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    put_u32le(os, u);
}

float get_f32le(std::istream& is) {
    uint32_t u = get_u32le(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

int pgm_token(std::istream& is) {
    // Skips whitespace and '#' comments.
    int c = is.get();
    while (c != EOF) {
        if (c == '#') {
            while (c != EOF && c != '\n') c = is.get();
        } else if (!std::isspace(c)) {
            break;
        }
        c = is.get();
    }
    if (c == EOF) throw IoError("pgm: unexpected end of header");
    int v = 0;
    while (c != EOF && std::isdigit(c)) {
        v = v * 10 + (c - '0');
        c = is.get();
    }
    return v;
}

}  // namespace

void write_fgrd(const std::string& path, const Grid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os.write("FGRD", 4);
    os.put(0x01);
    put_u32le(os, static_cast<uint32_t>(g.height));
    put_u32le(os, static_cast<uint32_t>(g.width));
    for (double v : g.values) put_f32le(os, static_cast<float>(v));
    if (!os) throw IoError("write failed: " + path);
}

Grid read_fgrd(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "FGRD", 4) != 0) throw IoError("not an FGRD file: " + path);
    int version = is.get();
    if (version != 0x01) throw IoError("unsupported FGRD version in " + path);
    uint32_t h = get_u32le(is), w = get_u32le(is);
    if (!is || h == 0 || w == 0 || h > 1u << 20 || w > 1u << 20)
        throw IoError("bad FGRD dimensions in " + path);
    Grid g(static_cast<int>(h), static_cast<int>(w));
    for (double& v : g.values) v = static_cast<double>(get_f32le(is));
    if (!is) throw IoError("truncated FGRD file: " + path);
    return g;
}

void write_pgm(const std::string& path, const Grid& g) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P5\n" << g.width << " " << g.height << "\n255\n";
    for (double v : g.values) {
        double c = std::clamp(v, 0.0, 1.0);
        os.put(static_cast<char>(static_cast<int>(std::lround(c * 255.0))));
    }
    if (!os) throw IoError("write failed: " + path);
}

Grid read_pgm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char m0 = static_cast<char>(is.get()), m1 = static_cast<char>(is.get());
    if (m0 != 'P' || m1 != '5') throw IoError("not a binary PGM (P5): " + path);
    int w = pgm_token(is);
    int h = pgm_token(is);
    int maxval = pgm_token(is);
    if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255)
        throw IoError("unsupported PGM header in " + path);
    Grid g(h, w);
    std::vector<unsigned char> buf(static_cast<size_t>(h) * w);
    is.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size()));
    if (!is) throw IoError("truncated PGM file: " + path);
    for (size_t i = 0; i < buf.size(); ++i) g.values[i] = buf[i] / static_cast<double>(maxval);
    return g;
}

Grid read_pgm_mask(const std::string& path) {
    Grid g = read_pgm(path);
    return threshold(g, 0.5);
}

Grid read_image(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    is.close();
    if (std::memcmp(magic, "FGRD", 4) == 0) return read_fgrd(path);
    if (magic[0] == 'P' && magic[1] == '5') return read_pgm(path);
    throw IoError("unrecognized image format: " + path);
}

void write_ppm_overlay(const std::string& path, const Grid& image, const Grid& mask,
                       bool contour_only) {
    check_same_shape(image, mask, "render");
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot open for writing: " + path);
    os << "P6\n" << image.width << " " << image.height << "\n255\n";
    auto is_contour = [&](int i, int j) {
        if (mask.at(i, j) <= 0.5) return false;
        const int di[4] = {1, -1, 0, 0}, dj[4] = {0, 0, 1, -1};
        for (int n = 0; n < 4; ++n) {
            int ni = i + di[n], nj = j + dj[n];
            if (ni < 0 || ni >= mask.height || nj < 0 || nj >= mask.width) return true;
            if (mask.at(ni, nj) <= 0.5) return true;
        }
        return false;
    };
    for (int i = 0; i < image.height; ++i)
        for (int j = 0; j < image.width; ++j) {
            double v = std::clamp(image.at(i, j), 0.0, 1.0);
            double r = v, g = v, b = v;
            if (contour_only) {
                if (is_contour(i, j)) {
                    r = 1.0;
                    g = b = 0.0;
                }
            } else if (mask.at(i, j) > 0.5) {
                r = 0.6 * v + 0.4;
                g = 0.6 * v;
                b = 0.6 * v;
            }
            os.put(static_cast<char>(std::lround(r * 255.0)));
            os.put(static_cast<char>(std::lround(g * 255.0)));
            os.put(static_cast<char>(std::lround(b * 255.0)));
        }
    if (!os) throw IoError("write failed: " + path);
}

}  // namespace lsseg
