#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace groklab {

// Minimal lossless PNG: 8-bit RGB, filter 0 scanlines, zlib stream made of
// stored (uncompressed) deflate blocks. Deterministic bytes for given pixels.
// The decoder accepts exactly this subset, which is all the round-trip tests
// and the dataset verifier need.
struct ImageRgb {
    int height = 0;
    int width = 0;
    std::vector<uint8_t> pixels;  // height*width*3, row-major RGB

    size_t byte_count() const { return pixels.size(); }
    uint8_t& at(int r, int c, int ch) { return pixels[(static_cast<size_t>(r) * width + c) * 3 + ch]; }
    uint8_t at(int r, int c, int ch) const {
        return pixels[(static_cast<size_t>(r) * width + c) * 3 + ch];
    }
};

ImageRgb make_image(int height, int width);

std::vector<uint8_t> encode_png(const ImageRgb& image);
ImageRgb decode_png(const std::vector<uint8_t>& bytes);

void save_png(const std::string& path, const ImageRgb& image);
ImageRgb load_png(const std::string& path);

// Raw sidecar: "GRGB" magic, little-endian u32 height, u32 width, RGB bytes.
void save_rgb(const std::string& path, const ImageRgb& image);
ImageRgb load_rgb(const std::string& path);

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed = 0);
uint32_t adler32(const uint8_t* data, size_t len);

}  // namespace groklab
