#include "groklab/png.hpp"

#include <array>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace groklab {

ImageRgb make_image(int height, int width) {
    if (height < 1 || width < 1) throw std::invalid_argument("make_image: bad size");
    ImageRgb img;
    img.height = height;
    img.width = width;
    img.pixels.assign(static_cast<size_t>(height) * width * 3, 0);
    return img;
}

uint32_t crc32(const uint8_t* data, size_t len, uint32_t seed) {
    static const auto table = [] {
        std::array<uint32_t, 256> t{};
        for (uint32_t n = 0; n < 256; ++n) {
            uint32_t c = n;
            for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xedb88320u ^ (c >> 1) : c >> 1;
            t[n] = c;
        }
        return t;
    }();
    uint32_t c = seed ^ 0xffffffffu;
    for (size_t i = 0; i < len; ++i) c = table[(c ^ data[i]) & 0xffu] ^ (c >> 8);
    return c ^ 0xffffffffu;
}

uint32_t adler32(const uint8_t* data, size_t len) {
    const uint32_t mod = 65521;
    uint32_t a = 1, b = 0;
    for (size_t i = 0; i < len; ++i) {
        a = (a + data[i]) % mod;
        b = (b + a) % mod;
    }
    return (b << 16) | a;
}

namespace {

void put_u32_be(std::vector<uint8_t>& out, uint32_t v) {
    out.push_back(static_cast<uint8_t>(v >> 24));
    out.push_back(static_cast<uint8_t>(v >> 16));
    out.push_back(static_cast<uint8_t>(v >> 8));
    out.push_back(static_cast<uint8_t>(v));
}

void put_chunk(std::vector<uint8_t>& out, const char type[4], const std::vector<uint8_t>& data) {
    put_u32_be(out, static_cast<uint32_t>(data.size()));
    std::vector<uint8_t> body(type, type + 4);
    body.insert(body.end(), data.begin(), data.end());
    out.insert(out.end(), body.begin(), body.end());
    put_u32_be(out, crc32(body.data(), body.size()));
}

// zlib stream holding only stored (BTYPE=00) deflate blocks.
std::vector<uint8_t> zlib_stored(const std::vector<uint8_t>& raw) {
    std::vector<uint8_t> z;
    z.push_back(0x78);  // CM=8, CINFO=7
    z.push_back(0x01);  // FCHECK making the header a multiple of 31, no dict
    size_t at = 0;
    do {
        const size_t take = std::min<size_t>(65535, raw.size() - at);
        const bool final = at + take == raw.size();
        z.push_back(final ? 0x01 : 0x00);
        z.push_back(static_cast<uint8_t>(take & 0xff));
        z.push_back(static_cast<uint8_t>(take >> 8));
        z.push_back(static_cast<uint8_t>(~take & 0xff));
        z.push_back(static_cast<uint8_t>((~take >> 8) & 0xff));
        z.insert(z.end(), raw.begin() + static_cast<ptrdiff_t>(at),
                 raw.begin() + static_cast<ptrdiff_t>(at + take));
        at += take;
    } while (at < raw.size());
    put_u32_be(z, adler32(raw.data(), raw.size()));
    return z;
}

}  // namespace

std::vector<uint8_t> encode_png(const ImageRgb& image) {
    if (image.height < 1 || image.width < 1 ||
        image.pixels.size() != static_cast<size_t>(image.height) * image.width * 3)
        throw std::invalid_argument("encode_png: inconsistent image");

    std::vector<uint8_t> out = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

    std::vector<uint8_t> ihdr;
    put_u32_be(ihdr, static_cast<uint32_t>(image.width));
    put_u32_be(ihdr, static_cast<uint32_t>(image.height));
    ihdr.push_back(8);  // bit depth
    ihdr.push_back(2);  // color type: truecolor RGB
    ihdr.push_back(0);  // compression
    ihdr.push_back(0);  // filter method
    ihdr.push_back(0);  // no interlace
    put_chunk(out, "IHDR", ihdr);

    std::vector<uint8_t> raw;
    raw.reserve(static_cast<size_t>(image.height) * (1 + static_cast<size_t>(image.width) * 3));
    for (int r = 0; r < image.height; ++r) {
        raw.push_back(0);  // filter type none
        const uint8_t* row = image.pixels.data() + static_cast<size_t>(r) * image.width * 3;
        raw.insert(raw.end(), row, row + static_cast<size_t>(image.width) * 3);
    }
    put_chunk(out, "IDAT", zlib_stored(raw));
    put_chunk(out, "IEND", {});
    return out;
}

namespace {

struct Reader {
    const std::vector<uint8_t>& bytes;
    size_t pos = 0;

    uint32_t u32_be() {
        if (pos + 4 > bytes.size()) throw std::runtime_error("decode_png: truncated");
        uint32_t v = (static_cast<uint32_t>(bytes[pos]) << 24) |
                     (static_cast<uint32_t>(bytes[pos + 1]) << 16) |
                     (static_cast<uint32_t>(bytes[pos + 2]) << 8) | bytes[pos + 3];
        pos += 4;
        return v;
    }
    const uint8_t* take(size_t n) {
        if (pos + n > bytes.size()) throw std::runtime_error("decode_png: truncated");
        const uint8_t* p = bytes.data() + pos;
        pos += n;
        return p;
    }
};

std::vector<uint8_t> inflate_stored(const std::vector<uint8_t>& z) {
    if (z.size() < 6) throw std::runtime_error("decode_png: short zlib stream");
    if ((z[0] & 0x0f) != 8) throw std::runtime_error("decode_png: unsupported zlib method");
    std::vector<uint8_t> raw;
    size_t at = 2;
    for (;;) {
        if (at >= z.size() - 4) throw std::runtime_error("decode_png: truncated deflate");
        const uint8_t header = z[at++];
        if ((header & 0x06) != 0)
            throw std::runtime_error("decode_png: only stored deflate blocks supported");
        const size_t len = z[at] | (static_cast<size_t>(z[at + 1]) << 8);
        const size_t nlen = z[at + 2] | (static_cast<size_t>(z[at + 3]) << 8);
        if ((len ^ nlen) != 0xffff) throw std::runtime_error("decode_png: bad stored block");
        at += 4;
        if (at + len > z.size() - 4) throw std::runtime_error("decode_png: truncated block");
        raw.insert(raw.end(), z.begin() + static_cast<ptrdiff_t>(at),
                   z.begin() + static_cast<ptrdiff_t>(at + len));
        at += len;
        if (header & 0x01) break;
    }
    const uint32_t expect = (static_cast<uint32_t>(z[z.size() - 4]) << 24) |
                            (static_cast<uint32_t>(z[z.size() - 3]) << 16) |
                            (static_cast<uint32_t>(z[z.size() - 2]) << 8) | z[z.size() - 1];
    if (adler32(raw.data(), raw.size()) != expect)
        throw std::runtime_error("decode_png: adler32 mismatch");
    return raw;
}

}  // namespace

ImageRgb decode_png(const std::vector<uint8_t>& bytes) {
    static const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() < 8 || std::memcmp(bytes.data(), sig, 8) != 0)
        throw std::runtime_error("decode_png: not a PNG");

    Reader rd{bytes, 8};
    ImageRgb img;
    std::vector<uint8_t> idat;
    bool saw_ihdr = false, saw_iend = false;
    while (!saw_iend) {
        const uint32_t len = rd.u32_be();
        const uint8_t* body = rd.take(4 + len);
        const uint32_t crc = rd.u32_be();
        if (crc32(body, 4 + len) != crc) throw std::runtime_error("decode_png: chunk crc mismatch");
        const std::string type(reinterpret_cast<const char*>(body), 4);
        const uint8_t* data = body + 4;
        if (type == "IHDR") {
            if (len != 13) throw std::runtime_error("decode_png: bad IHDR");
            img.width = static_cast<int>((static_cast<uint32_t>(data[0]) << 24) |
                                         (data[1] << 16) | (data[2] << 8) | data[3]);
            img.height = static_cast<int>((static_cast<uint32_t>(data[4]) << 24) |
                                          (data[5] << 16) | (data[6] << 8) | data[7]);
            if (data[8] != 8 || data[9] != 2 || data[10] != 0 || data[11] != 0 || data[12] != 0)
                throw std::runtime_error("decode_png: unsupported format (need plain 8-bit RGB)");
            saw_ihdr = true;
        } else if (type == "IDAT") {
            idat.insert(idat.end(), data, data + len);
        } else if (type == "IEND") {
            saw_iend = true;
        }  // ancillary chunks ignored
    }
    if (!saw_ihdr) throw std::runtime_error("decode_png: missing IHDR");

    const std::vector<uint8_t> raw = inflate_stored(idat);
    const size_t stride = 1 + static_cast<size_t>(img.width) * 3;
    if (raw.size() != stride * static_cast<size_t>(img.height))
        throw std::runtime_error("decode_png: pixel payload size mismatch");
    img.pixels.resize(static_cast<size_t>(img.height) * img.width * 3);
    for (int r = 0; r < img.height; ++r) {
        if (raw[static_cast<size_t>(r) * stride] != 0)
            throw std::runtime_error("decode_png: unsupported scanline filter");
        std::memcpy(img.pixels.data() + static_cast<size_t>(r) * img.width * 3,
                    raw.data() + static_cast<size_t>(r) * stride + 1,
                    static_cast<size_t>(img.width) * 3);
    }
    return img;
}

void save_png(const std::string& path, const ImageRgb& image) {
    const auto bytes = encode_png(image);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_png: cannot open " + path);
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("save_png: write failed for " + path);
}

ImageRgb load_png(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_png: cannot open " + path);
    std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                               std::istreambuf_iterator<char>());
    return decode_png(bytes);
}

void save_rgb(const std::string& path, const ImageRgb& image) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("save_rgb: cannot open " + path);
    out.write("GRGB", 4);
    const uint32_t h = static_cast<uint32_t>(image.height), w = static_cast<uint32_t>(image.width);
    out.write(reinterpret_cast<const char*>(&h), 4);
    out.write(reinterpret_cast<const char*>(&w), 4);
    out.write(reinterpret_cast<const char*>(image.pixels.data()),
              static_cast<std::streamsize>(image.pixels.size()));
    if (!out) throw std::runtime_error("save_rgb: write failed for " + path);
}

ImageRgb load_rgb(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("load_rgb: cannot open " + path);
    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, "GRGB", 4) != 0)
        throw std::runtime_error("load_rgb: bad magic in " + path);
    uint32_t h = 0, w = 0;
    in.read(reinterpret_cast<char*>(&h), 4);
    in.read(reinterpret_cast<char*>(&w), 4);
    if (!in || h == 0 || w == 0) throw std::runtime_error("load_rgb: bad header in " + path);
    ImageRgb img = make_image(static_cast<int>(h), static_cast<int>(w));
    in.read(reinterpret_cast<char*>(img.pixels.data()),
            static_cast<std::streamsize>(img.pixels.size()));
    if (!in) throw std::runtime_error("load_rgb: truncated payload in " + path);
    return img;
}

}  // namespace groklab
