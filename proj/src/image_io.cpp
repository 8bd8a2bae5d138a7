#include "stss/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include <png.h>

namespace stss::io {

namespace {

std::vector<unsigned char> slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ImageError("cannot open " + path);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PnmReader {
public:
    PnmReader(const std::vector<unsigned char>& data, std::string path)
        : data_(data), path_(std::move(path)) {}

    long next_int() {
        skip_space_and_comments();
        if (pos_ >= data_.size() || !std::isdigit(data_[pos_])) fail("expected a number");
        long v = 0;
        while (pos_ < data_.size() && std::isdigit(data_[pos_])) {
            v = v * 10 + (data_[pos_++] - '0');
            if (v > 1L << 30) fail("number too large");
        }
        return v;
    }

    // Exactly one whitespace byte separates the header from binary samples.
    void end_header() {
        if (pos_ >= data_.size() || !std::isspace(data_[pos_])) fail("malformed header");
        ++pos_;
    }

    unsigned binary_sample(bool wide) {
        const std::size_t n = wide ? 2 : 1;
        if (pos_ + n > data_.size()) fail("truncated pixel data");
        unsigned v = data_[pos_++];
        if (wide) v = (v << 8) | data_[pos_++];
        return v;
    }

    [[noreturn]] void fail(const std::string& what) const { throw ImageError(path_ + ": " + what); }

private:
    void skip_space_and_comments() {
        while (pos_ < data_.size()) {
            if (std::isspace(data_[pos_])) {
                ++pos_;
            } else if (data_[pos_] == '#') {
                while (pos_ < data_.size() && data_[pos_] != '\n') ++pos_;
            } else {
                break;
            }
        }
    }

    const std::vector<unsigned char>& data_;
    std::string path_;
    std::size_t pos_ = 2;
};

// Raw samples plus maxval, channel-interleaved.
struct RawImage {
    int width = 0;
    int height = 0;
    int channels = 0;
    unsigned maxval = 0;
    std::vector<unsigned> samples;
};

RawImage read_pnm(const std::vector<unsigned char>& data, const std::string& path) {
    const char kind = static_cast<char>(data[1]);
    PnmReader r(data, path);
    RawImage img;
    img.channels = (kind == '3' || kind == '6') ? 3 : 1;
    const long w = r.next_int();
    const long h = r.next_int();
    const long maxval = r.next_int();
    if (w <= 0 || h <= 0 || w * h > (1L << 28)) r.fail("bad dimensions");
    if (maxval <= 0 || maxval > 65535) r.fail("bad maxval");
    img.width = static_cast<int>(w);
    img.height = static_cast<int>(h);
    img.maxval = static_cast<unsigned>(maxval);
    const std::size_t n = static_cast<std::size_t>(w * h) * img.channels;
    img.samples.resize(n);
    const bool binary = kind == '5' || kind == '6';
    if (binary) r.end_header();
    for (std::size_t i = 0; i < n; ++i) {
        const unsigned v = binary ? r.binary_sample(maxval > 255) : static_cast<unsigned>(r.next_int());
        if (v > img.maxval) r.fail("sample exceeds maxval");
        img.samples[i] = v;
    }
    return img;
}

RawImage read_png_file(const std::string& path) {
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&png, path.c_str()))
        throw ImageError(path + ": " + png.message);
    const bool color = (png.format & PNG_FORMAT_FLAG_COLOR) != 0;
    png.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    std::vector<png_byte> buf(PNG_IMAGE_SIZE(png));
    if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
        const std::string msg = png.message;
        png_image_free(&png);
        throw ImageError(path + ": " + msg);
    }
    RawImage img;
    img.width = static_cast<int>(png.width);
    img.height = static_cast<int>(png.height);
    img.channels = color ? 3 : 1;
    img.maxval = 255;
    img.samples.assign(buf.begin(), buf.end());
    return img;
}

RawImage read_raw(const std::string& path) {
    const std::vector<unsigned char> data = slurp(path);
    if (data.size() >= 8 && png_sig_cmp(data.data(), 0, 8) == 0) return read_png_file(path);
    if (data.size() >= 2 && data[0] == 'P' && std::string("2356").find(static_cast<char>(data[1])) != std::string::npos)
        return read_pnm(data, path);
    throw ImageError(path + ": not a PGM, PPM or PNG file");
}

unsigned quantize(double v, int maxval) {
    const double c = std::clamp(std::isfinite(v) ? v : 0.0, 0.0, 1.0);
    return static_cast<unsigned>(std::lround(c * maxval));
}

void write_pnm(const std::string& path, const char* magic, int width, int height, int maxval,
               const std::vector<unsigned>& samples) {
    if (maxval <= 0 || maxval > 65535) throw ImageError("write: bad maxval");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ImageError("cannot write " + path);
    out << magic << '\n' << width << ' ' << height << '\n' << maxval << '\n';
    std::vector<char> bytes;
    bytes.reserve(samples.size() * 2);
    for (unsigned v : samples) {
        if (maxval > 255) bytes.push_back(static_cast<char>(v >> 8));
        bytes.push_back(static_cast<char>(v & 0xFF));
    }
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw ImageError("write failed for " + path);
}

}  // namespace

Channels read_image(const std::string& path) {
    const RawImage raw = read_raw(path);
    Channels out(static_cast<std::size_t>(raw.channels), ScalarField(raw.width, raw.height));
    const double scale = 1.0 / raw.maxval;
    for (std::size_t i = 0; i < out[0].size(); ++i)
        for (int c = 0; c < raw.channels; ++c)
            out[static_cast<std::size_t>(c)][i] = raw.samples[i * raw.channels + c] * scale;
    return out;
}

RegionMask read_mask(const std::string& path) {
    const RawImage raw = read_raw(path);
    if (raw.channels != 1) throw ImageError(path + ": mask must be single channel");
    RegionMask m(raw.width, raw.height);
    for (std::size_t i = 0; i < raw.samples.size(); ++i)
        if (2 * raw.samples[i] > raw.maxval) m.set(i, true);
    return m;
}

LabelField read_labels(const std::string& path) {
    const RawImage raw = read_raw(path);
    if (raw.channels != 1) throw ImageError(path + ": label map must be single channel");
    LabelField l{raw.width, raw.height, std::vector<int>(raw.samples.begin(), raw.samples.end())};
    const bool binary = std::all_of(raw.samples.begin(), raw.samples.end(),
                                    [](unsigned v) { return v == 0 || v == 255; });
    if (binary)
        for (int& v : l.labels) v = v == 255 ? 1 : 0;
    return l;
}

void write_pgm(const std::string& path, const ScalarField& f, int maxval) {
    std::vector<unsigned> s(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) s[i] = quantize(f[i], maxval);
    write_pnm(path, "P5", f.width(), f.height(), maxval, s);
}

void write_ppm(const std::string& path, const Channels& rgb, int maxval) {
    if (rgb.size() != 3) throw ImageError("write_ppm: need 3 channels");
    for (const ScalarField& c : rgb) require_same_frame(c, rgb[0], "write_ppm");
    std::vector<unsigned> s(rgb[0].size() * 3);
    for (std::size_t i = 0; i < rgb[0].size(); ++i)
        for (std::size_t c = 0; c < 3; ++c) s[i * 3 + c] = quantize(rgb[c][i], maxval);
    write_pnm(path, "P6", rgb[0].width(), rgb[0].height(), maxval, s);
}

void write_labels(const std::string& path, const LabelField& labels) {
    std::vector<unsigned> s(labels.labels.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        const int l = labels.labels[i];
        if (l < 0 || l > 255) throw ImageError("write_labels: label out of 8-bit range");
        s[i] = static_cast<unsigned>(l);
    }
    write_pnm(path, "P5", labels.width, labels.height, 255, s);
}

void write_png(const std::string& path, int width, int height, const std::vector<std::uint8_t>& rgb) {
    if (width <= 0 || height <= 0 || rgb.size() != static_cast<std::size_t>(width) * height * 3)
        throw ImageError("write_png: buffer does not match size");
    png_image png{};
    png.version = PNG_IMAGE_VERSION;
    png.width = static_cast<png_uint_32>(width);
    png.height = static_cast<png_uint_32>(height);
    png.format = PNG_FORMAT_RGB;
    if (!png_image_write_to_file(&png, path.c_str(), 0, rgb.data(), 0, nullptr))
        throw ImageError(path + ": " + png.message);
}

void write_overlay(const std::string& path, const Channels& image, const LabelField& labels) {
    if (image.empty()) throw ImageError("write_overlay: no channels");
    const ScalarField& base = image.front();
    if (base.width() != labels.width || base.height() != labels.height)
        throw DimensionError("write_overlay: image and labels differ in size");
    const bool color = image.size() == 3;
    const int w = labels.width;
    const int h = labels.height;
    std::vector<std::uint8_t> rgb(static_cast<std::size_t>(w) * h * 3);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const std::size_t i = static_cast<std::size_t>(y) * w + x;
            const int l = labels(x, y);
            const bool edge = (x + 1 < w && labels(x + 1, y) != l) || (x > 0 && labels(x - 1, y) != l) ||
                              (y + 1 < h && labels(x, y + 1) != l) || (y > 0 && labels(x, y - 1) != l);
            for (std::size_t c = 0; c < 3; ++c) {
                const double v = color ? image[c][i] : base[i];
                rgb[i * 3 + c] = static_cast<std::uint8_t>(quantize(v, 255));
            }
            if (edge) {
                rgb[i * 3] = 255;
                rgb[i * 3 + 1] = 0;
                rgb[i * 3 + 2] = 0;
            }
        }
    }
    write_png(path, w, h, rgb);
}

}  // namespace stss::io
