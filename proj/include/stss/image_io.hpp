#pragma once

// Image files. PGM/PPM (P2, P3, P5, P6; 8 or 16 bit) and PNG are read into
// channels normalized to [0, 1]; gray files give one channel, color three.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "stss/field.hpp"

namespace stss::io {

class ImageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Channels read_image(const std::string& path);

/// 8-bit PGM where values above half of maxval mark members (255 = set).
RegionMask read_mask(const std::string& path);

/// Label index per pixel. A 0/255 binary image is read as labels 0/1.
LabelField read_labels(const std::string& path);

/// Clamped to [0, 1] and quantized to `maxval` (255 or 65535).
void write_pgm(const std::string& path, const ScalarField& f, int maxval = 255);
void write_ppm(const std::string& path, const Channels& rgb, int maxval = 255);

/// 8-bit label map; throws ImageError for labels outside [0, 255].
void write_labels(const std::string& path, const LabelField& labels);

/// Packed 8-bit RGB.
void write_png(const std::string& path, int width, int height, const std::vector<std::uint8_t>& rgb);

/// Region boundaries (sites with a 4-neighbour of another label) in red over
/// a gray rendering of the first channel, or the colour image when given 3 channels.
void write_overlay(const std::string& path, const Channels& image, const LabelField& labels);

}  // namespace stss::io
