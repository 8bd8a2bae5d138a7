#include "stss/fixtures.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace stss::fixtures {

RegionMask random_connected_mask(int width, int height, double fraction, Rng& rng) {
    RegionMask mask(width, height);
    const auto target = static_cast<std::size_t>(
        std::max(1.0, std::round(fraction * static_cast<double>(width) * height)));
    std::vector<std::pair<int, int>> frontier;
    auto push_neighbours = [&](int x, int y) {
        constexpr int dx[4] = {-1, 1, 0, 0};
        constexpr int dy[4] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
            const int nx = x + dx[k];
            const int ny = y + dy[k];
            if (mask.contains(nx, ny) && !mask(nx, ny)) frontier.emplace_back(nx, ny);
        }
    };
    mask.set(width / 2, height / 2, true);
    push_neighbours(width / 2, height / 2);
    while (mask.site_count() < target && !frontier.empty()) {
        std::uniform_int_distribution<std::size_t> pick(0, frontier.size() - 1);
        const std::size_t k = pick(rng);
        const auto [x, y] = frontier[k];
        frontier[k] = frontier.back();
        frontier.pop_back();
        if (mask(x, y)) continue;
        mask.set(x, y, true);
        push_neighbours(x, y);
    }
    return mask;
}

ScalarField smooth_random_image(int width, int height, Rng& rng, int modes, int max_frequency) {
    std::uniform_int_distribution<int> freq(0, max_frequency);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScalarField f(width, height, 0.0);
    for (int m = 0; m < modes; ++m) {
        int kx = freq(rng);
        const int ky = freq(rng);
        if (kx == 0 && ky == 0) kx = 1;
        const double phase_x = 2.0 * std::numbers::pi * unit(rng);
        const double phase_y = 2.0 * std::numbers::pi * unit(rng);
        const double amp = 0.5 + unit(rng);
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                f(x, y) += amp * std::cos(std::numbers::pi * kx * x / width + phase_x) *
                           std::cos(std::numbers::pi * ky * y / height + phase_y);
            }
        }
    }
    const auto [lo, hi] = std::minmax_element(f.values().begin(), f.values().end());
    const double lo_v = *lo;
    const double span = std::max(*hi - lo_v, 1e-12);
    for (double& v : f.values()) v = (v - lo_v) / span;
    return f;
}

ScalarField add_noise(const ScalarField& f, double sigma, Rng& rng) {
    std::normal_distribution<double> noise(0.0, sigma);
    ScalarField out = f;
    for (double& v : out.values()) v += noise(rng);
    return out;
}

ScalarField uniform_texture(int width, int height, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    ScalarField f(width, height);
    for (double& v : f.values()) v = unit(rng);
    return f;
}

ScalarField box_image(int width, int height, int x0, int y0, int x1, int y1, double inside,
                      double outside) {
    ScalarField f(width, height, outside);
    for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
        for (int x = std::max(0, x0); x < std::min(width, x1); ++x) f(x, y) = inside;
    return f;
}

RegionMask box_mask(int width, int height, int x0, int y0, int x1, int y1) {
    RegionMask m(width, height);
    for (int y = std::max(0, y0); y < std::min(height, y1); ++y)
        for (int x = std::max(0, x0); x < std::min(width, x1); ++x) m.set(x, y, true);
    return m;
}

ScalarField step_image(int width, int height, int step, double left, double right) {
    ScalarField f(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x) f(x, y) = x < step ? left : right;
    return f;
}

LabelField labels_from_mask(const RegionMask& foreground) {
    LabelField l{foreground.width(), foreground.height(), {}};
    l.labels.resize(foreground.size());
    for (std::size_t i = 0; i < foreground.size(); ++i) l.labels[i] = foreground[i] ? 1 : 0;
    return l;
}

LabelField random_block_labels(int width, int height, int region_count, int block, Rng& rng) {
    if (block < 1) throw std::invalid_argument("random_block_labels: block < 1");
    const int bw = (width + block - 1) / block;
    const int bh = (height + block - 1) / block;
    std::uniform_int_distribution<int> pick(0, region_count - 1);
    std::vector<int> tiles(static_cast<std::size_t>(bw) * bh);
    for (int& t : tiles) t = pick(rng);
    LabelField l{width, height, std::vector<int>(static_cast<std::size_t>(width) * height)};
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            l.labels[static_cast<std::size_t>(y) * width + x] =
                tiles[static_cast<std::size_t>(y / block) * bw + x / block];
    return l;
}

TwoScaleScene two_scale_scene(int size, Rng& rng) {
    TwoScaleScene scene{ScalarField(size, size, 0.4), RegionMask(size, size),
                        RegionMask(size, size)};
    const double cx = 0.5 * (size - 1);
    const double cy = 0.5 * (size - 1);
    const double radius = 0.28 * size;
    for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) {
            if (std::hypot(x - cx, y - cy) <= radius) {
                scene.shape.set(x, y, true);
                scene.image(x, y) = 0.6;
            }
        }
    }
    // Bright 2x2 speckles scattered in a ring around the disc.
    std::uniform_real_distribution<double> angle(0.0, 2.0 * std::numbers::pi);
    std::uniform_real_distribution<double> offset(3.0, 0.18 * size);
    const int count = std::max(4, size / 6);
    for (int k = 0; k < count; ++k) {
        const double a = angle(rng);
        const double r = radius + offset(rng);
        const int sx = static_cast<int>(std::lround(cx + r * std::cos(a)));
        const int sy = static_cast<int>(std::lround(cy + r * std::sin(a)));
        for (int y = sy; y < sy + 2; ++y) {
            for (int x = sx; x < sx + 2; ++x) {
                if (!scene.image.contains(x, y) || scene.shape(x, y)) continue;
                scene.speckle.set(x, y, true);
                scene.image(x, y) = 1.0;
            }
        }
    }
    return scene;
}

MovingSquareScene moving_square_scene(int size, int square_size, int shift, Rng& rng) {
    const ScalarField background = uniform_texture(size, size, rng);
    const ScalarField square_tex = uniform_texture(square_size, square_size, rng);
    const int p = (size - square_size) / 2;
    auto frame = [&](int t) {
        ScalarField f = background;
        const int x0 = p + t * shift;
        for (int y = p; y < p + square_size; ++y)
            for (int x = x0; x < x0 + square_size; ++x)
                if (f.contains(x, y)) f(x, y) = square_tex(x - x0, y - p);
        return f;
    };
    MovingSquareScene s;
    s.previous = frame(-1);
    s.current = frame(0);
    s.next = frame(1);
    s.shift = shift;
    s.square = box_mask(size, size, p, p, p + square_size, p + square_size);
    s.occluded_forward =
        box_mask(size, size, p + square_size, p, p + square_size + shift, p + square_size);
    s.occluded_backward = box_mask(size, size, p - shift, p, p, p + square_size);
    return s;
}

}  // namespace stss::fixtures
