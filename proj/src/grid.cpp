#include "stss/grid.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

#include "stss/kernels.hpp"

namespace stss {

ScalarField masked_laplacian(const ScalarField& f, const RegionMask& region) {
    require_same_frame(f, region, "masked_laplacian");
    const MaskedDomain d = MaskedDomain::build(region);
    const std::vector<double> u = d.gather(f);
    std::vector<double> lap(u.size());
    kernels::parallel::neumann_laplacian(d, u, lap);
    ScalarField out(f.width(), f.height(), 0.0);
    d.scatter(lap, out);
    return out;
}

RegionMask dilate(const RegionMask& region, int radius) {
    if (radius < 0) throw std::invalid_argument("dilate: negative radius");
    if (radius == 0) return region;
    const int w = region.width();
    const int h = region.height();
    // Chebyshev ball is separable: horizontal pass, then vertical pass.
    RegionMask horizontal(w, h);
    for (int y = 0; y < h; ++y) {
        int last = -1 - radius;  // most recent member x at or before the window end
        for (int x = 0; x < w + radius; ++x) {
            if (x < w && region(x, y)) last = x;
            const int cx = x - radius;
            if (cx >= 0 && cx < w) {
                // window [cx - radius, cx + radius] == [x - 2r, x]
                if (last >= x - 2 * radius) horizontal.set(cx, y, true);
            }
        }
    }
    RegionMask out(w, h);
    for (int x = 0; x < w; ++x) {
        int last = -1 - radius;
        for (int y = 0; y < h + radius; ++y) {
            if (y < h && horizontal(x, y)) last = y;
            const int cy = y - radius;
            if (cy >= 0 && cy < h && last >= y - 2 * radius) out.set(x, cy, true);
        }
    }
    return out;
}

LabelField hard_labels(const Partition& partition) {
    if (partition.region_count() < 1) throw std::invalid_argument("hard_labels: no regions");
    LabelField labels{partition.width(), partition.height(), {}};
    const std::size_t n = partition.indicators.front().size();
    labels.labels.assign(n, 0);
    for (std::size_t s = 0; s < n; ++s) {
        int best = 0;
        double best_value = partition.indicators[0][s];
        for (int i = 1; i < partition.region_count(); ++i) {
            const double v = partition.indicators[static_cast<std::size_t>(i)][s];
            if (v > best_value) {
                best = i;
                best_value = v;
            }
        }
        labels.labels[s] = best;
    }
    return labels;
}

namespace {

// Value at a neighbour, mirrored to the centre when it lies outside.
inline double neighbour_or_centre(const ScalarField& f, const RegionMask& r, int x, int y,
                                  double centre) {
    return r.member_at(x, y) ? f(x, y) : centre;
}

}  // namespace

ScalarField central_gradient_magnitude(const ScalarField& f, const RegionMask& region) {
    require_same_frame(f, region, "central_gradient_magnitude");
    ScalarField out(f.width(), f.height(), 0.0);
    const int h = f.height();
#pragma omp parallel for schedule(static) if (f.size() >= 16384)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < f.width(); ++x) {
            if (!region(x, y)) continue;
            const double c = f(x, y);
            const double gx = 0.5 * (neighbour_or_centre(f, region, x + 1, y, c) -
                                     neighbour_or_centre(f, region, x - 1, y, c));
            const double gy = 0.5 * (neighbour_or_centre(f, region, x, y + 1, c) -
                                     neighbour_or_centre(f, region, x, y - 1, c));
            out(x, y) = std::sqrt(gx * gx + gy * gy);
        }
    }
    return out;
}

ScalarField upwind_gradient_magnitude(const ScalarField& f, const RegionMask& region,
                                      const ScalarField& speed) {
    require_same_frame(f, region, "upwind_gradient_magnitude");
    require_same_frame(f, speed, "upwind_gradient_magnitude");
    ScalarField out(f.width(), f.height(), 0.0);
    const int h = f.height();
#pragma omp parallel for schedule(static) if (f.size() >= 16384)
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < f.width(); ++x) {
            if (!region(x, y)) continue;
            const double s = speed(x, y);
            if (s == 0.0) continue;
            const double c = f(x, y);
            const double dxm = c - neighbour_or_centre(f, region, x - 1, y, c);
            const double dxp = neighbour_or_centre(f, region, x + 1, y, c) - c;
            const double dym = c - neighbour_or_centre(f, region, x, y - 1, c);
            const double dyp = neighbour_or_centre(f, region, x, y + 1, c) - c;
            double g2;
            if (s > 0.0) {
                g2 = std::pow(std::max(dxm, 0.0), 2) + std::pow(std::min(dxp, 0.0), 2) +
                     std::pow(std::max(dym, 0.0), 2) + std::pow(std::min(dyp, 0.0), 2);
            } else {
                g2 = std::pow(std::min(dxm, 0.0), 2) + std::pow(std::max(dxp, 0.0), 2) +
                     std::pow(std::min(dym, 0.0), 2) + std::pow(std::max(dyp, 0.0), 2);
            }
            out(x, y) = std::sqrt(g2);
        }
    }
    return out;
}

int geodesic_diameter(const RegionMask& region) {
    const MaskedDomain d = MaskedDomain::build(region);
    const std::size_t n = d.slots();
    int best = 0;
    std::vector<int> dist(n);
    std::vector<std::int32_t> queue(n);
    for (std::size_t src = 0; src < n; ++src) {
        std::fill(dist.begin(), dist.end(), -1);
        std::size_t head = 0;
        std::size_t tail = 0;
        dist[src] = 0;
        queue[tail++] = static_cast<std::int32_t>(src);
        while (head < tail) {
            const auto k = static_cast<std::size_t>(queue[head++]);
            best = std::max(best, dist[k]);
            for (int j = 0; j < 4; ++j) {
                const std::int32_t nb = d.neighbors[4 * k + j];
                if (nb >= 0 && dist[static_cast<std::size_t>(nb)] < 0) {
                    dist[static_cast<std::size_t>(nb)] = dist[k] + 1;
                    queue[tail++] = nb;
                }
            }
        }
    }
    return best;
}

}  // namespace stss
