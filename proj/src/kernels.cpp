#include "stss/kernels.hpp"

#include <algorithm>
#include <cstdlib>
#include <queue>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace stss {

MaskedDomain MaskedDomain::build(const RegionMask& region) {
    MaskedDomain d;
    d.width = region.width();
    d.height = region.height();
    d.sites = region.member_indices();
    d.slot_of.assign(region.size(), -1);
    for (std::size_t k = 0; k < d.sites.size(); ++k) {
        d.slot_of[d.sites[k]] = static_cast<std::int32_t>(k);
    }
    d.neighbors.assign(4 * d.sites.size(), -1);
    const int w = d.width;
    for (std::size_t k = 0; k < d.sites.size(); ++k) {
        const int x = static_cast<int>(d.sites[k] % static_cast<std::size_t>(w));
        const int y = static_cast<int>(d.sites[k] / static_cast<std::size_t>(w));
        const std::size_t s = d.sites[k];
        if (x > 0) d.neighbors[4 * k + 0] = d.slot_of[s - 1];
        if (x + 1 < w) d.neighbors[4 * k + 1] = d.slot_of[s + 1];
        if (y > 0) d.neighbors[4 * k + 2] = d.slot_of[s - static_cast<std::size_t>(w)];
        if (y + 1 < d.height) d.neighbors[4 * k + 3] = d.slot_of[s + static_cast<std::size_t>(w)];
    }

    d.component.assign(d.sites.size(), -1);
    std::queue<std::int32_t> frontier;
    for (std::size_t seed = 0; seed < d.sites.size(); ++seed) {
        if (d.component[seed] >= 0) continue;
        const int id = d.component_count++;
        d.component[seed] = id;
        frontier.push(static_cast<std::int32_t>(seed));
        while (!frontier.empty()) {
            const auto k = static_cast<std::size_t>(frontier.front());
            frontier.pop();
            for (int j = 0; j < 4; ++j) {
                const std::int32_t n = d.neighbors[4 * k + j];
                if (n >= 0 && d.component[static_cast<std::size_t>(n)] < 0) {
                    d.component[static_cast<std::size_t>(n)] = id;
                    frontier.push(n);
                }
            }
        }
    }
    return d;
}

std::vector<double> MaskedDomain::gather(const ScalarField& f) const {
    std::vector<double> out(sites.size());
    for (std::size_t k = 0; k < sites.size(); ++k) out[k] = f[sites[k]];
    return out;
}

void MaskedDomain::scatter(std::span<const double> compact, ScalarField& f) const {
    for (std::size_t k = 0; k < sites.size(); ++k) f[sites[k]] = compact[k];
}

namespace kernels {

namespace {

inline double laplacian_at(const MaskedDomain& d, std::span<const double> u, std::size_t k) {
    const std::int32_t* nb = &d.neighbors[4 * k];
    const double c = u[k];
    double acc = 0.0;
    // Fixed neighbour order; missing neighbours contribute zero flux.
    for (int j = 0; j < 4; ++j) {
        if (nb[j] >= 0) acc += u[static_cast<std::size_t>(nb[j])] - c;
    }
    return acc;
}

inline double block_dot(std::span<const double> a, std::span<const double> b, std::size_t block) {
    const std::size_t begin = block * kReductionBlock;
    const std::size_t end = std::min(a.size(), begin + kReductionBlock);
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += a[i] * b[i];
    return s;
}

inline std::size_t block_count(std::size_t n) { return (n + kReductionBlock - 1) / kReductionBlock; }

}  // namespace

double pairwise_sum(std::span<const double> values) {
    if (values.empty()) return 0.0;
    if (values.size() == 1) return values[0];
    if (values.size() == 2) return values[0] + values[1];
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

namespace serial {

void neumann_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out) {
    for (std::size_t k = 0; k < d.slots(); ++k) out[k] = laplacian_at(d, u, k);
}

void screened_apply(const MaskedDomain& d, double alpha, std::span<const double> u,
                    std::span<double> out) {
    for (std::size_t k = 0; k < d.slots(); ++k) out[k] = u[k] - alpha * laplacian_at(d, u, k);
}

void negative_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out) {
    for (std::size_t k = 0; k < d.slots(); ++k) out[k] = -laplacian_at(d, u, k);
}

void heat_step(const MaskedDomain& d, double dt, std::span<const double> u, std::span<double> out) {
    for (std::size_t k = 0; k < d.slots(); ++k) out[k] = u[k] + dt * laplacian_at(d, u, k);
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t nb = block_count(a.size());
    std::vector<double> partial(nb);
    for (std::size_t blk = 0; blk < nb; ++blk) partial[blk] = block_dot(a, b, blk);
    return pairwise_sum(partial);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace serial

namespace parallel {

namespace {
// Below this many slots the fork/join overhead dominates.
constexpr std::ptrdiff_t kMinParallel = 4096;
}

void neumann_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(d.slots());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        out[static_cast<std::size_t>(k)] = laplacian_at(d, u, static_cast<std::size_t>(k));
    }
}

void screened_apply(const MaskedDomain& d, double alpha, std::span<const double> u,
                    std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(d.slots());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto s = static_cast<std::size_t>(k);
        out[s] = u[s] - alpha * laplacian_at(d, u, s);
    }
}

void negative_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(d.slots());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto s = static_cast<std::size_t>(k);
        out[s] = -laplacian_at(d, u, s);
    }
}

void heat_step(const MaskedDomain& d, double dt, std::span<const double> u, std::span<double> out) {
    const auto n = static_cast<std::ptrdiff_t>(d.slots());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t k = 0; k < n; ++k) {
        const auto s = static_cast<std::size_t>(k);
        out[s] = u[s] + dt * laplacian_at(d, u, s);
    }
}

double dot(std::span<const double> a, std::span<const double> b) {
    const std::size_t nb = block_count(a.size());
    std::vector<double> partial(nb);
    const auto n = static_cast<std::ptrdiff_t>(nb);
#pragma omp parallel for schedule(static) if (a.size() >= static_cast<std::size_t>(kMinParallel))
    for (std::ptrdiff_t blk = 0; blk < n; ++blk) {
        partial[static_cast<std::size_t>(blk)] = block_dot(a, b, static_cast<std::size_t>(blk));
    }
    return pairwise_sum(partial);
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    const auto n = static_cast<std::ptrdiff_t>(x.size());
#pragma omp parallel for schedule(static) if (n >= kMinParallel)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        y[static_cast<std::size_t>(i)] += a * x[static_cast<std::size_t>(i)];
    }
}

}  // namespace parallel

}  // namespace kernels

int apply_thread_limit_from_env() {
    const char* raw = std::getenv("STSS_THREADS");
    if (raw == nullptr) return 0;
    char* end = nullptr;
    const long n = std::strtol(raw, &end, 10);
    if (end == raw || *end != '\0' || n <= 0) return 0;
#ifdef _OPENMP
    omp_set_num_threads(static_cast<int>(n));
#endif
    return static_cast<int>(n);
}

}  // namespace stss
