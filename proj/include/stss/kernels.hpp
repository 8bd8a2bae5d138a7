#pragma once

// Stencil and reduction kernels over a compacted region.
//
// Every kernel exists twice: `serial::` is the plain reference loop and
// `parallel::` the OpenMP version. The parallel versions split work by
// slot ranges only and reduce dot products over fixed-size blocks, so both
// produce bit-identical results for any thread count.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "stss/field.hpp"

namespace stss {

/// A region flattened to a dense slot range with 4-neighbour links.
/// Neighbours that leave the region or the frame are stored as -1, which is
/// how the zero-flux (mirrored ghost) boundary is realised.
struct MaskedDomain {
    int width = 0;
    int height = 0;
    std::vector<std::size_t> sites;       // lattice index of each slot
    std::vector<std::int32_t> neighbors;  // 4 per slot: -x, +x, -y, +y
    std::vector<std::int32_t> slot_of;    // lattice index -> slot, -1 outside
    std::vector<std::int32_t> component;  // 4-connected component of each slot
    int component_count = 0;

    static MaskedDomain build(const RegionMask& region);

    std::size_t slots() const { return sites.size(); }

    std::vector<double> gather(const ScalarField& f) const;
    /// Writes slot values into `f`, leaving sites outside the domain alone.
    void scatter(std::span<const double> compact, ScalarField& f) const;
};

namespace kernels {

inline constexpr std::size_t kReductionBlock = 256;

namespace serial {

void neumann_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out);
/// out = u - alpha * lap(u)
void screened_apply(const MaskedDomain& d, double alpha, std::span<const double> u,
                    std::span<double> out);
/// out = -lap(u)
void negative_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out);
/// out = u + dt * lap(u)
void heat_step(const MaskedDomain& d, double dt, std::span<const double> u, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace serial

namespace parallel {

void neumann_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out);
void screened_apply(const MaskedDomain& d, double alpha, std::span<const double> u,
                    std::span<double> out);
void negative_laplacian(const MaskedDomain& d, std::span<const double> u, std::span<double> out);
void heat_step(const MaskedDomain& d, double dt, std::span<const double> u, std::span<double> out);
double dot(std::span<const double> a, std::span<const double> b);
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace parallel

/// Pairwise (cascade) summation of a short vector of partials.
double pairwise_sum(std::span<const double> values);

}  // namespace kernels

/// Caps the OpenMP worker count from STSS_THREADS, if set. Returns the cap
/// applied, or 0 when the variable is absent or invalid.
int apply_thread_limit_from_env();

}  // namespace stss
