#pragma once

// Brute-force shape-tailored scale space.
//
// Everything here time-steps the region-restricted heat equation and
// integrates numerically. It is slow on purpose: it is the reference the
// scale-space-free gradient path is checked against.

#include <vector>

#include "stss/field.hpp"

namespace stss::oracle {

/// u(t, .) on a fixed region, one slice per explicit Euler step.
struct ScaleSpace {
    std::vector<double> times;
    std::vector<ScalarField> slices;
    RegionMask region;
    double mean = 0.0;  // region mean of slice 0, constant in t

    double t_max() const { return times.empty() ? 0.0 : times.back(); }
    double dt() const { return times.size() < 2 ? 0.0 : times[1] - times[0]; }
};

/// Time horizon long enough for the region's slowest mode to die out:
/// 10 * diam(R)^2 with diam the geodesic diameter.
double default_horizon(const RegionMask& region);

/// Forward-Euler stack on [0, t_max]. The step is shrunk so that it divides
/// t_max exactly. Throws std::length_error past ~2^27 stored values;
/// use stream_scale_space for long horizons.
ScaleSpace compute_scale_space(const ScalarField& image, const RegionMask& region, double t_max,
                               double dt);

/// Trapezoid in t of sum_R |u - a|^2 over [0, t_max].
double energy_direct(const ScaleSpace& s);

/// lambda(t) = -int_t^{t_max - t} (u(tau) - a) dtau, the change-of-variables
/// form of -2 int_t^T (u(2s - t) - a) ds with T = t_max / 2. The integrand is
/// the piecewise-linear interpolant of the stored slices. Zero off the region.
ScalarField lambda_direct(const ScaleSpace& s, double t);

/// The same multiplier evaluated in the original variable s on a grid of
/// spacing dt: -2 int_t^T (u(2s - t) - a) ds.
ScalarField lambda_direct_s_form(const ScaleSpace& s, double t);

/// Integrates the forced backward equation
///   d/dt lambda + lap(lambda) = 2 (u - a),  lambda(T) = 0,  T = t_max / 2
/// from T down to 0 on the stack's time grid, and returns lambda(0).
ScalarField lambda_backward(const ScaleSpace& s);

/// Energy and lambda(0) accumulated during stepping, without storing slices.
struct StreamedQuantities {
    double energy = 0.0;
    ScalarField lambda0;      // -int_0^{t_max} (u - a)
    ScalarField final_slice;  // u(t_max)
    double mean = 0.0;
    int steps = 0;
};
/// `energy_sites`, when given, restricts the energy sum (not the diffusion)
/// to those sites of the region.
StreamedQuantities stream_scale_space(const ScalarField& image, const RegionMask& region,
                                      double t_max, double dt,
                                      const RegionMask* energy_sites = nullptr);

/// Energy of a multi-channel image on one region (sum over channels).
double region_energy(const Channels& image, const RegionMask& region, double t_max, double dt);

/// Periodic-domain check of the frequency-domain form of the energy.
struct FourierCheck {
    double lhs = 0.0;           // int_0^T sum |u - a|^2, exact-in-time semi-discrete heat flow
    double rhs = 0.0;           // sum_w |I^(w)|^2 (1 - exp(-2 mu T)) / (2 mu), over |Omega|
    double rhs_infinite = 0.0;  // sum_w |I^(w)|^2 / (2 mu), over |Omega|
};

/// `image` must have zero mean (the DC mode has no finite transfer).
/// lhs comes from a dense eigendecomposition of the assembled periodic
/// 5-point Laplacian; rhs from the DFT of the image and the closed-form
/// eigenvalues mu(k,l) = 4 sin^2(pi k / W) + 4 sin^2(pi l / H).
/// Frames above 1024 sites are rejected (dense eigensolve).
FourierCheck fourier_transfer_check(const ScalarField& image, double t_max);

/// Forward-Euler on the torus with trapezoid time quadrature; approximates
/// FourierCheck::lhs to first order in dt.
double periodic_energy_stepped(const ScalarField& image, double t_max, double dt);

/// Eigenvalue of -lap for the periodic mode (k, l).
double periodic_eigenvalue(int width, int height, int k, int l);

/// Real periodic mode (k, l) with unit root-mean-square amplitude.
ScalarField periodic_mode(int width, int height, int k, int l);

/// One-site region exchange used as the discrete boundary derivative.
struct FlipSettings {
    /// Energy horizon; <= 0 picks 10 * diam^2 of the largest region involved.
    double t_max = 0.0;
    double dt = 0.2;
};

struct FlipSample {
    int x = 0;
    int y = 0;
    int from = 0;
    int to = 0;
    double delta = 0.0;  // E(after) - E(before)
};

/// E(after) - E(before) when site (x, y) moves to region `to`, which must
/// own one of its 4-neighbours. Only the two affected regions are recomputed.
double boundary_gradient_fd(const Channels& image, const LabelField& labels, int x, int y,
                            int to, const FlipSettings& settings);

/// Same, with `to` chosen as the lowest-index foreign neighbour label.
double boundary_gradient_fd(const Channels& image, const Partition& partition, int x, int y,
                            const FlipSettings& settings);

/// Every (site, foreign neighbour label) pair on inter-region boundaries.
std::vector<FlipSample> flip_scan(const Channels& image, const LabelField& labels,
                                  const FlipSettings& settings);

}  // namespace stss::oracle
