#pragma once

// Region gradients from two linear solves at native resolution.
//
// For a region R with dilation D(R):
//   v      solves  v - alpha lap v = I          on D(R)
//   lambda solves  -lap lambda = v - I          on D(R), zero mean
//   G = sum_c -1/2 |grad lambda_c|^2 - lambda_c (I_c - a_c),  a_c = mean of I_c over R.
// Moving a site x from region r to region s changes the energy by roughly
// G_s(x) - G_r(x).

#include <string>
#include <vector>

#include "stss/field.hpp"
#include "stss/pde.hpp"

namespace stss {

struct RegionGradient {
    int region_index = 0;
    RegionMask region;  // R
    RegionMask domain;  // D(R), where every field below is defined
    ScalarField G;      // zero off the domain
    Channels lambda0;
    Channels v;
    std::vector<double> a;
    int solver_iterations = 0;

    bool empty() const { return domain.empty(); }
};

/// Solver failure inside one region's gradient.
class RegionSolveError : public SolverError {
public:
    RegionSolveError(const SolverError& cause, int region)
        : SolverError("region " + std::to_string(region) + ": " + cause.what(), cause.residual(),
                      cause.iterations()),
          region_(region) {}
    int region() const { return region_; }

private:
    int region_;
};

/// `warm`, when given, seeds both solves with its v and lambda0 fields.
/// Throws std::invalid_argument for an empty region and RegionSolveError
/// when a solve does not converge.
RegionGradient compute_region_gradient(const Channels& image, const RegionMask& region,
                                       const SolverConfig& cfg, int dilation_radius = 3,
                                       int region_index = 0,
                                       const RegionGradient* warm = nullptr);

/// G_i - G_j on D(R_i) & D(R_j), zero elsewhere. `grads` is looked up by
/// region_index; a missing index throws std::invalid_argument.
ScalarField compute_band_force(const Partition& partition, const std::vector<RegionGradient>& grads,
                               int i, int j);

/// D(R_i) & D(R_j) for two computed gradients.
RegionMask pair_band(const RegionGradient& gi, const RegionGradient& gj);

/// -1/2 sum_R lambda0 (I - a) over channels, from an already computed gradient.
/// With the dilated solve this is the band-extended surrogate used in traces.
double surrogate_energy(const RegionGradient& g, const Channels& image);

/// The same quantity from solves on R itself (no dilation).
double region_surrogate_energy(const Channels& image, const RegionMask& region,
                               const SolverConfig& cfg);

/// Sum of region_surrogate_energy over the labelled regions; empty regions add 0.
double partition_surrogate_energy(const Channels& image, const LabelField& labels,
                                  int region_count, const SolverConfig& cfg);

}  // namespace stss
