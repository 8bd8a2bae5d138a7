#pragma once

#include "stss/field.hpp"

namespace stss {

/// 5-point Laplacian restricted to `region`. Neighbours outside the region or
/// the frame are mirrored (ghost = centre), i.e. those edges carry no flux.
/// Zero outside the region.
ScalarField masked_laplacian(const ScalarField& f, const RegionMask& region);

/// Morphological dilation by the Chebyshev ball of `radius`, clipped to the frame.
RegionMask dilate(const RegionMask& region, int radius);

/// Per-site argmax over the indicators; ties go to the lowest index.
LabelField hard_labels(const Partition& partition);

/// |grad f| from central differences with mirrored neighbours. Zero outside `region`.
ScalarField central_gradient_magnitude(const ScalarField& f, const RegionMask& region);

/// Godunov upwind |grad f| for the motion f_t + speed |grad f| = 0.
/// The one-sided differences taken at each site follow the sign of `speed`
/// there; sites with zero speed get zero. Zero outside `region`.
ScalarField upwind_gradient_magnitude(const ScalarField& f, const RegionMask& region,
                                      const ScalarField& speed);

/// Largest 4-connected geodesic distance between two sites of the same
/// component, in lattice steps.
int geodesic_diameter(const RegionMask& region);

}  // namespace stss
