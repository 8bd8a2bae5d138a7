#pragma once

#include <optional>
#include <stdexcept>
#include <string>

#include "stss/field.hpp"
#include "stss/kernels.hpp"

namespace stss {

/// Explicit 5-point heat stepping on a unit grid is stable up to this step.
inline constexpr double kMaxHeatStep = 0.25;

struct SolverConfig {
    double cg_tolerance = 1e-8;
    /// Unset: max(100, ceil(10 * sqrt(|R|))), capped at 5000.
    std::optional<int> max_iterations;
    double heat_dt = 0.2;
    /// Screened-Poisson scale; acts as the largest scale the gradient sees.
    double alpha = 20.0;
    /// Initial iterate for the next solve, full-frame; only region sites are read.
    std::optional<ScalarField> warm_start;

    void validate() const;
    int iteration_cap(std::size_t sites) const;
};

/// Iterative solve that stopped before reaching the requested tolerance.
class SolverError : public std::runtime_error {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}
    double residual() const { return residual_; }
    int iterations() const { return iterations_; }

private:
    double residual_;
    int iterations_;
};

struct SolveStats {
    int iterations = 0;
    double relative_residual = 0.0;
};

/// u + dt * masked_laplacian(u, R) on R; other sites copied through.
ScalarField heat_step(const ScalarField& u, const RegionMask& region, double dt);

/// In-place variant on a prebuilt domain, used by the oracle's long time loops.
void heat_step_compact(const MaskedDomain& domain, double dt, std::vector<double>& u,
                       std::vector<double>& scratch);

/// Solves v - alpha * lap(v) = image on `region` with zero-flux walls.
/// Sites outside the region keep the input image value.
ScalarField solve_screened_poisson(const ScalarField& image, const RegionMask& region,
                                   double alpha, const SolverConfig& cfg,
                                   SolveStats* stats = nullptr);

/// Solves -lap(lambda) = rhs - mean(rhs) on each 4-connected component of
/// `region`, returning the solution with zero mean on every component.
/// Zero outside the region.
ScalarField solve_zero_mean_poisson(const ScalarField& rhs, const RegionMask& region,
                                    const SolverConfig& cfg, SolveStats* stats = nullptr);

/// Regions at or below this many sites are solved by Gauss-Seidel sweeps.
inline constexpr std::size_t kGaussSeidelSites = 16;

}  // namespace stss
