#pragma once

// Multi-label relaxed-indicator descent.
//
// Each iteration: hard labels, per-region gradients on dilated regions,
// pairwise band updates
//   phi_i <- phi_i - dtau (G_i - G_j) |grad phi_i| + eps lap phi_i
// with phi_j getting the mirrored force, plain eps-diffusion elsewhere,
// then clipping to [0,1].

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include "stss/field.hpp"
#include "stss/gradient.hpp"
#include "stss/pde.hpp"

namespace stss {

struct DescentConfig {
    /// Fixed step. Unset: dtau = dtau_scale * 0.45 / max |G_i - G_j| over all bands.
    std::optional<double> step_dtau;
    double dtau_scale = 1.0;
    double epsilon = 0.005;
    int dilation_radius = 3;
    int max_iters = 500;
    int convergence_window = 10;
    /// Fraction of sites allowed to change label per iteration inside the window.
    double convergence_threshold = 1e-4;

    void validate() const;
};

inline constexpr double kMaxBandDisplacement = 0.45;

struct TraceRow {
    int iteration = 0;
    /// Surrogate energy of the labels the iteration started from.
    double energy_surrogate = 0.0;
    std::optional<double> energy_oracle;
    std::size_t labels_changed = 0;
    std::vector<std::size_t> areas;  // after the update
};

struct DescentTrace {
    std::size_t sites = 0;
    std::vector<TraceRow> rows;

    /// iteration,energy_surrogate,labels_changed,area_0..area_{N-1}
    void write_csv(std::ostream& os) const;
};

/// Gradients for every region (empty regions get an empty RegionGradient)
/// plus the surrogate energy at the given labels.
struct GradientSet {
    std::vector<RegionGradient> regions;
    double surrogate_energy = 0.0;
};

/// `previous` is the last iteration's set, for warm starts; null on the first call.
using GradientProvider =
    std::function<GradientSet(const LabelField& labels, int region_count, const GradientSet* previous)>;

/// Called after each iteration with the updated partition and its labels.
using DescentObserver =
    std::function<void(int iteration, const Partition& partition, const LabelField& labels)>;

/// Intensity data term: one compute_region_gradient per non-empty region,
/// regions in parallel, warm-started from `previous`.
GradientProvider intensity_provider(Channels image, SolverConfig solver, int dilation_radius);

struct DescentResult {
    Partition partition;
    DescentTrace trace;
    bool converged = false;
};

/// Failure inside run_descent; carries the partial trace.
class DescentError : public std::runtime_error {
public:
    DescentError(const std::string& what, int iteration, DescentTrace trace)
        : std::runtime_error(what), iteration_(iteration), trace_(std::move(trace)) {}
    int iteration() const { return iteration_; }
    const DescentTrace& trace() const { return trace_; }

private:
    int iteration_;
    DescentTrace trace_;
};

DescentResult run_descent(const GradientProvider& provider, const Partition& initial,
                          const DescentConfig& cfg, const DescentObserver& observer = {});

DescentResult run_descent(const Channels& image, const Partition& initial,
                          const DescentConfig& cfg, const SolverConfig& solver,
                          const DescentObserver& observer = {});

/// One band update for the pair (i, j) on `band`, applied to copies of the
/// fields. `force` is G_i - G_j; |grad phi| is upwinded by the sign of the
/// force each field sees. eps-diffusion uses the full-frame Neumann stencil.
struct PairUpdate {
    ScalarField phi_i;
    ScalarField phi_j;
};
PairUpdate pairwise_band_update(const ScalarField& phi_i, const ScalarField& phi_j,
                                const ScalarField& force, const RegionMask& band, double dtau,
                                double epsilon);

/// True iff the trace holds at least `convergence_window` rows and each of
/// the last that many changed at most threshold * sites labels.
bool check_convergence(const DescentTrace& trace, const DescentConfig& cfg);

/// Initializers.
Partition tile_partition(int width, int height, int region_count);
/// k-means on per-site intensity vectors; centres seeded by k-means++ from `seed`.
/// Clusters are relabelled by ascending mean of the first channel.
Partition kmeans_partition(const Channels& image, int region_count, std::uint64_t seed,
                           int iterations = 50);

}  // namespace stss
