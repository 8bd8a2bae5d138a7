#pragma once

// Motion data term: robust brightness-constancy residuals under per-region
// parametric warps, fed to the gradient engine as data channels.
//
// Several frame pairs (typically one frame ahead and one behind) can be
// stacked; each contributes one residual channel per region, so a site
// occluded in one pair is still judged by the other.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "stss/field.hpp"
#include "stss/gradient.hpp"
#include "stss/pde.hpp"
#include "stss/segment.hpp"

namespace stss::motion {

/// I1 is sampled at w(x) and compared with I0(x). `occlusion` marks sites
/// of I0 with no valid correspondence in I1.
struct FramePair {
    Channels I0;
    Channels I1;
    std::optional<RegionMask> occlusion;

    int width() const { return I0.empty() ? 0 : I0.front().width(); }
    int height() const { return I0.empty() ? 0 : I0.front().height(); }
    void validate() const;
};

enum class WarpKind { translation, affine };

/// w(x, y) = (x + p0 + p1 x + p2 y,  y + p3 + p4 x + p5 y).
/// Translations keep p1 = p2 = p4 = p5 = 0.
class WarpModel {
public:
    WarpModel() = default;
    static WarpModel identity(WarpKind kind = WarpKind::translation);
    static WarpModel translation(double dx, double dy);
    static WarpModel affine(const std::array<double, 6>& p);

    WarpKind kind() const { return kind_; }
    const std::array<double, 6>& params() const { return p_; }
    /// 2 values (dx, dy) for translations, all 6 for affine warps.
    std::vector<double> parameters() const;
    std::pair<double, double> apply(double x, double y) const;
    double determinant() const;
    WarpModel inverse() const;
    /// Throws std::invalid_argument when |det| <= 1e-6 or a parameter is not finite.
    void validate() const;

    bool operator==(const WarpModel&) const = default;

private:
    WarpKind kind_ = WarpKind::translation;
    std::array<double, 6> p_{};
};

/// Truncated linear rho(r) = min(|r|, threshold).
struct RobustNorm {
    double threshold = 0.2;
    double operator()(double r) const;
    void validate() const;
};

/// Raised when a region cannot support a motion estimate.
class MotionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Residuals with an explicit validity mask; values at invalid sites are 0
/// and must not be read.
struct ResidualField {
    ScalarField values;
    RegionMask valid;
};

/// Bilinear sample; nullopt outside [0, W-1] x [0, H-1].
std::optional<double> sample_bilinear(const ScalarField& f, double x, double y);

/// rho(|I1(w(x)) - I0(x)|) on `region`; |.| is the Euclidean norm over
/// channels. Occluded and out-of-frame sites are marked invalid.
ResidualField residual_field(const FramePair& pair, const WarpModel& w, const RegionMask& region,
                             const RobustNorm& rho);

/// Exhaustive integer translation search over [-8, 8]^2 minimizing the mean
/// robust residual, then Gauss-Newton refinement on the inliers (affine when
/// requested). A refinement step is kept only if it lowers the cost.
/// Throws std::invalid_argument below 64 sites and MotionError when the
/// region has intensity variance below 1e-6.
WarpModel estimate_warp(const FramePair& pair, const RegionMask& region, WarpKind kind,
                        const RobustNorm& rho = {});

inline constexpr int kSearchRadius = 8;
inline constexpr std::size_t kMinWarpSites = 64;

/// One frame pair plus one warp per region.
struct MotionChannel {
    FramePair pair;
    std::vector<WarpModel> warps;
};

enum class EnergyMode {
    surrogate,     // analytic scale-space term from two linear solves
    oracle,        // brute-force time integration of the scale space
    single_scale,  // sum of rho^2 over valid sites, no centring, no mean term
};

struct MotionEnergy {
    double total = 0.0;
    std::vector<double> mean_term;   // per region, summed over channels
    std::vector<double> scale_term;  // per region, summed over channels
    std::vector<bool> no_valid_sites;
};

struct MotionEnergyOptions {
    EnergyMode mode = EnergyMode::surrogate;
    double oracle_t_max = 0.0;  // <= 0: 10 * diam(R_i)^2 per region
    double oracle_dt = 0.2;
};

MotionEnergy motion_energy(const std::vector<MotionChannel>& channels, const LabelField& labels,
                           int region_count, const RobustNorm& rho, const SolverConfig& cfg,
                           const MotionEnergyOptions& options = {});

MotionEnergy motion_energy(const FramePair& pair, const Partition& partition,
                           const std::vector<WarpModel>& warps, const RobustNorm& rho,
                           const SolverConfig& cfg, const MotionEnergyOptions& options = {});

/// Per-region gradients of the motion energy. Region i's residual is
/// evaluated on D(R_i) with warp w_i; invalid sites take the region-mean
/// residual before the solves. The mean term adds 2 m (Res - m) / |R_i \ O_i|
/// per channel at valid sites.
GradientSet motion_gradient(const std::vector<MotionChannel>& channels, const LabelField& labels,
                            int region_count, const RobustNorm& rho, const SolverConfig& cfg,
                            int dilation_radius = 3, const GradientSet* previous = nullptr);

std::vector<RegionGradient> motion_gradient(const FramePair& pair, const Partition& partition,
                                            const std::vector<WarpModel>& warps,
                                            const RobustNorm& rho, const SolverConfig& cfg,
                                            int dilation_radius = 3);

GradientProvider motion_provider(std::vector<MotionChannel> channels, RobustNorm rho,
                                 SolverConfig cfg, int dilation_radius);

struct Propagation {
    Partition partition;
    std::vector<bool> empty;  // regions with no site after the warp
};

/// Forward nearest-neighbour warp of the hard labels. When several sites land
/// on one target the highest label wins; unreached sites get label 0.
Propagation propagate_labels(const Partition& partition, const std::vector<WarpModel>& warps);

/// Dense flow: u, v displacement per site.
struct FlowField {
    ScalarField u;
    ScalarField v;
};

/// Little-endian "PIEH" layout: magic, width:i32, height:i32, then (u, v)
/// float pairs row-major. Throws std::runtime_error on malformed files.
FlowField read_flow(const std::string& path);
void write_flow(const std::string& path, const FlowField& flow);

/// Least-squares warp matching the flow over `region`.
WarpModel fit_warp_from_flow(const FlowField& flow, const RegionMask& region, WarpKind kind);

}  // namespace stss::motion
