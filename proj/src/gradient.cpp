#include "stss/gradient.hpp"

#include <stdexcept>

#include "stss/grid.hpp"

namespace stss {

namespace {

void require_channels(const Channels& image, const RegionMask& region, const char* what) {
    if (image.empty()) throw std::invalid_argument(std::string(what) + ": no channels");
    for (const ScalarField& c : image) require_same_frame(c, region, what);
}

}  // namespace

RegionGradient compute_region_gradient(const Channels& image, const RegionMask& region,
                                       const SolverConfig& cfg, int dilation_radius,
                                       int region_index, const RegionGradient* warm) {
    require_channels(image, region, "compute_region_gradient");
    cfg.validate();
    if (region.empty())
        throw std::invalid_argument("compute_region_gradient: region " +
                                    std::to_string(region_index) + " is empty");

    RegionGradient g;
    g.region_index = region_index;
    g.region = region;
    g.domain = dilate(region, dilation_radius);
    g.G = ScalarField(region.width(), region.height(), 0.0);
    const bool use_warm = warm != nullptr && !warm->empty() &&
                          warm->v.size() == image.size() && warm->lambda0.size() == image.size() &&
                          warm->G.width() == region.width() && warm->G.height() == region.height();

    const std::vector<std::size_t> sites = g.domain.member_indices();
    for (std::size_t c = 0; c < image.size(); ++c) {
        const ScalarField& I = image[c];
        const double a = mean_over(I, region);
        SolverConfig local = cfg;
        SolveStats stats;
        try {
            local.warm_start.reset();
            if (use_warm) local.warm_start = warm->v[c];
            ScalarField v = solve_screened_poisson(I, g.domain, cfg.alpha, local, &stats);
            g.solver_iterations += stats.iterations;

            ScalarField rhs(I.width(), I.height(), 0.0);
            for (std::size_t i : sites) rhs[i] = v[i] - I[i];
            local.warm_start.reset();
            if (use_warm) local.warm_start = warm->lambda0[c];
            ScalarField lambda = solve_zero_mean_poisson(rhs, g.domain, local, &stats);
            g.solver_iterations += stats.iterations;

            const ScalarField grad = central_gradient_magnitude(lambda, g.domain);
            for (std::size_t i : sites)
                g.G[i] += -0.5 * grad[i] * grad[i] - lambda[i] * (I[i] - a);
            g.v.push_back(std::move(v));
            g.lambda0.push_back(std::move(lambda));
            g.a.push_back(a);
        } catch (const SolverError& e) {
            throw RegionSolveError(e, region_index);
        }
    }
    return g;
}

RegionMask pair_band(const RegionGradient& gi, const RegionGradient& gj) {
    if (gi.empty() || gj.empty()) {
        const RegionMask& any = gi.empty() ? gj.domain : gi.domain;
        return RegionMask(any.width(), any.height());
    }
    return gi.domain & gj.domain;
}

ScalarField compute_band_force(const Partition& partition, const std::vector<RegionGradient>& grads,
                               int i, int j) {
    if (i == j) throw std::invalid_argument("compute_band_force: i == j");
    auto find = [&](int k) -> const RegionGradient& {
        for (const RegionGradient& g : grads)
            if (g.region_index == k) return g;
        throw std::invalid_argument("compute_band_force: no gradient for region " +
                                    std::to_string(k));
    };
    const RegionGradient& gi = find(i);
    const RegionGradient& gj = find(j);
    ScalarField force(partition.width(), partition.height(), 0.0);
    if (gi.empty() || gj.empty()) return force;
    require_same_frame(force, gi.domain, "compute_band_force");
    const RegionMask band = pair_band(gi, gj);
    for (std::size_t s : band.member_indices()) force[s] = gi.G[s] - gj.G[s];
    return force;
}

double surrogate_energy(const RegionGradient& g, const Channels& image) {
    if (g.empty()) return 0.0;
    double e = 0.0;
    const std::vector<std::size_t> sites = g.region.member_indices();
    for (std::size_t c = 0; c < image.size(); ++c)
        for (std::size_t i : sites) e += -0.5 * g.lambda0[c][i] * (image[c][i] - g.a[c]);
    return e;
}

double region_surrogate_energy(const Channels& image, const RegionMask& region,
                               const SolverConfig& cfg) {
    if (region.empty()) return 0.0;
    return surrogate_energy(compute_region_gradient(image, region, cfg, 0), image);
}

double partition_surrogate_energy(const Channels& image, const LabelField& labels,
                                  int region_count, const SolverConfig& cfg) {
    double e = 0.0;
    for (int l = 0; l < region_count; ++l)
        e += region_surrogate_energy(image, mask_of_label(labels, l), cfg);
    return e;
}

}  // namespace stss
