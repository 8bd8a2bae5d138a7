#include "stss/segment.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <ostream>
#include <random>

#include "stss/grid.hpp"

namespace stss {

void DescentConfig::validate() const {
    if (step_dtau && !(*step_dtau > 0.0))
        throw std::invalid_argument("DescentConfig: step_dtau must be > 0");
    if (!(dtau_scale > 0.0)) throw std::invalid_argument("DescentConfig: dtau_scale must be > 0");
    if (!(epsilon >= 0.0) || epsilon > kMaxHeatStep)
        throw std::invalid_argument("DescentConfig: epsilon must lie in [0, 0.25]");
    if (dilation_radius < 0) throw std::invalid_argument("DescentConfig: dilation_radius < 0");
    if (max_iters < 1) throw std::invalid_argument("DescentConfig: max_iters must be >= 1");
    if (convergence_window < 1)
        throw std::invalid_argument("DescentConfig: convergence_window must be >= 1");
    if (!(convergence_threshold >= 0.0))
        throw std::invalid_argument("DescentConfig: convergence_threshold must be >= 0");
}

void DescentTrace::write_csv(std::ostream& os) const {
    const std::size_t n = rows.empty() ? 0 : rows.front().areas.size();
    const bool oracle =
        std::any_of(rows.begin(), rows.end(), [](const TraceRow& r) { return r.energy_oracle; });
    os << "iteration,energy_surrogate";
    if (oracle) os << ",energy_oracle";
    os << ",labels_changed";
    for (std::size_t i = 0; i < n; ++i) os << ",area_" << i;
    os << '\n';
    const auto old = os.precision(std::numeric_limits<double>::max_digits10);
    for (const TraceRow& r : rows) {
        os << r.iteration << ',' << r.energy_surrogate;
        if (oracle) {
            os << ',';
            if (r.energy_oracle) os << *r.energy_oracle;
        }
        os << ',' << r.labels_changed;
        for (std::size_t a : r.areas) os << ',' << a;
        os << '\n';
    }
    os.precision(old);
}

bool check_convergence(const DescentTrace& trace, const DescentConfig& cfg) {
    const auto window = static_cast<std::size_t>(cfg.convergence_window);
    if (trace.rows.size() < window) return false;
    const double limit = cfg.convergence_threshold * static_cast<double>(trace.sites);
    return std::all_of(trace.rows.end() - static_cast<std::ptrdiff_t>(window), trace.rows.end(),
                       [&](const TraceRow& r) { return static_cast<double>(r.labels_changed) <= limit; });
}

namespace {

// |grad phi| upwinded for the speed `force`.
ScalarField band_gradient(const ScalarField& phi, const ScalarField& force) {
    return upwind_gradient_magnitude(phi, RegionMask::full(phi.width(), phi.height()), force);
}

// next -= dtau * force * grad
void apply_band_force(const ScalarField& force, const ScalarField& grad, double dtau, ScalarField& next) {
    for (std::size_t s = 0; s < next.size(); ++s)
        if (force[s] != 0.0) next[s] -= dtau * force[s] * grad[s];
}

void add_diffusion(const ScalarField& phi, double epsilon, ScalarField& next) {
    if (epsilon == 0.0) return;
    const ScalarField lap = masked_laplacian(phi, RegionMask::full(phi.width(), phi.height()));
    for (std::size_t s = 0; s < next.size(); ++s) next[s] += epsilon * lap[s];
}

ScalarField restrict_to(const ScalarField& force, const RegionMask& band) {
    ScalarField out(force.width(), force.height(), 0.0);
    for (std::size_t s : band.member_indices()) out[s] = force[s];
    return out;
}

void clip_unit(ScalarField& f) {
    for (double& v : f.values()) v = std::clamp(v, 0.0, 1.0);
}

void validate_partition(const Partition& p) {
    if (p.region_count() < 2) throw std::invalid_argument("run_descent: need at least 2 regions");
    for (const ScalarField& f : p.indicators) {
        require_same_frame(f, p.indicators.front(), "run_descent");
        if (!f.all_finite()) throw std::invalid_argument("run_descent: non-finite indicator");
    }
}

}  // namespace

PairUpdate pairwise_band_update(const ScalarField& phi_i, const ScalarField& phi_j,
                                const ScalarField& force, const RegionMask& band, double dtau,
                                double epsilon) {
    require_same_frame(phi_i, phi_j, "pairwise_band_update");
    require_same_frame(phi_i, force, "pairwise_band_update");
    require_same_frame(phi_i, band, "pairwise_band_update");
    const ScalarField f = restrict_to(force, band);
    ScalarField neg = f;
    for (double& v : neg.values()) v = -v;
    PairUpdate out{phi_i, phi_j};
    add_diffusion(phi_i, epsilon, out.phi_i);
    add_diffusion(phi_j, epsilon, out.phi_j);
    apply_band_force(f, band_gradient(phi_i, f), dtau, out.phi_i);
    apply_band_force(neg, band_gradient(phi_j, neg), dtau, out.phi_j);
    return out;
}

GradientProvider intensity_provider(Channels image, SolverConfig solver, int dilation_radius) {
    return [image = std::move(image), solver = std::move(solver), dilation_radius](
               const LabelField& labels, int region_count, const GradientSet* previous) {
        GradientSet gs;
        gs.regions.resize(static_cast<std::size_t>(region_count));
        std::vector<std::exception_ptr> errors(gs.regions.size());
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < region_count; ++i) {
            const auto k = static_cast<std::size_t>(i);
            try {
                const RegionMask mask = mask_of_label(labels, i);
                if (mask.empty()) {
                    gs.regions[k].region_index = i;
                    gs.regions[k].region = mask;
                    gs.regions[k].domain = mask;
                    gs.regions[k].G = ScalarField(labels.width, labels.height, 0.0);
                    continue;
                }
                const RegionGradient* warm =
                    previous && k < previous->regions.size() && !previous->regions[k].empty()
                        ? &previous->regions[k]
                        : nullptr;
                gs.regions[k] = compute_region_gradient(image, mask, solver, dilation_radius, i, warm);
            } catch (...) {
                errors[k] = std::current_exception();
            }
        }
        for (const auto& e : errors)
            if (e) std::rethrow_exception(e);
        for (const RegionGradient& g : gs.regions) gs.surrogate_energy += surrogate_energy(g, image);
        return gs;
    };
}

DescentResult run_descent(const GradientProvider& provider, const Partition& initial,
                          const DescentConfig& cfg, const DescentObserver& observer) {
    cfg.validate();
    validate_partition(initial);
    const int n = initial.region_count();
    const int w = initial.width();
    const int h = initial.height();

    DescentResult result;
    result.partition = initial;
    result.trace.sites = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
    Partition& phi = result.partition;
    LabelField labels = hard_labels(phi);
    GradientSet previous;
    bool have_previous = false;

    for (int it = 1; it <= cfg.max_iters; ++it) {
        GradientSet gs;
        try {
            gs = provider(labels, n, have_previous ? &previous : nullptr);
        } catch (const std::exception& e) {
            throw DescentError("iteration " + std::to_string(it) + ": " + e.what(), it,
                               result.trace);
        }
        if (gs.regions.size() != static_cast<std::size_t>(n))
            throw std::logic_error("run_descent: provider returned the wrong region count");

        struct Pair {
            int i;
            int j;
            ScalarField force;
            ScalarField grad_i;
            ScalarField grad_j;
        };
        std::vector<Pair> pairs;
        double fmax = 0.0;
        for (int i = 0; i < n; ++i) {
            for (int j = i + 1; j < n; ++j) {
                const RegionGradient& gi = gs.regions[static_cast<std::size_t>(i)];
                const RegionGradient& gj = gs.regions[static_cast<std::size_t>(j)];
                if (gi.empty() || gj.empty()) continue;
                const RegionMask band = pair_band(gi, gj);
                if (band.empty()) continue;
                ScalarField force(w, h, 0.0);
                for (std::size_t s : band.member_indices()) force[s] = gi.G[s] - gj.G[s];
                ScalarField neg = force;
                for (double& v : neg.values()) v = -v;
                ScalarField grad_i = band_gradient(phi.indicators[static_cast<std::size_t>(i)], force);
                ScalarField grad_j = band_gradient(phi.indicators[static_cast<std::size_t>(j)], neg);
                Pair p{i, j, std::move(force), std::move(grad_i), std::move(grad_j)};
                for (std::size_t s : band.member_indices()) fmax = std::max(fmax, std::abs(p.force[s]));
                pairs.push_back(std::move(p));
            }
        }
        double dtau = 0.0;
        if (cfg.step_dtau) dtau = *cfg.step_dtau;
        else if (fmax > 0.0) dtau = cfg.dtau_scale * kMaxBandDisplacement / fmax;

        Partition next = phi;
#pragma omp parallel for schedule(static)
        for (int i = 0; i < n; ++i)
            add_diffusion(phi.indicators[static_cast<std::size_t>(i)], cfg.epsilon,
                          next.indicators[static_cast<std::size_t>(i)]);
        // overlapping bands serialise in pair order
        for (Pair& p : pairs) {
            const auto i = static_cast<std::size_t>(p.i);
            const auto j = static_cast<std::size_t>(p.j);
            apply_band_force(p.force, p.grad_i, dtau, next.indicators[i]);
            for (double& v : p.force.values()) v = -v;
            apply_band_force(p.force, p.grad_j, dtau, next.indicators[j]);
        }
        for (ScalarField& f : next.indicators) clip_unit(f);

        LabelField next_labels = hard_labels(next);
        TraceRow row;
        row.iteration = it;
        row.energy_surrogate = gs.surrogate_energy;
        row.areas.assign(static_cast<std::size_t>(n), 0);
        for (std::size_t s = 0; s < next_labels.labels.size(); ++s) {
            if (next_labels.labels[s] != labels.labels[s]) ++row.labels_changed;
            ++row.areas[static_cast<std::size_t>(next_labels.labels[s])];
        }
        result.trace.rows.push_back(std::move(row));

        phi = std::move(next);
        labels = std::move(next_labels);
        previous = std::move(gs);
        have_previous = true;
        if (observer) observer(it, phi, labels);
        if (check_convergence(result.trace, cfg)) {
            result.converged = true;
            break;
        }
    }
    return result;
}

DescentResult run_descent(const Channels& image, const Partition& initial,
                          const DescentConfig& cfg, const SolverConfig& solver,
                          const DescentObserver& observer) {
    solver.validate();
    if (image.empty()) throw std::invalid_argument("run_descent: no channels");
    for (const ScalarField& c : image) require_same_frame(c, initial.indicators.at(0), "run_descent");
    return run_descent(intensity_provider(image, solver, cfg.dilation_radius), initial, cfg,
                       observer);
}

Partition tile_partition(int width, int height, int region_count) {
    if (width <= 0 || height <= 0) throw DimensionError("tile_partition: empty frame");
    if (region_count < 1) throw std::invalid_argument("tile_partition: region_count < 1");
    const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(region_count))));
    const int rows = (region_count + cols - 1) / cols;
    LabelField labels{width, height, std::vector<int>(static_cast<std::size_t>(width) * height)};
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            const int tile = (y * rows / height) * cols + x * cols / width;
            labels.labels[static_cast<std::size_t>(y) * width + x] = std::min(tile, region_count - 1);
        }
    }
    return Partition::from_labels(labels, region_count);
}

Partition kmeans_partition(const Channels& image, int region_count, std::uint64_t seed,
                           int iterations) {
    if (image.empty()) throw std::invalid_argument("kmeans_partition: no channels");
    if (region_count < 1) throw std::invalid_argument("kmeans_partition: region_count < 1");
    for (const ScalarField& c : image) require_same_frame(c, image.front(), "kmeans_partition");
    const std::size_t sites = image.front().size();
    const std::size_t dims = image.size();
    const auto k = static_cast<std::size_t>(region_count);
    auto dist2 = [&](std::size_t s, const std::vector<double>& centre) {
        double d = 0.0;
        for (std::size_t c = 0; c < dims; ++c) {
            const double e = image[c][s] - centre[c];
            d += e * e;
        }
        return d;
    };
    auto point = [&](std::size_t s) {
        std::vector<double> p(dims);
        for (std::size_t c = 0; c < dims; ++c) p[c] = image[c][s];
        return p;
    };

    // k-means++ seeding
    std::mt19937_64 rng(seed);
    std::vector<std::vector<double>> centres;
    centres.push_back(point(std::uniform_int_distribution<std::size_t>(0, sites - 1)(rng)));
    std::vector<double> nearest(sites, std::numeric_limits<double>::infinity());
    while (centres.size() < k) {
        double total = 0.0;
        for (std::size_t s = 0; s < sites; ++s) {
            nearest[s] = std::min(nearest[s], dist2(s, centres.back()));
            total += nearest[s];
        }
        std::size_t pick = 0;
        if (total > 0.0) {
            double r = std::uniform_real_distribution<double>(0.0, total)(rng);
            for (pick = 0; pick + 1 < sites; ++pick) {
                r -= nearest[pick];
                if (r < 0.0) break;
            }
        } else {
            pick = std::uniform_int_distribution<std::size_t>(0, sites - 1)(rng);
        }
        centres.push_back(point(pick));
    }

    std::vector<int> assign(sites, 0);
    for (int iter = 0; iter < iterations; ++iter) {
        bool moved = false;
        for (std::size_t s = 0; s < sites; ++s) {
            int best = 0;
            double best_d = dist2(s, centres[0]);
            for (std::size_t c = 1; c < k; ++c) {
                const double d = dist2(s, centres[c]);
                if (d < best_d) {
                    best_d = d;
                    best = static_cast<int>(c);
                }
            }
            moved = moved || assign[s] != best;
            assign[s] = best;
        }
        std::vector<std::vector<double>> sum(k, std::vector<double>(dims, 0.0));
        std::vector<std::size_t> count(k, 0);
        for (std::size_t s = 0; s < sites; ++s) {
            const auto a = static_cast<std::size_t>(assign[s]);
            ++count[a];
            for (std::size_t c = 0; c < dims; ++c) sum[a][c] += image[c][s];
        }
        for (std::size_t c = 0; c < k; ++c)
            if (count[c] > 0)
                for (std::size_t d = 0; d < dims; ++d) centres[c][d] = sum[c][d] / count[c];
        if (!moved && iter > 0) break;
    }

    std::vector<std::size_t> order(k);
    for (std::size_t c = 0; c < k; ++c) order[c] = c;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return centres[a][0] < centres[b][0];
    });
    std::vector<int> rank(k);
    for (std::size_t r = 0; r < k; ++r) rank[order[r]] = static_cast<int>(r);
    LabelField labels{image.front().width(), image.front().height(), std::vector<int>(sites)};
    for (std::size_t s = 0; s < sites; ++s) labels.labels[s] = rank[static_cast<std::size_t>(assign[s])];
    return Partition::from_labels(labels, region_count);
}

}  // namespace stss
