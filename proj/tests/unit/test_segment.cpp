#include <cmath>
#include <sstream>

#include "doctest.h"
#include "stss/fixtures.hpp"
#include "stss/gradient.hpp"
#include "stss/grid.hpp"
#include "stss/segment.hpp"

using namespace stss;

namespace {

DescentTrace trace_of(std::size_t sites, std::initializer_list<std::size_t> changes) {
    DescentTrace t;
    t.sites = sites;
    int it = 0;
    for (std::size_t c : changes) {
        TraceRow r;
        r.iteration = ++it;
        r.labels_changed = c;
        t.rows.push_back(r);
    }
    return t;
}

std::size_t mislabeled(const LabelField& labels, const RegionMask& truth) {
    std::size_t bad = 0;
    for (std::size_t i = 0; i < labels.labels.size(); ++i) bad += (labels.labels[i] == 1) != truth[i];
    return bad;
}

}  // namespace

TEST_CASE("DescentConfig defaults and validation") {
    const DescentConfig cfg;
    CHECK(cfg.epsilon == 0.005);
    CHECK(cfg.dilation_radius == 3);
    CHECK(cfg.max_iters == 500);
    CHECK(cfg.convergence_window == 10);
    CHECK(cfg.convergence_threshold == 1e-4);
    CHECK_FALSE(cfg.step_dtau.has_value());
    CHECK_NOTHROW(cfg.validate());
    DescentConfig bad = cfg;
    bad.epsilon = -1.0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.step_dtau = 0.0;
    CHECK_THROWS(bad.validate());
    bad = cfg;
    bad.max_iters = 0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("check_convergence") {
    const DescentConfig cfg;
    CHECK(check_convergence(trace_of(4096, {0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), cfg));
    CHECK_FALSE(check_convergence(trace_of(4096, {0, 0, 0, 1, 0, 0, 0, 0, 0, 0}), cfg));
    CHECK_FALSE(check_convergence(trace_of(4096, {0, 0, 0}), cfg));
    // older entries outside the window do not matter
    CHECK(check_convergence(trace_of(4096, {50, 7, 0, 0, 0, 0, 0, 0, 0, 0, 0, 0}), cfg));
    CHECK(check_convergence(trace_of(1'000'000, {0, 0, 0, 100, 0, 0, 0, 0, 0, 0}), cfg));
}

TEST_CASE("pairwise_band_update") {
    const int w = 12;
    const int h = 1;
    ScalarField ramp(w, h);
    for (int x = 0; x < w; ++x) ramp(x, 0) = 0.05 * x;
    ScalarField other(w, h);
    for (int x = 0; x < w; ++x) other(x, 0) = 1.0 - ramp(x, 0);
    const RegionMask band = fixtures::box_mask(w, h, 3, 0, 9, 1);

    SUBCASE("zero force and zero epsilon leave the fields alone") {
        const PairUpdate u = pairwise_band_update(ramp, other, ScalarField(w, h, 0.0), band, 0.3, 0.0);
        for (std::size_t i = 0; i < ramp.size(); ++i) {
            CHECK(u.phi_i[i] == ramp[i]);
            CHECK(u.phi_j[i] == other[i]);
        }
    }
    SUBCASE("zero force is pure diffusion and conserves the sum") {
        fixtures::Rng rng(1);
        const ScalarField a = fixtures::uniform_texture(9, 7, rng);
        const ScalarField b = fixtures::uniform_texture(9, 7, rng);
        const PairUpdate u = pairwise_band_update(a, b, ScalarField(9, 7, 0.0),
                                                  RegionMask::full(9, 7), 0.3, 0.1);
        double before = 0.0, after = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            before += a[i] + b[i];
            after += u.phi_i[i] + u.phi_j[i];
        }
        CHECK(std::abs(after - before) <= 1e-10);
        CHECK(u.phi_i[10] != a[10]);
    }
    SUBCASE("uniform force on a ramp lowers phi_i by dtau * force * slope") {
        const double dtau = 0.2;
        const double force = 1.5;
        const PairUpdate u =
            pairwise_band_update(ramp, other, ScalarField(w, h, force), band, dtau, 0.0);
        for (int x = 0; x < w; ++x) {
            if (band(x, 0)) {
                CHECK(u.phi_i(x, 0) == doctest::Approx(ramp(x, 0) - dtau * force * 0.05));
                CHECK(u.phi_j(x, 0) == doctest::Approx(other(x, 0) + dtau * force * 0.05));
            } else {
                CHECK(u.phi_i(x, 0) == ramp(x, 0));
            }
        }
    }
}

TEST_CASE("clean two-value blocks are recovered exactly") {
    const int n = 32;
    const ScalarField img = fixtures::box_image(n, n, 8, 8, 24, 24, 1.0, 0.0);
    const RegionMask truth = fixtures::box_mask(n, n, 8, 8, 24, 24);
    const Partition p0 =
        Partition::from_labels(fixtures::labels_from_mask(fixtures::box_mask(n, n, 5, 10, 20, 27)), 2);
    const DescentResult r = run_descent({img}, p0, DescentConfig{}, SolverConfig{});
    CHECK(r.converged);
    CHECK(mislabeled(hard_labels(r.partition), truth) == 0);

    // the truth beats every single-site perturbation of it
    const LabelField t = fixtures::labels_from_mask(truth);
    const SolverConfig cfg;
    const double e_true = partition_surrogate_energy({img}, t, 2, cfg);
    for (int y = 0; y < n; ++y) {
        for (int x = 0; x < n; ++x) {
            const bool edge = truth.is_boundary(x, y) || (~truth).is_boundary(x, y);
            if (!edge) continue;
            LabelField flipped = t;
            flipped.labels[static_cast<std::size_t>(y) * n + x] ^= 1;
            CHECK(partition_surrogate_energy({img}, flipped, 2, cfg) > e_true);
        }
    }
}

TEST_CASE("constant image keeps the initial labels") {
    const int n = 20;
    fixtures::Rng rng(2);
    const RegionMask m = fixtures::random_connected_mask(n, n, 0.4, rng);
    const Partition p0 = Partition::from_labels(fixtures::labels_from_mask(m), 2);
    DescentConfig cfg;
    cfg.max_iters = 30;
    const DescentResult r = run_descent({ScalarField(n, n, 0.5)}, p0, cfg, SolverConfig{});
    CHECK(hard_labels(r.partition) == hard_labels(p0));
    CHECK(r.converged);
}

TEST_CASE("descent is deterministic and keeps indicators in [0,1]") {
    const int n = 24;
    fixtures::Rng rng(3);
    const ScalarField img =
        fixtures::add_noise(fixtures::box_image(n, n, 6, 6, 18, 18, 0.8, 0.2), 0.1, rng);
    const Partition p0 = Partition::from_labels(fixtures::random_block_labels(n, n, 3, 4, rng), 3);
    DescentConfig cfg;
    cfg.max_iters = 25;
    bool in_range = true;
    const auto observe = [&](int, const Partition& p, const LabelField&) {
        for (const ScalarField& f : p.indicators)
            for (double v : f.values()) in_range = in_range && v >= 0.0 && v <= 1.0;
    };
    const DescentResult a = run_descent({img}, p0, cfg, SolverConfig{}, observe);
    const DescentResult b = run_descent({img}, p0, cfg, SolverConfig{});
    CHECK(in_range);
    for (int i = 0; i < 3; ++i)
        for (std::size_t s = 0; s < a.partition.indicators[0].size(); ++s)
            CHECK(a.partition.indicators[i][s] == b.partition.indicators[i][s]);
    REQUIRE(a.trace.rows.size() == b.trace.rows.size());
    for (std::size_t k = 0; k < a.trace.rows.size(); ++k) {
        CHECK(a.trace.rows[k].iteration == static_cast<int>(k) + 1);
        CHECK(a.trace.rows[k].energy_surrogate == b.trace.rows[k].energy_surrogate);
        std::size_t area = 0;
        for (std::size_t v : a.trace.rows[k].areas) area += v;
        CHECK(area == static_cast<std::size_t>(n * n));
    }
}

TEST_CASE("sites outside every band only diffuse") {
    const int n = 24;
    fixtures::Rng rng(4);
    const ScalarField img = fixtures::uniform_texture(n, n, rng);
    const RegionMask m = fixtures::box_mask(n, n, 4, 4, 12, 12);
    Partition p0 = Partition::from_labels(fixtures::labels_from_mask(m), 2);
    // soften the indicators so diffusion has something to do everywhere
    for (ScalarField& f : p0.indicators)
        for (std::size_t s = 0; s < f.size(); ++s) f[s] = 0.1 + 0.8 * f[s] + 0.05 * std::sin(0.7 * s);
    DescentConfig cfg;
    cfg.max_iters = 1;
    const SolverConfig solver;
    const DescentResult r = run_descent({img}, p0, cfg, solver);
    const LabelField l = hard_labels(p0);
    const RegionGradient g0 = compute_region_gradient({img}, mask_of_label(l, 0), solver, 3, 0);
    const RegionGradient g1 = compute_region_gradient({img}, mask_of_label(l, 1), solver, 3, 1);
    const RegionMask band = pair_band(g0, g1);
    const RegionMask full = RegionMask::full(n, n);
    std::size_t checked = 0;
    for (int i = 0; i < 2; ++i) {
        const ScalarField& phi = p0.indicators[i];
        const ScalarField lap = masked_laplacian(phi, full);
        for (std::size_t s = 0; s < phi.size(); ++s) {
            if (band[s]) continue;
            CHECK(r.partition.indicators[i][s] == std::clamp(phi[s] + cfg.epsilon * lap[s], 0.0, 1.0));
            ++checked;
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("frozen data term: the linear surrogate never increases") {
    const int n = 24;
    fixtures::Rng rng(5);
    const ScalarField img =
        fixtures::add_noise(fixtures::box_image(n, n, 6, 6, 18, 18, 0.7, 0.3), 0.05, rng);
    const Partition p0 =
        Partition::from_labels(fixtures::labels_from_mask(fixtures::box_mask(n, n, 4, 8, 16, 20)), 2);
    const SolverConfig solver;
    const LabelField l0 = hard_labels(p0);
    const GradientSet frozen{{compute_region_gradient({img}, mask_of_label(l0, 0), solver, 3, 0),
                              compute_region_gradient({img}, mask_of_label(l0, 1), solver, 3, 1)},
                             0.0};
    auto linear_energy = [&](const LabelField& l) {
        double e = 0.0;
        for (std::size_t s = 0; s < l.labels.size(); ++s)
            e += frozen.regions[static_cast<std::size_t>(l.labels[s])].G[s];
        return e;
    };
    const GradientProvider provider = [&](const LabelField& l, int, const GradientSet*) {
        GradientSet g = frozen;
        g.surrogate_energy = linear_energy(l);
        return g;
    };
    double scale = 1.0;
    bool monotone = false;
    for (int attempt = 0; attempt < 6 && !monotone; ++attempt, scale *= 0.5) {
        DescentConfig cfg;
        cfg.dtau_scale = scale;
        cfg.max_iters = 40;
        std::vector<double> energies{linear_energy(l0)};
        run_descent(provider, p0, cfg,
                    [&](int, const Partition&, const LabelField& l) { energies.push_back(linear_energy(l)); });
        monotone = true;
        for (std::size_t k = 1; k < energies.size(); ++k)
            monotone = monotone && energies[k] <= energies[k - 1] + 1e-12;
        if (monotone) MESSAGE("monotone at dtau_scale = " << scale);
    }
    CHECK(monotone);
}

TEST_CASE("provider failure surfaces with the iteration and partial trace") {
    const int n = 10;
    const Partition p0 = tile_partition(n, n, 2);
    int calls = 0;
    const GradientProvider provider = [&](const LabelField& l, int count, const GradientSet* prev) {
        if (++calls == 3) throw SolverError("did not converge", 1e-3, 7);
        return intensity_provider({ScalarField(n, n, 0.2)}, SolverConfig{}, 3)(l, count, prev);
    };
    try {
        run_descent(provider, p0, DescentConfig{});
        FAIL("expected DescentError");
    } catch (const DescentError& e) {
        CHECK(e.iteration() == 3);
        CHECK(e.trace().rows.size() == 2);
    }
    CHECK_THROWS_AS(run_descent({ScalarField(n, n)}, Partition{{ScalarField(n, n)}}, DescentConfig{},
                                SolverConfig{}),
                    std::invalid_argument);
}

TEST_CASE("trace CSV layout") {
    DescentTrace t = trace_of(100, {3, 0});
    t.rows[0].energy_surrogate = 1.5;
    t.rows[0].areas = {60, 40};
    t.rows[1].areas = {61, 39};
    std::ostringstream os;
    t.write_csv(os);
    CHECK(os.str() == "iteration,energy_surrogate,labels_changed,area_0,area_1\n"
                      "1,1.5,3,60,40\n"
                      "2,0,0,61,39\n");
}

TEST_CASE("initializers") {
    const LabelField halves = hard_labels(tile_partition(8, 4, 2));
    CHECK(halves(3, 2) == 0);
    CHECK(halves(4, 2) == 1);
    const LabelField quads = hard_labels(tile_partition(8, 8, 4));
    CHECK(quads(0, 0) == 0);
    CHECK(quads(7, 0) == 1);
    CHECK(quads(0, 7) == 2);
    CHECK(quads(7, 7) == 3);
    const LabelField three = hard_labels(tile_partition(9, 9, 3));
    for (int l : three.labels) CHECK(l < 3);

    const ScalarField img = fixtures::box_image(16, 16, 4, 4, 12, 12, 0.9, 0.1);
    for (std::uint64_t seed : {1u, 2u, 3u}) {
        const LabelField k = hard_labels(kmeans_partition({img}, 2, seed));
        CHECK(k == fixtures::labels_from_mask(fixtures::box_mask(16, 16, 4, 4, 12, 12)));
    }
    fixtures::Rng rng(6);
    const ScalarField noisy = fixtures::uniform_texture(16, 16, rng);
    CHECK(hard_labels(kmeans_partition({noisy}, 3, 9)) == hard_labels(kmeans_partition({noisy}, 3, 9)));
}
