#include "stss/validation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <ostream>

#include "stss/fixtures.hpp"
#include "stss/oracle.hpp"
#include "stss/pde.hpp"

namespace stss::validation {

namespace {

double norm2_over(const ScalarField& f, const RegionMask& r) {
    double s = 0.0;
    for (std::size_t i : r.member_indices()) s += f[i] * f[i];
    return std::sqrt(s);
}

double relative_l2(const ScalarField& a, const ScalarField& b, const RegionMask& r) {
    double d = 0.0;
    for (std::size_t i : r.member_indices()) d += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(d) / std::max(norm2_over(b, r), 1e-300);
}

double relative_linf(const ScalarField& a, const ScalarField& b, const RegionMask& r) {
    double d = 0.0, m = 0.0;
    for (std::size_t i : r.member_indices()) {
        d = std::max(d, std::abs(a[i] - b[i]));
        m = std::max(m, std::abs(b[i]));
    }
    return d / std::max(m, 1e-300);
}

CheckResult check(std::string name, double value, double limit) {
    return {std::move(name), value, limit, value <= limit};
}

}  // namespace

std::vector<CheckResult> run_suite(std::uint64_t seed) {
    std::vector<CheckResult> out;
    fixtures::Rng rng(seed);
    SolverConfig tight;
    tight.cg_tolerance = 1e-12;

    // lambda(0) from the scale space against the Poisson path
    double worst = 0.0;
    for (int k = 0; k < 2; ++k) {
        const RegionMask r = fixtures::random_connected_mask(16, 16, 0.5, rng);
        const ScalarField img = fixtures::smooth_random_image(16, 16, rng);
        const auto s = oracle::stream_scale_space(img, r, oracle::default_horizon(r), 0.2);
        ScalarField rhs(16, 16, 0.0);
        for (std::size_t i : r.member_indices()) rhs[i] = -img[i];
        worst = std::max(worst, relative_l2(s.lambda0, solve_zero_mean_poisson(rhs, r, tight), r));
    }
    out.push_back(check("lambda0 oracle vs poisson (rel L2)", worst, 1e-2));

    {
        const RegionMask r = RegionMask::full(12, 12);
        const ScalarField img = fixtures::smooth_random_image(12, 12, rng);
        const auto s = oracle::compute_scale_space(img, r, 100.0, 0.05);
        out.push_back(check("adjoint backward vs direct (rel Linf)",
                            relative_linf(oracle::lambda_backward(s), oracle::lambda_direct(s, 0.0), r),
                            1e-2));
    }

    {
        const auto fc = oracle::fourier_transfer_check(oracle::periodic_mode(8, 8, 1, 2), 50.0);
        out.push_back(check("fourier single mode (rel)", std::abs(fc.lhs - fc.rhs) / fc.rhs, 1e-10));
        ScalarField z = fixtures::uniform_texture(8, 8, rng);
        const double m = mean_over(z, RegionMask::full(8, 8));
        for (double& v : z.values()) v -= m;
        const auto fr = oracle::fourier_transfer_check(z, 1e4);
        out.push_back(check("fourier random input (rel)", std::abs(fr.lhs - fr.rhs) / fr.rhs, 1e-3));
    }

    {
        const RegionMask r = fixtures::random_connected_mask(24, 24, 0.4, rng);
        ScalarField u = fixtures::uniform_texture(24, 24, rng);
        const double m0 = mean_over(u, r) * static_cast<double>(r.site_count());
        for (int i = 0; i < 1000; ++i) u = heat_step(u, r, 0.25);
        const double m1 = mean_over(u, r) * static_cast<double>(r.site_count());
        out.push_back(check("heat mass drift over 1000 steps (rel)", std::abs(m1 - m0) / std::abs(m0), 1e-10));

        const ScalarField img = fixtures::smooth_random_image(24, 24, rng);
        const ScalarField lam = solve_zero_mean_poisson(img, r, tight);
        double lmax = 0.0;
        for (std::size_t i : r.member_indices()) lmax = std::max(lmax, std::abs(lam[i]));
        out.push_back(check("zero-mean poisson solution (|mean|/max)", std::abs(mean_over(lam, r)) / lmax, 1e-10));

        const ScalarField v = solve_screened_poisson(img, r, 20.0, tight);
        out.push_back(check("screened poisson mean preservation (rel)",
                            std::abs(mean_over(v, r) - mean_over(img, r)) / std::abs(mean_over(img, r)),
                            1e-8));
    }
    return out;
}

void print_table(std::ostream& os, const std::vector<CheckResult>& results) {
    for (const CheckResult& r : results)
        os << (r.pass ? "PASS " : "FAIL ") << r.name << "  " << std::setprecision(3) << std::scientific
           << r.value << " <= " << r.limit << std::defaultfloat << '\n';
}

}  // namespace stss::validation
