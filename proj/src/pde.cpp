#include "stss/pde.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stss {

void SolverConfig::validate() const {
    if (!(cg_tolerance > 0.0)) throw std::invalid_argument("SolverConfig: cg_tolerance must be > 0");
    if (!(alpha > 0.0)) throw std::invalid_argument("SolverConfig: alpha must be > 0");
    if (!(heat_dt > 0.0) || heat_dt > kMaxHeatStep)
        throw std::invalid_argument("SolverConfig: heat_dt must lie in (0, 0.25]");
    if (max_iterations && *max_iterations <= 0)
        throw std::invalid_argument("SolverConfig: max_iterations must be positive");
}

int SolverConfig::iteration_cap(std::size_t sites) const {
    if (max_iterations) return *max_iterations;
    const double v = std::ceil(10.0 * std::sqrt(static_cast<double>(sites)));
    return std::min(5000, std::max(100, static_cast<int>(v)));
}

void heat_step_compact(const MaskedDomain& domain, double dt, std::vector<double>& u,
                       std::vector<double>& scratch) {
    scratch.resize(u.size());
    kernels::parallel::heat_step(domain, dt, u, scratch);
    u.swap(scratch);
}

ScalarField heat_step(const ScalarField& u, const RegionMask& region, double dt) {
    require_same_frame(u, region, "heat_step");
    if (!(dt > 0.0) || dt > kMaxHeatStep) {
        std::ostringstream os;
        os << "heat_step: dt=" << dt << " outside the stable range (0, " << kMaxHeatStep << "]";
        throw std::invalid_argument(os.str());
    }
    const MaskedDomain d = MaskedDomain::build(region);
    std::vector<double> compact = d.gather(u);
    std::vector<double> scratch;
    heat_step_compact(d, dt, compact, scratch);
    ScalarField out = u;
    d.scatter(compact, out);
    return out;
}

namespace {

// Either the screened operator v - alpha*lap(v) or the pure Neumann -lap(v).
struct StencilOperator {
    const MaskedDomain* domain;
    bool screened;
    double alpha;

    double shift() const { return screened ? 1.0 : 0.0; }
    double scale() const { return screened ? alpha : 1.0; }

    void apply(std::span<const double> x, std::span<double> out) const {
        if (screened) {
            kernels::parallel::screened_apply(*domain, alpha, x, out);
        } else {
            kernels::parallel::negative_laplacian(*domain, x, out);
        }
    }
};

// Removes the per-component mean; a no-op for nonsingular operators.
struct MeanProjector {
    const MaskedDomain* domain = nullptr;
    bool active = false;

    void operator()(std::span<double> x) const {
        if (!active) return;
        const auto nc = static_cast<std::size_t>(domain->component_count);
        std::vector<double> sum(nc, 0.0);
        std::vector<double> count(nc, 0.0);
        for (std::size_t k = 0; k < x.size(); ++k) {
            const auto c = static_cast<std::size_t>(domain->component[k]);
            sum[c] += x[k];
            count[c] += 1.0;
        }
        for (std::size_t c = 0; c < nc; ++c) sum[c] /= count[c];
        for (std::size_t k = 0; k < x.size(); ++k) {
            x[k] -= sum[static_cast<std::size_t>(domain->component[k])];
        }
    }
};

double norm(std::span<const double> v) { return std::sqrt(kernels::parallel::dot(v, v)); }

SolveStats conjugate_gradient(const StencilOperator& op, const MeanProjector& project,
                              std::span<const double> b, std::vector<double>& x, double tol,
                              int max_iterations, const char* name) {
    const std::size_t n = b.size();
    SolveStats stats;
    const double bnorm = norm(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return stats;
    }
    std::vector<double> r(n), p(n), ap(n);
    auto true_residual = [&]() {
        op.apply(x, ap);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ap[i];
        project(r);
    };
    project(x);
    true_residual();
    double rr = kernels::parallel::dot(r, r);
    p = r;
    int it = 0;
    while (true) {
        if (std::sqrt(rr) / bnorm <= tol) {
            // The recurrence residual can drift; confirm against b - A x.
            true_residual();
            rr = kernels::parallel::dot(r, r);
            if (std::sqrt(rr) / bnorm <= tol) break;
            p = r;
        }
        if (it >= max_iterations) {
            std::ostringstream os;
            os << name << ": no convergence after " << it << " iterations (relative residual "
               << std::sqrt(rr) / bnorm << ")";
            throw SolverError(os.str(), std::sqrt(rr) / bnorm, it);
        }
        op.apply(p, ap);
        project(ap);
        const double pap = kernels::parallel::dot(p, ap);
        if (!(pap > 0.0)) {
            true_residual();
            rr = kernels::parallel::dot(r, r);
            if (std::sqrt(rr) / bnorm <= tol) break;
            throw SolverError(std::string(name) + ": operator lost positive definiteness",
                              std::sqrt(rr) / bnorm, it);
        }
        const double step = rr / pap;
        kernels::parallel::axpy(step, p, x);
        kernels::parallel::axpy(-step, ap, r);
        project(r);
        const double rr_next = kernels::parallel::dot(r, r);
        const double beta = rr_next / rr;
        rr = rr_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
        ++it;
    }
    project(x);
    stats.iterations = it;
    stats.relative_residual = std::sqrt(rr) / bnorm;
    return stats;
}

SolveStats gauss_seidel(const StencilOperator& op, const MeanProjector& project,
                        std::span<const double> b, std::vector<double>& x, double tol,
                        int max_sweeps, const char* name) {
    const MaskedDomain& d = *op.domain;
    const std::size_t n = b.size();
    SolveStats stats;
    const double bnorm = norm(b);
    if (bnorm == 0.0) {
        std::fill(x.begin(), x.end(), 0.0);
        return stats;
    }
    std::vector<double> ax(n);
    auto residual = [&]() {
        op.apply(x, ax);
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += (b[i] - ax[i]) * (b[i] - ax[i]);
        return std::sqrt(s) / bnorm;
    };
    double res = residual();
    int sweep = 0;
    while (res > tol) {
        if (sweep >= max_sweeps) {
            std::ostringstream os;
            os << name << ": Gauss-Seidel did not converge after " << sweep
               << " sweeps (relative residual " << res << ")";
            throw SolverError(os.str(), res, sweep);
        }
        for (std::size_t k = 0; k < n; ++k) {
            double off = 0.0;
            int degree = 0;
            for (int j = 0; j < 4; ++j) {
                const std::int32_t nb = d.neighbors[4 * k + j];
                if (nb >= 0) {
                    off += x[static_cast<std::size_t>(nb)];
                    ++degree;
                }
            }
            const double diag = op.shift() + op.scale() * degree;
            if (diag > 0.0) x[k] = (b[k] + op.scale() * off) / diag;
        }
        project(x);
        res = residual();
        ++sweep;
    }
    stats.iterations = sweep;
    stats.relative_residual = res;
    return stats;
}

SolveStats solve(const StencilOperator& op, const MeanProjector& project,
                 std::span<const double> b, std::vector<double>& x, const SolverConfig& cfg,
                 const char* name) {
    if (b.size() <= kGaussSeidelSites) {
        return gauss_seidel(op, project, b, x, cfg.cg_tolerance,
                            std::max(cfg.iteration_cap(b.size()), 100000), name);
    }
    return conjugate_gradient(op, project, b, x, cfg.cg_tolerance,
                              cfg.iteration_cap(b.size()), name);
}

}  // namespace

ScalarField solve_screened_poisson(const ScalarField& image, const RegionMask& region,
                                   double alpha, const SolverConfig& cfg, SolveStats* stats) {
    require_same_frame(image, region, "solve_screened_poisson");
    cfg.validate();
    if (!(alpha > 0.0)) throw std::invalid_argument("solve_screened_poisson: alpha must be > 0");
    if (region.empty()) throw std::invalid_argument("solve_screened_poisson: empty region");
    const MaskedDomain d = MaskedDomain::build(region);
    const std::vector<double> b = d.gather(image);
    std::vector<double> x;
    if (cfg.warm_start) {
        require_same_frame(*cfg.warm_start, region, "solve_screened_poisson warm start");
        x = d.gather(*cfg.warm_start);
    } else {
        // Krylov updates from x0 = b stay in the sum-zero subspace, so the
        // region mean is preserved up to rounding.
        x = b;
    }
    const StencilOperator op{&d, true, alpha};
    const SolveStats s = solve(op, MeanProjector{}, b, x, cfg, "solve_screened_poisson");
    if (stats) *stats = s;
    ScalarField out = image;
    d.scatter(x, out);
    return out;
}

ScalarField solve_zero_mean_poisson(const ScalarField& rhs, const RegionMask& region,
                                    const SolverConfig& cfg, SolveStats* stats) {
    require_same_frame(rhs, region, "solve_zero_mean_poisson");
    cfg.validate();
    ScalarField out(rhs.width(), rhs.height(), 0.0);
    if (region.empty()) return out;
    const MaskedDomain d = MaskedDomain::build(region);
    const MeanProjector project{&d, true};
    std::vector<double> b = d.gather(rhs);
    project(b);
    std::vector<double> x(b.size(), 0.0);
    if (cfg.warm_start) {
        require_same_frame(*cfg.warm_start, region, "solve_zero_mean_poisson warm start");
        x = d.gather(*cfg.warm_start);
    }
    const StencilOperator op{&d, false, 0.0};
    const SolveStats s = solve(op, project, b, x, cfg, "solve_zero_mean_poisson");
    if (stats) *stats = s;
    d.scatter(x, out);
    return out;
}

}  // namespace stss
