#include "stss/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "stss/grid.hpp"
#include "stss/kernels.hpp"
#include "stss/pde.hpp"

namespace stss::oracle {

namespace {

constexpr std::size_t kMaxStoredValues = std::size_t{1} << 27;

struct TimeGrid {
    int steps;
    double dt;
};

TimeGrid make_grid(double t_max, double dt) {
    if (!(t_max > 0.0)) throw std::invalid_argument("oracle: t_max must be positive");
    if (!(dt > 0.0) || dt > kMaxHeatStep)
        throw std::invalid_argument("oracle: dt must lie in (0, 0.25] for stability");
    const int steps = std::max(1, static_cast<int>(std::ceil(t_max / dt - 1e-9)));
    return {steps, t_max / steps};
}

double compact_mean(const std::vector<double>& u) {
    std::vector<double> partial;
    for (std::size_t b = 0; b < u.size(); b += kernels::kReductionBlock) {
        const std::size_t e = std::min(u.size(), b + kernels::kReductionBlock);
        double s = 0.0;
        for (std::size_t i = b; i < e; ++i) s += u[i];
        partial.push_back(s);
    }
    return kernels::pairwise_sum(partial) / static_cast<double>(u.size());
}

double centred_square_sum(const std::vector<double>& u, double a,
                          const std::vector<std::uint8_t>& weight) {
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i)
        if (weight[i]) s += (u[i] - a) * (u[i] - a);
    return s;
}

// int_{t0}^{t1} (u(tau) - a) of the piecewise-linear interpolant, accumulated into acc.
void integrate_slices(const ScaleSpace& s, const std::vector<std::size_t>& members, double t0,
                      double t1, double weight, std::vector<double>& acc) {
    const double h = s.dt();
    const int n = static_cast<int>(s.times.size()) - 1;
    if (t1 <= t0) return;
    const int k0 = std::clamp(static_cast<int>(std::floor(t0 / h + 1e-9)), 0, n - 1);
    const int k1 = std::clamp(static_cast<int>(std::ceil(t1 / h - 1e-9)), 1, n);
    for (int k = k0; k < k1; ++k) {
        const double lo = std::max(t0, s.times[k]);
        const double hi = std::min(t1, s.times[k + 1]);
        if (hi <= lo) continue;
        const double wl = (lo - s.times[k]) / h;
        const double wh = (hi - s.times[k]) / h;
        const ScalarField& a = s.slices[k];
        const ScalarField& b = s.slices[k + 1];
        const double half = 0.5 * (hi - lo) * weight;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const std::size_t i = members[m];
            const double at_lo = a[i] + wl * (b[i] - a[i]) - s.mean;
            const double at_hi = a[i] + wh * (b[i] - a[i]) - s.mean;
            acc[m] += half * (at_lo + at_hi);
        }
    }
}

double interpolate(const ScaleSpace& s, std::size_t site, double tau) {
    const double h = s.dt();
    const int n = static_cast<int>(s.times.size()) - 1;
    const int k = std::clamp(static_cast<int>(std::floor(tau / h)), 0, n - 1);
    const double w = std::clamp((tau - s.times[k]) / h, 0.0, 1.0);
    return s.slices[k][site] + w * (s.slices[k + 1][site] - s.slices[k][site]);
}

void check_stack(const ScaleSpace& s) {
    if (s.times.size() < 2 || s.slices.size() != s.times.size())
        throw std::invalid_argument("oracle: scale space has fewer than two slices");
}

}  // namespace

double default_horizon(const RegionMask& region) {
    const double d = std::max(1, geodesic_diameter(region));
    return 10.0 * d * d;
}

ScaleSpace compute_scale_space(const ScalarField& image, const RegionMask& region, double t_max,
                               double dt) {
    require_same_frame(image, region, "compute_scale_space");
    if (region.empty()) throw std::invalid_argument("compute_scale_space: empty region");
    const TimeGrid g = make_grid(t_max, dt);
    if ((static_cast<std::size_t>(g.steps) + 1) * image.size() > kMaxStoredValues)
        throw std::length_error("compute_scale_space: stack too large, use stream_scale_space");

    const MaskedDomain dom = MaskedDomain::build(region);
    ScaleSpace s;
    s.region = region;
    s.mean = mean_over(image, region);
    s.times.reserve(g.steps + 1);
    s.slices.reserve(g.steps + 1);

    std::vector<double> u = dom.gather(image);
    std::vector<double> scratch(u.size());
    ScalarField slice(image.width(), image.height(), 0.0);
    dom.scatter(u, slice);
    s.times.push_back(0.0);
    s.slices.push_back(slice);
    for (int k = 1; k <= g.steps; ++k) {
        heat_step_compact(dom, g.dt, u, scratch);
        dom.scatter(u, slice);
        s.times.push_back(k == g.steps ? t_max : k * g.dt);
        s.slices.push_back(slice);
    }
    return s;
}

double energy_direct(const ScaleSpace& s) {
    check_stack(s);
    const std::vector<std::size_t> members = s.region.member_indices();
    double total = 0.0;
    double prev = 0.0;
    for (std::size_t k = 0; k < s.slices.size(); ++k) {
        double e = 0.0;
        for (std::size_t i : members) {
            const double d = s.slices[k][i] - s.mean;
            e += d * d;
        }
        if (k > 0) total += 0.5 * (s.times[k] - s.times[k - 1]) * (prev + e);
        prev = e;
    }
    return total;
}

ScalarField lambda_direct(const ScaleSpace& s, double t) {
    check_stack(s);
    const double t_max = s.t_max();
    if (t < 0.0 || t > 0.5 * t_max + 1e-12)
        throw std::out_of_range("lambda_direct: t must lie in [0, t_max / 2]");
    const std::vector<std::size_t> members = s.region.member_indices();
    std::vector<double> acc(members.size(), 0.0);
    integrate_slices(s, members, t, t_max - t, 1.0, acc);
    ScalarField out(s.slices[0].width(), s.slices[0].height(), 0.0);
    for (std::size_t m = 0; m < members.size(); ++m) out[members[m]] = -acc[m];
    return out;
}

ScalarField lambda_direct_s_form(const ScaleSpace& s, double t) {
    check_stack(s);
    const double big_t = 0.5 * s.t_max();
    if (t < 0.0 || t > big_t + 1e-12)
        throw std::out_of_range("lambda_direct_s_form: t must lie in [0, t_max / 2]");
    ScalarField out(s.slices[0].width(), s.slices[0].height(), 0.0);
    if (big_t - t <= 0.0) return out;
    const int m = std::max(1, static_cast<int>(std::ceil((big_t - t) / s.dt() - 1e-9)));
    const double hs = (big_t - t) / m;
    for (std::size_t i : s.region.member_indices()) {
        double acc = 0.0;
        for (int k = 0; k <= m; ++k) {
            const double w = (k == 0 || k == m) ? 0.5 : 1.0;
            acc += w * (interpolate(s, i, 2.0 * (t + k * hs) - t) - s.mean);
        }
        out[i] = -2.0 * hs * acc;
    }
    return out;
}

ScalarField lambda_backward(const ScaleSpace& s) {
    check_stack(s);
    const int n = static_cast<int>(s.times.size()) - 1;
    if (n % 2 != 0) throw std::invalid_argument("lambda_backward: needs an even step count");
    const double h = s.dt();
    const MaskedDomain dom = MaskedDomain::build(s.region);
    auto forcing = [&](int k) {
        std::vector<double> f = dom.gather(s.slices[k]);
        for (double& v : f) v -= s.mean;
        return f;
    };
    // Trapezoid on the Duhamel step:
    //   lambda(t-h) = e^{h lap}(lambda(t) - h f(t)) - h f(t-h),  e^{h lap} ~ I + h lap.
    std::vector<double> lambda(dom.slots(), 0.0);
    std::vector<double> scratch(dom.slots());
    std::vector<double> f_hi = forcing(n / 2);
    for (int k = n / 2; k >= 1; --k) {
        for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] -= h * f_hi[i];
        heat_step_compact(dom, h, lambda, scratch);
        std::vector<double> f_lo = forcing(k - 1);
        for (std::size_t i = 0; i < lambda.size(); ++i) lambda[i] -= h * f_lo[i];
        f_hi = std::move(f_lo);
    }
    ScalarField out(s.slices[0].width(), s.slices[0].height(), 0.0);
    dom.scatter(lambda, out);
    return out;
}

StreamedQuantities stream_scale_space(const ScalarField& image, const RegionMask& region,
                                      double t_max, double dt, const RegionMask* energy_sites) {
    require_same_frame(image, region, "stream_scale_space");
    if (energy_sites) require_same_frame(region, *energy_sites, "stream_scale_space");
    if (region.empty()) throw std::invalid_argument("stream_scale_space: empty region");
    const TimeGrid g = make_grid(t_max, dt);
    const MaskedDomain dom = MaskedDomain::build(region);
    std::vector<double> u = dom.gather(image);
    std::vector<double> scratch(u.size());
    const double a = compact_mean(u);
    std::vector<std::uint8_t> weight(u.size(), 1);
    if (energy_sites)
        for (std::size_t k = 0; k < u.size(); ++k) weight[k] = (*energy_sites)[dom.sites[k]] ? 1 : 0;

    StreamedQuantities q;
    q.mean = a;
    q.steps = g.steps;
    std::vector<double> lambda(u.size(), 0.0);
    double prev = centred_square_sum(u, a, weight);
    for (std::size_t i = 0; i < u.size(); ++i) lambda[i] -= 0.5 * g.dt * (u[i] - a);
    for (int k = 1; k <= g.steps; ++k) {
        heat_step_compact(dom, g.dt, u, scratch);
        const double e = centred_square_sum(u, a, weight);
        q.energy += 0.5 * g.dt * (prev + e);
        prev = e;
        const double w = k == g.steps ? 0.5 * g.dt : g.dt;
        for (std::size_t i = 0; i < u.size(); ++i) lambda[i] -= w * (u[i] - a);
    }
    q.lambda0 = ScalarField(image.width(), image.height(), 0.0);
    dom.scatter(lambda, q.lambda0);
    q.final_slice = image;
    dom.scatter(u, q.final_slice);
    return q;
}

double region_energy(const Channels& image, const RegionMask& region, double t_max, double dt) {
    if (region.empty()) return 0.0;
    double e = 0.0;
    for (const ScalarField& c : image) e += stream_scale_space(c, region, t_max, dt).energy;
    return e;
}

double periodic_eigenvalue(int width, int height, int k, int l) {
    const double sx = std::sin(std::numbers::pi * k / width);
    const double sy = std::sin(std::numbers::pi * l / height);
    return 4.0 * sx * sx + 4.0 * sy * sy;
}

ScalarField periodic_mode(int width, int height, int k, int l) {
    if (width <= 0 || height <= 0) throw DimensionError("periodic_mode: empty frame");
    // cos of a self-conjugate frequency is already +-1 everywhere
    const bool self_conjugate = (2 * k) % width == 0 && (2 * l) % height == 0;
    const double amp = self_conjugate ? 1.0 : std::numbers::sqrt2;
    ScalarField f(width, height);
    for (int y = 0; y < height; ++y)
        for (int x = 0; x < width; ++x)
            f(x, y) = amp * std::cos(2.0 * std::numbers::pi *
                                     (static_cast<double>(k) * x / width +
                                      static_cast<double>(l) * y / height));
    return f;
}

FourierCheck fourier_transfer_check(const ScalarField& image, double t_max) {
    if (image.empty()) throw DimensionError("fourier_transfer_check: empty image");
    if (image.size() > 1024)
        throw std::invalid_argument("fourier_transfer_check: frame above 1024 sites");
    if (!(t_max > 0.0)) throw std::invalid_argument("fourier_transfer_check: t_max must be positive");
    const int w = image.width();
    const int h = image.height();
    const auto n = static_cast<Eigen::Index>(image.size());

    double sum = 0.0;
    double scale = 0.0;
    for (double v : image.values()) {
        sum += v;
        scale = std::max(scale, std::abs(v));
    }
    if (std::abs(sum / static_cast<double>(n)) > 1e-10 * std::max(1.0, scale))
        throw std::invalid_argument("fourier_transfer_check: input must have zero mean");

    FourierCheck out;

    // lhs: exact time integral of the semi-discrete periodic heat flow.
    Eigen::MatrixXd neg_lap = Eigen::MatrixXd::Zero(n, n);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            const Eigen::Index i = static_cast<Eigen::Index>(image.index(x, y));
            const Eigen::Index nb[4] = {
                static_cast<Eigen::Index>(image.index((x + w - 1) % w, y)),
                static_cast<Eigen::Index>(image.index((x + 1) % w, y)),
                static_cast<Eigen::Index>(image.index(x, (y + h - 1) % h)),
                static_cast<Eigen::Index>(image.index(x, (y + 1) % h))};
            for (Eigen::Index j : nb) {
                neg_lap(i, i) += 1.0;
                neg_lap(i, j) -= 1.0;
            }
        }
    }
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(neg_lap);
    const Eigen::Map<const Eigen::VectorXd> u0(image.values().data(), n);
    const Eigen::VectorXd coeff = eig.eigenvectors().transpose() * u0;
    for (Eigen::Index k = 0; k < n; ++k) {
        const double mu = std::max(0.0, eig.eigenvalues()(k));
        const double c2 = coeff(k) * coeff(k);
        out.lhs += mu < 1e-12 ? c2 * t_max : c2 * -std::expm1(-2.0 * mu * t_max) / (2.0 * mu);
    }

    // rhs: separable DFT and the stencil's closed-form spectrum.
    std::vector<std::complex<double>> rows(image.size());
    for (int y = 0; y < h; ++y) {
        for (int k = 0; k < w; ++k) {
            std::complex<double> acc = 0.0;
            for (int x = 0; x < w; ++x)
                acc += image(x, y) * std::polar(1.0, -2.0 * std::numbers::pi * k * x / w);
            rows[image.index(k, y)] = acc;
        }
    }
    for (int l = 0; l < h; ++l) {
        for (int k = 0; k < w; ++k) {
            if (k == 0 && l == 0) continue;
            std::complex<double> acc = 0.0;
            for (int y = 0; y < h; ++y)
                acc += rows[image.index(k, y)] * std::polar(1.0, -2.0 * std::numbers::pi * l * y / h);
            const double mu = periodic_eigenvalue(w, h, k, l);
            const double power = std::norm(acc) / static_cast<double>(n);
            out.rhs += power * -std::expm1(-2.0 * mu * t_max) / (2.0 * mu);
            out.rhs_infinite += power / (2.0 * mu);
        }
    }
    return out;
}

double periodic_energy_stepped(const ScalarField& image, double t_max, double dt) {
    const TimeGrid g = make_grid(t_max, dt);
    const int w = image.width();
    const int h = image.height();
    ScalarField u = image;
    ScalarField next(w, h);
    auto square_sum = [](const ScalarField& f) {
        double s = 0.0;
        for (double v : f.values()) s += v * v;
        return s;
    };
    double prev = square_sum(u);
    double total = 0.0;
    for (int k = 0; k < g.steps; ++k) {
        for (int y = 0; y < h; ++y) {
            for (int x = 0; x < w; ++x) {
                const double lap = u((x + w - 1) % w, y) + u((x + 1) % w, y) +
                                   u(x, (y + h - 1) % h) + u(x, (y + 1) % h) - 4.0 * u(x, y);
                next(x, y) = u(x, y) + g.dt * lap;
            }
        }
        std::swap(u, next);
        const double e = square_sum(u);
        total += 0.5 * g.dt * (prev + e);
        prev = e;
    }
    return total;
}

namespace {

void require_labels(const Channels& image, const LabelField& labels) {
    if (image.empty()) throw std::invalid_argument("flip oracle: no channels");
    for (const ScalarField& c : image)
        if (c.width() != labels.width || c.height() != labels.height)
            throw DimensionError("flip oracle: image and labels differ in size");
}

bool has_neighbour_label(const LabelField& labels, int x, int y, int label) {
    constexpr int dx[4] = {-1, 1, 0, 0};
    constexpr int dy[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (nx < 0 || ny < 0 || nx >= labels.width || ny >= labels.height) continue;
        if (labels(nx, ny) == label) return true;
    }
    return false;
}

double flip_horizon(const FlipSettings& settings, const RegionMask& a, const RegionMask& b) {
    if (settings.t_max > 0.0) return settings.t_max;
    return std::max(default_horizon(a), b.empty() ? 0.0 : default_horizon(b));
}

double flip_delta(const Channels& image, const LabelField& labels, int x, int y, int to,
                  const FlipSettings& settings, double before_from, double before_to,
                  double t_max) {
    RegionMask from_mask = mask_of_label(labels, labels(x, y));
    RegionMask to_mask = mask_of_label(labels, to);
    from_mask.set(x, y, false);
    to_mask.set(x, y, true);
    const double after = region_energy(image, from_mask, t_max, settings.dt) +
                         region_energy(image, to_mask, t_max, settings.dt);
    return after - (before_from + before_to);
}

}  // namespace

double boundary_gradient_fd(const Channels& image, const LabelField& labels, int x, int y,
                            int to, const FlipSettings& settings) {
    require_labels(image, labels);
    if (x < 0 || y < 0 || x >= labels.width || y >= labels.height)
        throw std::out_of_range("boundary_gradient_fd: site outside the frame");
    const int from = labels(x, y);
    if (to == from || !has_neighbour_label(labels, x, y, to))
        throw std::invalid_argument("boundary_gradient_fd: site is not on a boundary with region " +
                                    std::to_string(to));
    const RegionMask from_mask = mask_of_label(labels, from);
    const RegionMask to_mask = mask_of_label(labels, to);
    const double t_max = flip_horizon(settings, from_mask, to_mask);
    return flip_delta(image, labels, x, y, to, settings,
                      region_energy(image, from_mask, t_max, settings.dt),
                      region_energy(image, to_mask, t_max, settings.dt), t_max);
}

double boundary_gradient_fd(const Channels& image, const Partition& partition, int x, int y,
                            const FlipSettings& settings) {
    const LabelField labels = hard_labels(partition);
    require_labels(image, labels);
    if (x < 0 || y < 0 || x >= labels.width || y >= labels.height)
        throw std::out_of_range("boundary_gradient_fd: site outside the frame");
    for (int l = 0; l < partition.region_count(); ++l)
        if (l != labels(x, y) && has_neighbour_label(labels, x, y, l))
            return boundary_gradient_fd(image, labels, x, y, l, settings);
    throw std::invalid_argument("boundary_gradient_fd: site is not on an inter-region boundary");
}

std::vector<FlipSample> flip_scan(const Channels& image, const LabelField& labels,
                                  const FlipSettings& settings) {
    require_labels(image, labels);
    std::vector<FlipSample> samples;
    int max_label = 0;
    for (int l : labels.labels) max_label = std::max(max_label, l);
    for (int y = 0; y < labels.height; ++y)
        for (int x = 0; x < labels.width; ++x)
            for (int l = 0; l <= max_label; ++l)
                if (l != labels(x, y) && has_neighbour_label(labels, x, y, l))
                    samples.push_back({x, y, labels(x, y), l, 0.0});

    std::vector<RegionMask> masks;
    for (int l = 0; l <= max_label; ++l) masks.push_back(mask_of_label(labels, l));
    double t_max = settings.t_max;
    if (!(t_max > 0.0))
        for (const RegionMask& m : masks)
            if (!m.empty()) t_max = std::max(t_max, default_horizon(m));
    std::vector<double> before(masks.size());
    for (std::size_t l = 0; l < masks.size(); ++l)
        before[l] = region_energy(image, masks[l], t_max, settings.dt);

    const auto count = static_cast<std::ptrdiff_t>(samples.size());
#pragma omp parallel for schedule(dynamic)
    for (std::ptrdiff_t k = 0; k < count; ++k) {
        FlipSample& s = samples[static_cast<std::size_t>(k)];
        s.delta = flip_delta(image, labels, s.x, s.y, s.to, settings, before[s.from],
                             before[s.to], t_max);
    }
    return samples;
}

}  // namespace stss::oracle
