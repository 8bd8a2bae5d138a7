#include "stss/motion.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <exception>
#include <fstream>
#include <limits>

#include <Eigen/Dense>

#include "stss/grid.hpp"
#include "stss/oracle.hpp"

namespace stss::motion {

void FramePair::validate() const {
    if (I0.empty() || I1.empty()) throw std::invalid_argument("FramePair: no channels");
    if (I0.size() != I1.size()) throw std::invalid_argument("FramePair: channel counts differ");
    for (std::size_t c = 0; c < I0.size(); ++c) {
        require_same_frame(I0[c], I0.front(), "FramePair");
        require_same_frame(I1[c], I0.front(), "FramePair");
    }
    if (occlusion) require_same_frame(I0.front(), *occlusion, "FramePair occlusion");
}

WarpModel WarpModel::identity(WarpKind kind) {
    WarpModel w;
    w.kind_ = kind;
    return w;
}

WarpModel WarpModel::translation(double dx, double dy) {
    WarpModel w;
    w.p_[0] = dx;
    w.p_[3] = dy;
    return w;
}

WarpModel WarpModel::affine(const std::array<double, 6>& p) {
    WarpModel w;
    w.kind_ = WarpKind::affine;
    w.p_ = p;
    return w;
}

std::vector<double> WarpModel::parameters() const {
    if (kind_ == WarpKind::translation) return {p_[0], p_[3]};
    return {p_.begin(), p_.end()};
}

std::pair<double, double> WarpModel::apply(double x, double y) const {
    return {x + p_[0] + p_[1] * x + p_[2] * y, y + p_[3] + p_[4] * x + p_[5] * y};
}

double WarpModel::determinant() const { return (1.0 + p_[1]) * (1.0 + p_[5]) - p_[2] * p_[4]; }

WarpModel WarpModel::inverse() const {
    validate();
    if (kind_ == WarpKind::translation) return translation(-p_[0], -p_[3]);
    const double det = determinant();
    const double a = (1.0 + p_[5]) / det;
    const double b = -p_[2] / det;
    const double c = -p_[4] / det;
    const double d = (1.0 + p_[1]) / det;
    return affine({-(a * p_[0] + b * p_[3]), a - 1.0, b, -(c * p_[0] + d * p_[3]), c, d - 1.0});
}

void WarpModel::validate() const {
    for (double v : p_)
        if (!std::isfinite(v)) throw std::invalid_argument("WarpModel: non-finite parameter");
    if (std::abs(determinant()) <= 1e-6) throw std::invalid_argument("WarpModel: singular warp");
}

double RobustNorm::operator()(double r) const { return std::min(std::abs(r), threshold); }

void RobustNorm::validate() const {
    if (!(threshold > 0.0)) throw std::invalid_argument("RobustNorm: threshold must be > 0");
}

std::optional<double> sample_bilinear(const ScalarField& f, double x, double y) {
    constexpr double tol = 1e-9;
    const int w = f.width();
    const int h = f.height();
    if (!(x >= -tol && y >= -tol && x <= w - 1 + tol && y <= h - 1 + tol)) return std::nullopt;
    x = std::clamp(x, 0.0, static_cast<double>(w - 1));
    y = std::clamp(y, 0.0, static_cast<double>(h - 1));
    const int x0 = std::min(static_cast<int>(x), std::max(w - 2, 0));
    const int y0 = std::min(static_cast<int>(y), std::max(h - 2, 0));
    const double fx = x - x0;
    const double fy = y - y0;
    const int x1 = std::min(x0 + 1, w - 1);
    const int y1 = std::min(y0 + 1, h - 1);
    const double top = f(x0, y0) + fx * (f(x1, y0) - f(x0, y0));
    const double bottom = f(x0, y1) + fx * (f(x1, y1) - f(x0, y1));
    return top + fy * (bottom - top);
}

namespace {

// Euclidean channel difference at one site, nullopt when invalid.
std::optional<double> site_difference(const FramePair& pair, const WarpModel& w, int x, int y) {
    if (pair.occlusion && (*pair.occlusion)(x, y)) return std::nullopt;
    const auto [wx, wy] = w.apply(x, y);
    double d2 = 0.0;
    for (std::size_t c = 0; c < pair.I0.size(); ++c) {
        const std::optional<double> s = sample_bilinear(pair.I1[c], wx, wy);
        if (!s) return std::nullopt;
        const double d = *s - pair.I0[c](x, y);
        d2 += d * d;
    }
    return std::sqrt(d2);
}

struct Cost {
    double mean = std::numeric_limits<double>::infinity();
    std::size_t valid = 0;
};

Cost robust_cost(const FramePair& pair, const WarpModel& w, const std::vector<std::size_t>& sites,
                 const RobustNorm& rho) {
    const int width = pair.width();
    double sum = 0.0;
    std::size_t valid = 0;
    for (std::size_t s : sites) {
        const auto d = site_difference(pair, w, static_cast<int>(s % width), static_cast<int>(s / width));
        if (!d) continue;
        sum += rho(*d);
        ++valid;
    }
    Cost c;
    c.valid = valid;
    // too few correspondences to trust
    if (2 * valid >= sites.size() && valid > 0) c.mean = sum / static_cast<double>(valid);
    return c;
}

ScalarField central_x(const ScalarField& f) {
    ScalarField g(f.width(), f.height());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const int xl = std::max(x - 1, 0);
            const int xr = std::min(x + 1, f.width() - 1);
            g(x, y) = xr == xl ? 0.0 : (f(xr, y) - f(xl, y)) / (xr - xl);
        }
    return g;
}

ScalarField central_y(const ScalarField& f) {
    ScalarField g(f.width(), f.height());
    for (int y = 0; y < f.height(); ++y)
        for (int x = 0; x < f.width(); ++x) {
            const int yu = std::max(y - 1, 0);
            const int yd = std::min(y + 1, f.height() - 1);
            g(x, y) = yd == yu ? 0.0 : (f(x, yd) - f(x, yu)) / (yd - yu);
        }
    return g;
}

WarpModel with_params(WarpKind kind, const Eigen::VectorXd& theta) {
    if (kind == WarpKind::translation) return WarpModel::translation(theta(0), theta(1));
    return WarpModel::affine({theta(0), theta(1), theta(2), theta(3), theta(4), theta(5)});
}

Eigen::VectorXd params_of(const WarpModel& w) {
    const std::vector<double> p = w.parameters();
    return Eigen::Map<const Eigen::VectorXd>(p.data(), static_cast<Eigen::Index>(p.size()));
}

WarpModel refine(const FramePair& pair, const std::vector<std::size_t>& sites, WarpModel w,
                 const RobustNorm& rho) {
    const int width = pair.width();
    std::vector<ScalarField> gx, gy;
    for (const ScalarField& c : pair.I1) {
        gx.push_back(central_x(c));
        gy.push_back(central_y(c));
    }
    const Eigen::Index np = w.kind() == WarpKind::translation ? 2 : 6;
    Cost best = robust_cost(pair, w, sites, rho);
    for (int iter = 0; iter < 30; ++iter) {
        Eigen::MatrixXd jtj = Eigen::MatrixXd::Zero(np, np);
        Eigen::VectorXd jtr = Eigen::VectorXd::Zero(np);
        for (std::size_t s : sites) {
            const int x = static_cast<int>(s % width);
            const int y = static_cast<int>(s / width);
            const auto d = site_difference(pair, w, x, y);
            if (!d || *d >= rho.threshold) continue;  // inliers only
            const auto [wx, wy] = w.apply(x, y);
            for (std::size_t c = 0; c < pair.I0.size(); ++c) {
                const double r = *sample_bilinear(pair.I1[c], wx, wy) - pair.I0[c](x, y);
                const double ix = *sample_bilinear(gx[c], wx, wy);
                const double iy = *sample_bilinear(gy[c], wx, wy);
                Eigen::VectorXd j(np);
                if (np == 2) j << ix, iy;
                else j << ix, ix * x, ix * y, iy, iy * x, iy * y;
                jtj += j * j.transpose();
                jtr += j * r;
            }
        }
        if (jtr.norm() == 0.0) break;
        const double damping = 1e-6 * std::max(1.0, jtj.trace() / static_cast<double>(np));
        const Eigen::VectorXd delta =
            -(jtj + damping * Eigen::MatrixXd::Identity(np, np)).ldlt().solve(jtr);
        if (!delta.allFinite()) break;
        bool improved = false;
        for (double step = 1.0; step > 1.0 / 32.0; step *= 0.5) {
            const WarpModel cand = with_params(w.kind(), params_of(w) + step * delta);
            if (std::abs(cand.determinant()) <= 1e-6) continue;
            const Cost c = robust_cost(pair, cand, sites, rho);
            if (c.mean < best.mean) {
                w = cand;
                best = c;
                improved = true;
                break;
            }
        }
        if (!improved || delta.norm() < 1e-6) break;
    }
    return w;
}

// Residual channels of region `label` evaluated on `domain`, invalid sites
// filled with the mean over the region's valid sites.
struct FilledResidual {
    ScalarField values;
    ResidualField raw;
    double mean = 0.0;
    std::size_t valid_in_region = 0;
};

FilledResidual filled_residual(const FramePair& pair, const WarpModel& w, const RegionMask& region,
                               const RegionMask& domain, const RobustNorm& rho) {
    FilledResidual f;
    f.raw = residual_field(pair, w, domain, rho);
    double sum = 0.0;
    for (std::size_t s : region.member_indices()) {
        if (!f.raw.valid[s]) continue;
        sum += f.raw.values[s];
        ++f.valid_in_region;
    }
    if (f.valid_in_region > 0) f.mean = sum / static_cast<double>(f.valid_in_region);
    f.values = ScalarField(region.width(), region.height(), 0.0);
    for (std::size_t s : domain.member_indices())
        f.values[s] = f.raw.valid[s] ? f.raw.values[s] : f.mean;
    return f;
}

void check_channels(const std::vector<MotionChannel>& channels, const LabelField& labels,
                    int region_count) {
    if (channels.empty()) throw std::invalid_argument("motion: no frame pairs");
    for (const MotionChannel& c : channels) {
        c.pair.validate();
        if (c.pair.width() != labels.width || c.pair.height() != labels.height)
            throw DimensionError("motion: frames and labels differ in size");
        if (c.warps.size() != static_cast<std::size_t>(region_count))
            throw std::invalid_argument("motion: need one warp per region");
    }
}

}  // namespace

ResidualField residual_field(const FramePair& pair, const WarpModel& w, const RegionMask& region,
                             const RobustNorm& rho) {
    pair.validate();
    rho.validate();
    require_same_frame(pair.I0.front(), region, "residual_field");
    ResidualField r{ScalarField(region.width(), region.height(), 0.0),
                    RegionMask(region.width(), region.height())};
    for (std::size_t s : region.member_indices()) {
        const auto d = site_difference(pair, w, static_cast<int>(s % region.width()),
                                       static_cast<int>(s / region.width()));
        if (!d) continue;
        r.values[s] = rho(*d);
        r.valid.set(s, true);
    }
    return r;
}

WarpModel estimate_warp(const FramePair& pair, const RegionMask& region, WarpKind kind,
                        const RobustNorm& rho) {
    pair.validate();
    rho.validate();
    require_same_frame(pair.I0.front(), region, "estimate_warp");
    const std::vector<std::size_t> sites = region.member_indices();
    if (sites.size() < kMinWarpSites)
        throw std::invalid_argument("estimate_warp: region has fewer than 64 sites");
    double variance = 0.0;
    for (const ScalarField& c : pair.I0) {
        const double m = mean_over(c, region);
        double v = 0.0;
        for (std::size_t s : sites) v += (c[s] - m) * (c[s] - m);
        variance += v / static_cast<double>(sites.size());
    }
    if (variance < 1e-6) throw MotionError("estimate_warp: region has no texture, motion unreliable");

    WarpModel best = WarpModel::identity();
    Cost best_cost = robust_cost(pair, best, sites, rho);
    int best_norm = 0;
    for (int dy = -kSearchRadius; dy <= kSearchRadius; ++dy) {
        for (int dx = -kSearchRadius; dx <= kSearchRadius; ++dx) {
            const WarpModel w = WarpModel::translation(dx, dy);
            const Cost c = robust_cost(pair, w, sites, rho);
            const int norm = std::abs(dx) + std::abs(dy);
            if (c.mean < best_cost.mean || (c.mean == best_cost.mean && norm < best_norm)) {
                best = w;
                best_cost = c;
                best_norm = norm;
            }
        }
    }
    if (!std::isfinite(best_cost.mean))
        throw MotionError("estimate_warp: no candidate keeps half the region in frame");
    if (kind == WarpKind::affine) best = WarpModel::affine(best.params());
    return refine(pair, sites, best, rho);
}

MotionEnergy motion_energy(const std::vector<MotionChannel>& channels, const LabelField& labels,
                           int region_count, const RobustNorm& rho, const SolverConfig& cfg,
                           const MotionEnergyOptions& options) {
    check_channels(channels, labels, region_count);
    const auto n = static_cast<std::size_t>(region_count);
    MotionEnergy e;
    e.mean_term.assign(n, 0.0);
    e.scale_term.assign(n, 0.0);
    e.no_valid_sites.assign(n, false);
    for (int i = 0; i < region_count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        const RegionMask region = mask_of_label(labels, i);
        if (region.empty()) {
            e.no_valid_sites[k] = true;
            continue;
        }
        for (const MotionChannel& ch : channels) {
            const FilledResidual f = filled_residual(ch.pair, ch.warps[k], region, region, rho);
            if (f.valid_in_region == 0) {
                e.no_valid_sites[k] = true;
                continue;
            }
            const RegionMask valid = f.raw.valid & region;
            switch (options.mode) {
                case EnergyMode::single_scale:
                    for (std::size_t s : valid.member_indices())
                        e.scale_term[k] += f.raw.values[s] * f.raw.values[s];
                    break;
                case EnergyMode::surrogate:
                    e.mean_term[k] += f.mean * f.mean;
                    e.scale_term[k] += surrogate_energy(
                        compute_region_gradient({f.values}, region, cfg, 0, i), {f.values});
                    break;
                case EnergyMode::oracle: {
                    e.mean_term[k] += f.mean * f.mean;
                    const double t = options.oracle_t_max > 0.0 ? options.oracle_t_max
                                                                : oracle::default_horizon(region);
                    e.scale_term[k] +=
                        oracle::stream_scale_space(f.values, region, t, options.oracle_dt, &valid).energy;
                    break;
                }
            }
        }
        e.total += e.mean_term[k] + e.scale_term[k];
    }
    return e;
}

MotionEnergy motion_energy(const FramePair& pair, const Partition& partition,
                           const std::vector<WarpModel>& warps, const RobustNorm& rho,
                           const SolverConfig& cfg, const MotionEnergyOptions& options) {
    return motion_energy({MotionChannel{pair, warps}}, hard_labels(partition),
                         partition.region_count(), rho, cfg, options);
}

GradientSet motion_gradient(const std::vector<MotionChannel>& channels, const LabelField& labels,
                            int region_count, const RobustNorm& rho, const SolverConfig& cfg,
                            int dilation_radius, const GradientSet* previous) {
    check_channels(channels, labels, region_count);
    rho.validate();
    const auto n = static_cast<std::size_t>(region_count);
    GradientSet gs;
    gs.regions.resize(n);
    std::vector<double> energy(n, 0.0);
    std::vector<std::exception_ptr> errors(n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < region_count; ++i) {
        const auto k = static_cast<std::size_t>(i);
        try {
            const RegionMask region = mask_of_label(labels, i);
            RegionGradient& g = gs.regions[k];
            if (region.empty()) {
                g.region_index = i;
                g.region = region;
                g.domain = region;
                g.G = ScalarField(labels.width, labels.height, 0.0);
                continue;
            }
            const RegionMask domain = dilate(region, dilation_radius);
            std::vector<FilledResidual> res;
            Channels data;
            for (const MotionChannel& ch : channels) {
                res.push_back(filled_residual(ch.pair, ch.warps[k], region, domain, rho));
                data.push_back(res.back().values);
            }
            const RegionGradient* warm =
                previous && k < previous->regions.size() && !previous->regions[k].empty()
                    ? &previous->regions[k]
                    : nullptr;
            g = compute_region_gradient(data, region, cfg, dilation_radius, i, warm);
            energy[k] = surrogate_energy(g, data);
            for (const FilledResidual& f : res) {
                if (f.valid_in_region == 0) continue;
                energy[k] += f.mean * f.mean;
                const double scale = 2.0 * f.mean / static_cast<double>(f.valid_in_region);
                for (std::size_t s : domain.member_indices())
                    if (f.raw.valid[s]) g.G[s] += scale * (f.raw.values[s] - f.mean);
            }
        } catch (...) {
            errors[k] = std::current_exception();
        }
    }
    for (const auto& e : errors)
        if (e) std::rethrow_exception(e);
    for (double v : energy) gs.surrogate_energy += v;
    return gs;
}

std::vector<RegionGradient> motion_gradient(const FramePair& pair, const Partition& partition,
                                            const std::vector<WarpModel>& warps,
                                            const RobustNorm& rho, const SolverConfig& cfg,
                                            int dilation_radius) {
    return motion_gradient({MotionChannel{pair, warps}}, hard_labels(partition),
                           partition.region_count(), rho, cfg, dilation_radius)
        .regions;
}

GradientProvider motion_provider(std::vector<MotionChannel> channels, RobustNorm rho,
                                 SolverConfig cfg, int dilation_radius) {
    return [channels = std::move(channels), rho, cfg = std::move(cfg), dilation_radius](
               const LabelField& labels, int region_count, const GradientSet* previous) {
        return motion_gradient(channels, labels, region_count, rho, cfg, dilation_radius, previous);
    };
}

Propagation propagate_labels(const Partition& partition, const std::vector<WarpModel>& warps) {
    const int n = partition.region_count();
    if (warps.size() != static_cast<std::size_t>(n))
        throw std::invalid_argument("propagate_labels: need one warp per region");
    for (const WarpModel& w : warps) w.validate();
    const LabelField labels = hard_labels(partition);
    LabelField out{labels.width, labels.height, std::vector<int>(labels.labels.size(), -1)};
    for (int y = 0; y < labels.height; ++y) {
        for (int x = 0; x < labels.width; ++x) {
            const int l = labels(x, y);
            const auto [wx, wy] = warps[static_cast<std::size_t>(l)].apply(x, y);
            const long tx = std::lround(wx);
            const long ty = std::lround(wy);
            if (tx < 0 || ty < 0 || tx >= labels.width || ty >= labels.height) continue;
            int& target = out.labels[static_cast<std::size_t>(ty) * labels.width + tx];
            target = std::max(target, l);
        }
    }
    Propagation p;
    p.empty.assign(static_cast<std::size_t>(n), true);
    for (int& l : out.labels) {
        if (l < 0) l = 0;
        p.empty[static_cast<std::size_t>(l)] = false;
    }
    p.partition = Partition::from_labels(out, n);
    return p;
}

namespace {

constexpr char kFlowMagic[4] = {'P', 'I', 'E', 'H'};

template <typename T>
T from_little_endian(const char* bytes) {
    static_assert(sizeof(T) == 4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(bytes[i]);
    return std::bit_cast<T>(v);
}

template <typename T>
void to_little_endian(T value, char* bytes) {
    static_assert(sizeof(T) == 4);
    std::uint32_t v = std::bit_cast<std::uint32_t>(value);
    for (int i = 0; i < 4; ++i) {
        bytes[i] = static_cast<char>(v & 0xFFu);
        v >>= 8;
    }
}

}  // namespace

FlowField read_flow(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("read_flow: cannot open " + path);
    char header[12];
    if (!in.read(header, 12)) throw std::runtime_error("read_flow: truncated header in " + path);
    if (std::memcmp(header, kFlowMagic, 4) != 0)
        throw std::runtime_error("read_flow: bad magic in " + path);
    const auto w = from_little_endian<std::int32_t>(header + 4);
    const auto h = from_little_endian<std::int32_t>(header + 8);
    if (w <= 0 || h <= 0 || static_cast<long long>(w) * h > (1LL << 28))
        throw std::runtime_error("read_flow: implausible size in " + path);
    FlowField f{ScalarField(w, h), ScalarField(w, h)};
    std::vector<char> buf(static_cast<std::size_t>(w) * h * 8);
    if (!in.read(buf.data(), static_cast<std::streamsize>(buf.size())))
        throw std::runtime_error("read_flow: truncated data in " + path);
    for (std::size_t i = 0; i < f.u.size(); ++i) {
        f.u[i] = from_little_endian<float>(buf.data() + 8 * i);
        f.v[i] = from_little_endian<float>(buf.data() + 8 * i + 4);
    }
    return f;
}

void write_flow(const std::string& path, const FlowField& flow) {
    require_same_frame(flow.u, flow.v, "write_flow");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_flow: cannot open " + path);
    char word[4];
    out.write(kFlowMagic, 4);
    to_little_endian<std::int32_t>(flow.u.width(), word);
    out.write(word, 4);
    to_little_endian<std::int32_t>(flow.u.height(), word);
    out.write(word, 4);
    for (std::size_t i = 0; i < flow.u.size(); ++i) {
        to_little_endian(static_cast<float>(flow.u[i]), word);
        out.write(word, 4);
        to_little_endian(static_cast<float>(flow.v[i]), word);
        out.write(word, 4);
    }
    if (!out) throw std::runtime_error("write_flow: write failed for " + path);
}

WarpModel fit_warp_from_flow(const FlowField& flow, const RegionMask& region, WarpKind kind) {
    require_same_frame(flow.u, region, "fit_warp_from_flow");
    const std::vector<std::size_t> sites = region.member_indices();
    if (sites.empty()) throw std::invalid_argument("fit_warp_from_flow: empty region");
    const int w = region.width();
    if (kind == WarpKind::translation) {
        double su = 0.0, sv = 0.0;
        for (std::size_t s : sites) {
            su += flow.u[s];
            sv += flow.v[s];
        }
        return WarpModel::translation(su / sites.size(), sv / sites.size());
    }
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atu = Eigen::Vector3d::Zero();
    Eigen::Vector3d atv = Eigen::Vector3d::Zero();
    for (std::size_t s : sites) {
        const Eigen::Vector3d row(1.0, static_cast<double>(s % w), static_cast<double>(s / w));
        ata += row * row.transpose();
        atu += row * flow.u[s];
        atv += row * flow.v[s];
    }
    const auto solver = ata.ldlt();
    if (solver.info() != Eigen::Success || std::abs(ata.determinant()) < 1e-9)
        throw std::invalid_argument("fit_warp_from_flow: region too thin for an affine fit");
    const Eigen::Vector3d pu = solver.solve(atu);
    const Eigen::Vector3d pv = solver.solve(atv);
    return WarpModel::affine({pu(0), pu(1), pu(2), pv(0), pv(1), pv(2)});
}

}  // namespace stss::motion
