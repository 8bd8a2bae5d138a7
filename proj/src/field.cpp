#include "stss/field.hpp"

#include "stss/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace stss {

ScalarField::ScalarField(int width, int height, double fill)
    : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw std::invalid_argument("ScalarField: negative dimensions");
    }
    values_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ScalarField::ScalarField(int width, int height, std::vector<double> values)
    : width_(width), height_(height), values_(std::move(values)) {
    if (width < 0 || height < 0 ||
        values_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw DimensionError("ScalarField: value count does not match width*height");
    }
}

bool ScalarField::all_finite() const {
    for (double v : values_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

RegionMask::RegionMask(int width, int height, bool fill) : width_(width), height_(height) {
    if (width < 0 || height < 0) {
        throw std::invalid_argument("RegionMask: negative dimensions");
    }
    member_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height),
                   fill ? 1 : 0);
    site_count_ = fill ? member_.size() : 0;
}

void RegionMask::set(std::size_t i, bool value) {
    const bool was = member_[i] != 0;
    if (was == value) return;
    member_[i] = value ? 1 : 0;
    if (value) {
        ++site_count_;
    } else {
        --site_count_;
    }
}

bool RegionMask::is_boundary(int x, int y) const {
    if (!member_at(x, y)) return false;
    constexpr int dx[4] = {-1, 1, 0, 0};
    constexpr int dy[4] = {0, 0, -1, 1};
    for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (contains(nx, ny) && !(*this)(nx, ny)) return true;
    }
    return false;
}

std::vector<std::size_t> RegionMask::member_indices() const {
    std::vector<std::size_t> out;
    out.reserve(site_count_);
    for (std::size_t i = 0; i < member_.size(); ++i) {
        if (member_[i]) out.push_back(i);
    }
    return out;
}

RegionMask RegionMask::operator&(const RegionMask& other) const {
    require_same_frame(*this, other, "RegionMask::operator&");
    RegionMask out(width_, height_);
    for (std::size_t i = 0; i < member_.size(); ++i) out.set(i, member_[i] && other.member_[i]);
    return out;
}

RegionMask RegionMask::operator|(const RegionMask& other) const {
    require_same_frame(*this, other, "RegionMask::operator|");
    RegionMask out(width_, height_);
    for (std::size_t i = 0; i < member_.size(); ++i) out.set(i, member_[i] || other.member_[i]);
    return out;
}

RegionMask RegionMask::operator~() const {
    RegionMask out(width_, height_);
    for (std::size_t i = 0; i < member_.size(); ++i) out.set(i, member_[i] == 0);
    return out;
}

Partition Partition::from_labels(const LabelField& labels, int region_count) {
    Partition p;
    p.indicators.assign(static_cast<std::size_t>(region_count),
                        ScalarField(labels.width, labels.height, 0.0));
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        const int l = labels.labels[i];
        if (l >= 0 && l < region_count) p.indicators[static_cast<std::size_t>(l)][i] = 1.0;
    }
    return p;
}

namespace {

[[noreturn]] void mismatch(const char* what, int w0, int h0, int w1, int h1) {
    std::ostringstream os;
    os << what << ": frame mismatch (" << w0 << "x" << h0 << " vs " << w1 << "x" << h1 << ")";
    throw DimensionError(os.str());
}

}  // namespace

void require_same_frame(const ScalarField& a, const RegionMask& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        mismatch(what, a.width(), a.height(), b.width(), b.height());
}

void require_same_frame(const ScalarField& a, const ScalarField& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        mismatch(what, a.width(), a.height(), b.width(), b.height());
}

void require_same_frame(const RegionMask& a, const RegionMask& b, const char* what) {
    if (a.width() != b.width() || a.height() != b.height())
        mismatch(what, a.width(), a.height(), b.width(), b.height());
}

RegionMask mask_of_label(const LabelField& labels, int label) {
    RegionMask m(labels.width, labels.height);
    for (std::size_t i = 0; i < labels.labels.size(); ++i) {
        if (labels.labels[i] == label) m.set(i, true);
    }
    return m;
}

double mean_over(const ScalarField& f, const RegionMask& region) {
    require_same_frame(f, region, "mean_over");
    if (region.empty()) throw std::invalid_argument("mean_over: empty region");
    std::vector<double> vals;
    vals.reserve(region.site_count());
    for (std::size_t i = 0; i < region.size(); ++i) {
        if (region[i]) vals.push_back(f[i]);
    }
    std::vector<double> partials;
    for (std::size_t b = 0; b < vals.size(); b += kernels::kReductionBlock) {
        double s = 0.0;
        const std::size_t e = std::min(vals.size(), b + kernels::kReductionBlock);
        for (std::size_t i = b; i < e; ++i) s += vals[i];
        partials.push_back(s);
    }
    return kernels::pairwise_sum(partials) / static_cast<double>(vals.size());
}

}  // namespace stss
