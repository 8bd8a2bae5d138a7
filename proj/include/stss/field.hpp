#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stss {

/// Raised when two lattice objects that must share a frame do not.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Real-valued samples on a width x height lattice, row-major.
class ScalarField {
public:
    ScalarField() = default;
    ScalarField(int width, int height, double fill = 0.0);
    ScalarField(int width, int height, std::vector<double> values);

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return values_.size(); }
    bool empty() const { return values_.empty(); }

    double& operator()(int x, int y) { return values_[index(x, y)]; }
    double operator()(int x, int y) const { return values_[index(x, y)]; }
    double& operator[](std::size_t i) { return values_[i]; }
    double operator[](std::size_t i) const { return values_[i]; }

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

    std::span<double> values() { return values_; }
    std::span<const double> values() const { return values_; }

    bool all_finite() const;

private:
    int width_ = 0;
    int height_ = 0;
    std::vector<double> values_;
};

/// Boolean lattice subset. Frame edges behave as Neumann walls, not as
/// non-members, when classifying boundary sites.
class RegionMask {
public:
    RegionMask() = default;
    RegionMask(int width, int height, bool fill = false);

    static RegionMask full(int width, int height) { return RegionMask(width, height, true); }

    int width() const { return width_; }
    int height() const { return height_; }
    std::size_t size() const { return member_.size(); }
    std::size_t site_count() const { return site_count_; }
    bool empty() const { return site_count_ == 0; }

    bool operator()(int x, int y) const { return member_[index(x, y)] != 0; }
    bool operator[](std::size_t i) const { return member_[i] != 0; }
    void set(int x, int y, bool value) { set(index(x, y), value); }
    void set(std::size_t i, bool value);

    std::size_t index(int x, int y) const {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
               static_cast<std::size_t>(x);
    }
    bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }
    /// In-frame and a member.
    bool member_at(int x, int y) const { return contains(x, y) && (*this)(x, y); }

    /// Member with at least one in-frame 4-neighbour outside the mask.
    bool is_boundary(int x, int y) const;

    std::vector<std::size_t> member_indices() const;

    RegionMask operator&(const RegionMask& other) const;
    RegionMask operator|(const RegionMask& other) const;
    RegionMask operator~() const;
    bool operator==(const RegionMask& other) const = default;

private:
    int width_ = 0;
    int height_ = 0;
    std::size_t site_count_ = 0;
    std::vector<std::uint8_t> member_;
};

/// Per-site region index.
struct LabelField {
    int width = 0;
    int height = 0;
    std::vector<int> labels;

    int operator()(int x, int y) const { return labels[static_cast<std::size_t>(y) * width + x]; }
    bool operator==(const LabelField&) const = default;
};

/// Relaxed indicators phi_i in [0,1]; hard labels are their argmax.
struct Partition {
    std::vector<ScalarField> indicators;

    int region_count() const { return static_cast<int>(indicators.size()); }
    int width() const { return indicators.empty() ? 0 : indicators.front().width(); }
    int height() const { return indicators.empty() ? 0 : indicators.front().height(); }

    /// One-hot indicators for the given labels.
    static Partition from_labels(const LabelField& labels, int region_count);
};

/// Multi-channel image: k parallel fields over one frame.
using Channels = std::vector<ScalarField>;

void require_same_frame(const ScalarField& a, const RegionMask& b, const char* what);
void require_same_frame(const ScalarField& a, const ScalarField& b, const char* what);
void require_same_frame(const RegionMask& a, const RegionMask& b, const char* what);

RegionMask mask_of_label(const LabelField& labels, int label);

double mean_over(const ScalarField& f, const RegionMask& region);

}  // namespace stss
