#pragma once

// Synthetic images and masks with known structure, shared by the tests and
// the `validate` CLI mode.

#include <cstdint>
#include <random>

#include "stss/field.hpp"

namespace stss::fixtures {

using Rng = std::mt19937_64;

/// Connected region grown by random accretion from the frame centre until it
/// holds about `fraction` of the sites.
RegionMask random_connected_mask(int width, int height, double fraction, Rng& rng);

/// Sum of a few random low-frequency cosines, scaled into [0, 1].
ScalarField smooth_random_image(int width, int height, Rng& rng, int modes = 4,
                                int max_frequency = 2);

/// I.i.d. Gaussian noise added to every site.
ScalarField add_noise(const ScalarField& f, double sigma, Rng& rng);

/// Uniform [0,1) texture, one value per site.
ScalarField uniform_texture(int width, int height, Rng& rng);

/// Value `inside` on the axis-aligned box [x0,x1) x [y0,y1), `outside` elsewhere.
ScalarField box_image(int width, int height, int x0, int y0, int x1, int y1, double inside,
                      double outside);
RegionMask box_mask(int width, int height, int x0, int y0, int x1, int y1);

/// Columns [0, step) are `left`, the rest `right`.
ScalarField step_image(int width, int height, int step, double left, double right);

/// Labels 1 on the mask, 0 elsewhere.
LabelField labels_from_mask(const RegionMask& foreground);

/// Labels drawn uniformly from [0, region_count) per block x block tile.
LabelField random_block_labels(int width, int height, int region_count, int block, Rng& rng);

/// Two-scale scene: a large low-contrast disc plus small high-contrast speckles.
struct TwoScaleScene {
    ScalarField image;
    RegionMask shape;    // the coarse disc
    RegionMask speckle;  // union of speckle blobs
};
TwoScaleScene two_scale_scene(int size, Rng& rng);

/// Textured background with a textured square that moves `shift` pixels in +x
/// per frame. Frames are at t = -1, 0, +1.
struct MovingSquareScene {
    ScalarField previous;
    ScalarField current;
    ScalarField next;
    RegionMask square;             // square in `current`
    RegionMask occluded_forward;   // background of `current` hidden in `next`
    RegionMask occluded_backward;  // background of `current` hidden in `previous`
    int shift = 0;
};
MovingSquareScene moving_square_scene(int size, int square_size, int shift, Rng& rng);

}  // namespace stss::fixtures
