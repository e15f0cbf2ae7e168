#pragma once

#include <cstdint>
#include <vector>

#include "gaitscore/data_io.hpp"

namespace gaitscore {

/// Synthetic tandem-gait generator. Each recording walks heel-to-toe along a
/// line with 8 step events evenly spaced in time; every step lands with a
/// controlled heel-to-toe gap g, and the oracle label is
/// valid <=> g <= valid_threshold_mm. Coordinate noise is added after
/// labeling, so labels stay tied to the noise-free geometry.
struct SynthConfig {
    std::size_t n_recordings = 27;
    std::size_t frames_per_recording = 144;
    std::uint64_t seed = 0;

    // Gap distributions, drawn per step. Defaults keep a wide margin on both
    // sides of the threshold so noisy re-measurement still classifies >= 95%
    // of steps correctly.
    double valid_gap_mm_lo = 0.0;
    double valid_gap_mm_hi = 12.0;
    double invalid_gap_mm_lo = 60.0;
    double invalid_gap_mm_hi = 150.0;

    double noise_std_mm = 5.0;
    double valid_threshold_mm = 30.0;
    double step_validity_rate = 0.5;

    // Per-recording camera heading jitter; the walk stays roughly lateral to
    // the virtual camera but the exact viewing angle varies per child.
    double heading_jitter_deg = 30.0;

    void validate() const;
};

std::vector<Recording> generate(const SynthConfig& cfg);

/// Number of valid steps according to the stored labels. Rejects recordings
/// without labels.
int oracle_score(const Recording& rec);

/// Frame index at which step `step` (0..7) has just landed; both feet are
/// planted there for a few frames.
std::size_t step_event_frame(std::size_t step, std::size_t total_frames);

/// Heel-to-toe gap re-measured from the joints at the step's event frame:
/// the smaller of dist(l_foot, r_toe) and dist(r_foot, l_toe), in mm.
double measured_heel_toe_gap_mm(const Recording& rec, std::size_t step);

}  // namespace gaitscore
