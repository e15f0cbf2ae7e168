#include "gaitscore/synth.hpp"

#include <cmath>
#include <cstdio>

#include "gaitscore/errors.hpp"
#include "gaitscore/rng.hpp"

namespace gaitscore {

void SynthConfig::validate() const {
    if (frames_per_recording < 144) {
        throw ConfigError("synth: frames_per_recording must be >= 144 (8 windows of 32 at stride 16)");
    }
    if (!(valid_threshold_mm > 0.0)) throw ConfigError("synth: valid_threshold_mm must be > 0");
    if (!(step_validity_rate >= 0.0 && step_validity_rate <= 1.0)) {
        throw ConfigError("synth: step_validity_rate must be in [0, 1]");
    }
    if (valid_gap_mm_lo > valid_gap_mm_hi || invalid_gap_mm_lo > invalid_gap_mm_hi) {
        throw ConfigError("synth: gap range lo must not exceed hi");
    }
    if (valid_gap_mm_lo < 0.0 || invalid_gap_mm_lo < 0.0) {
        throw ConfigError("synth: gaps must be nonnegative");
    }
    if (noise_std_mm < 0.0) throw ConfigError("synth: noise_std_mm must be >= 0");
}

std::size_t step_event_frame(std::size_t step, std::size_t total_frames) {
    // Landing of step i sits at the center of canonical window i: frame
    // 16*i + 16 on the 144-frame timeline, scaled to the actual length.
    return ((16 * step + 16) * total_frames) / 144;
}

namespace {

struct Vec3 {
    double x = 0, y = 0, z = 0;
};

// Child body proportions, all scaled by a per-recording factor.
struct Body {
    double scale;
    double foot_len;
    double hip_h, neck_h, head_h;
    double hip_w, shoulder_w;
    double sway_amp, arm_amp, bob_amp, lift_h;
    double heading;  // radians about z
    double x0, y0;
};

double smoothstep(double p) { return p * p * (3.0 - 2.0 * p); }

}  // namespace

std::vector<Recording> generate(const SynthConfig& cfg) {
    cfg.validate();
    std::vector<Recording> out;
    out.reserve(cfg.n_recordings);

    const std::size_t F = cfg.frames_per_recording;
    const double swing_frames = 12.0 * static_cast<double>(F) / 144.0;

    for (std::size_t r = 0; r < cfg.n_recordings; ++r) {
        Rng rng = make_rng(cfg.seed, r);

        Body body;
        body.scale = uniform_range(rng, 0.85, 1.15);
        body.foot_len = 0.18 * body.scale;
        body.hip_h = 0.80 * body.scale;
        body.neck_h = 1.25 * body.scale;
        body.head_h = 1.45 * body.scale;
        body.hip_w = 0.26 * body.scale;
        body.shoulder_w = 0.32 * body.scale;
        body.sway_amp = uniform_range(rng, 0.010, 0.030);
        body.arm_amp = uniform_range(rng, 0.020, 0.060);
        body.bob_amp = uniform_range(rng, 0.005, 0.015);
        body.lift_h = 0.05 * body.scale;
        const double jitter = cfg.heading_jitter_deg * 3.14159265358979323846 / 180.0;
        body.heading = uniform_range(rng, -jitter, jitter);
        body.x0 = uniform_range(rng, -0.3, 0.3);
        body.y0 = uniform_range(rng, -0.3, 0.3);

        // Per-step gaps and labels. The label is recomputed from the gap, so
        // it stays correct even if a configured range straddles the threshold.
        std::array<double, kStepsPerRecording> gap_m{};
        std::array<bool, kStepsPerRecording> labels{};
        for (std::size_t s = 0; s < kStepsPerRecording; ++s) {
            const bool want_valid = uniform01(rng) < cfg.step_validity_rate;
            const double g_mm = want_valid
                                    ? uniform_range(rng, cfg.valid_gap_mm_lo, cfg.valid_gap_mm_hi)
                                    : uniform_range(rng, cfg.invalid_gap_mm_lo, cfg.invalid_gap_mm_hi);
            gap_m[s] = g_mm / 1000.0;
            labels[s] = g_mm <= cfg.valid_threshold_mm;
        }

        // Stance plan: heel x positions before/after each step. The walk
        // starts already in tandem stance (right foot behind) and feet
        // alternate, right first. Planted feet sit exactly on the line
        // (y = 0, z = 0), so the front-heel-to-back-toe distance at each
        // landing equals the drawn gap.
        std::array<double, kStepsPerRecording + 1> heel_after_l{}, heel_after_r{};
        heel_after_l[0] = 0.0;
        heel_after_r[0] = -(body.foot_len + 0.03 * body.scale);
        for (std::size_t s = 0; s < kStepsPerRecording; ++s) {
            const bool right_moves = (s % 2 == 0);
            const double stance_heel = right_moves ? heel_after_l[s] : heel_after_r[s];
            const double landing = stance_heel + body.foot_len + gap_m[s];
            heel_after_l[s + 1] = right_moves ? heel_after_l[s] : landing;
            heel_after_r[s + 1] = right_moves ? landing : heel_after_r[s];
        }

        Recording rec;
        rec.subject_id = [&] {
            char buf[32];
            std::snprintf(buf, sizeof(buf), "synth_%03zu", r);
            return std::string(buf);
        }();
        rec.fps = 30.0;
        rec.step_labels = labels;
        rec.frames.resize(F);

        const double cos_h = std::cos(body.heading), sin_h = std::sin(body.heading);

        for (std::size_t fi = 0; fi < F; ++fi) {
            const double t = static_cast<double>(fi);

            // Foot placement: interpolate each foot between its stance plan
            // entries, lifting it during the swing that precedes its landing.
            auto foot_state = [&](bool right, Vec3& heel, Vec3& toe) {
                // Which plan interval does frame t fall into for this foot?
                double hx = right ? heel_after_r[0] : heel_after_l[0];
                double hz = 0.0;
                for (std::size_t s = 0; s < kStepsPerRecording; ++s) {
                    if ((s % 2 == 0) != right) continue;  // this step moves the other foot
                    const double land = static_cast<double>(step_event_frame(s, F));
                    const double lift = land - swing_frames;
                    const double from_x = right ? heel_after_r[s] : heel_after_l[s];
                    const double to_x = right ? heel_after_r[s + 1] : heel_after_l[s + 1];
                    if (t >= land) {
                        hx = to_x;
                    } else if (t > lift) {
                        const double p = smoothstep((t - lift) / swing_frames);
                        hx = from_x + (to_x - from_x) * p;
                        hz = body.lift_h * std::sin(3.14159265358979323846 * p);
                    }
                }
                heel = {hx, 0.0, hz};
                toe = {hx + body.foot_len, 0.0, hz};
            };

            Vec3 heel_l, toe_l, heel_r, toe_r;
            foot_state(false, heel_l, toe_l);
            foot_state(true, heel_r, toe_r);

            const double phase = 2.0 * 3.14159265358979323846 * t * 9.0 / static_cast<double>(F);
            const double mid_x = 0.5 * (heel_l.x + heel_r.x) + body.foot_len * 0.5;
            const double sway = body.sway_amp * std::sin(phase);
            const double bob = body.bob_amp * std::sin(2.0 * phase);
            const double arm = body.arm_amp * std::sin(phase);

            Skeleton17Frame& frame = rec.frames[fi];
            auto put = [&](std::size_t slot, double x, double y, double z) {
                // local -> world: heading rotation about z, then offset
                const double wx = cos_h * x - sin_h * y + body.x0;
                const double wy = sin_h * x + cos_h * y + body.y0;
                frame.set(slot, static_cast<float>(wx), static_cast<float>(wy),
                          static_cast<float>(z));
            };

            const double hip_x = mid_x, hip_y = sway, hip_z = body.hip_h + bob;
            put(kHipCenter, hip_x, hip_y, hip_z);
            put(kNeck, hip_x + 0.02 * body.scale, sway * 0.6, body.neck_h + bob);
            put(kHead, hip_x + 0.02 * body.scale, sway * 0.5, body.head_h + bob);

            put(kLHip, hip_x, hip_y + body.hip_w / 2, hip_z);
            put(kRHip, hip_x, hip_y - body.hip_w / 2, hip_z);

            const double sh_z = body.neck_h - 0.03 * body.scale + bob;
            put(kLShoulder, hip_x + 0.02 * body.scale + arm * 0.3, sway * 0.6 + body.shoulder_w / 2, sh_z);
            put(kRShoulder, hip_x + 0.02 * body.scale - arm * 0.3, sway * 0.6 - body.shoulder_w / 2, sh_z);
            put(kLElbow, hip_x + arm, sway * 0.6 + body.shoulder_w / 2, sh_z - 0.22 * body.scale);
            put(kRElbow, hip_x - arm, sway * 0.6 - body.shoulder_w / 2, sh_z - 0.22 * body.scale);
            put(kLHand, hip_x + 1.8 * arm, sway * 0.6 + body.shoulder_w / 2, sh_z - 0.42 * body.scale);
            put(kRHand, hip_x - 1.8 * arm, sway * 0.6 - body.shoulder_w / 2, sh_z - 0.42 * body.scale);

            put(kLKnee, 0.5 * (hip_x + heel_l.x), 0.5 * (hip_y + body.hip_w / 2 + heel_l.y),
                0.5 * (hip_z + heel_l.z) - 0.05 * body.scale);
            put(kRKnee, 0.5 * (hip_x + heel_r.x), 0.5 * (hip_y - body.hip_w / 2 + heel_r.y),
                0.5 * (hip_z + heel_r.z) - 0.05 * body.scale);

            put(kLFoot, heel_l.x, heel_l.y, heel_l.z);
            put(kRFoot, heel_r.x, heel_r.y, heel_r.z);
            put(kLToe, toe_l.x, toe_l.y, toe_l.z);
            put(kRToe, toe_r.x, toe_r.y, toe_r.z);
        }

        // Coordinate noise, drawn after the labels are fixed.
        if (cfg.noise_std_mm > 0.0) {
            const double sigma = cfg.noise_std_mm / 1000.0;
            for (auto& frame : rec.frames) {
                for (float& v : frame.joints) {
                    v = static_cast<float>(v + sigma * normal01(rng));
                }
            }
        }

        out.push_back(std::move(rec));
    }
    return out;
}

int oracle_score(const Recording& rec) {
    if (!rec.step_labels) {
        throw InvalidDatasetError("oracle_score: recording " + rec.subject_id + " has no step labels");
    }
    int score = 0;
    for (bool label : *rec.step_labels) score += label ? 1 : 0;
    return score;
}

double measured_heel_toe_gap_mm(const Recording& rec, std::size_t step) {
    if (step >= kStepsPerRecording) throw ConfigError("measured gap: step index out of range");
    const std::size_t fi = step_event_frame(step, rec.frames.size());
    if (fi >= rec.frames.size()) throw InvalidDatasetError("measured gap: event frame out of range");
    const Skeleton17Frame& f = rec.frames[fi];
    auto dist = [&](std::size_t a, std::size_t b) {
        const double dx = f.x(a) - f.x(b), dy = f.y(a) - f.y(b), dz = f.z(a) - f.z(b);
        return std::sqrt(dx * dx + dy * dy + dz * dz);
    };
    return 1000.0 * std::min(dist(kLFoot, kRToe), dist(kRFoot, kLToe));
}

}  // namespace gaitscore
