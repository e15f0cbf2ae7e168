#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace gaitscore {

/// Canonical 17-joint skeleton, 51 scalars per frame (x, y, z per joint, in
/// meters, z up). Slot order is fixed; the 51-feature segment layout depends
/// on it:
///
///   0 head        1 neck        2 hip_center
///   3 l_shoulder  4 r_shoulder  5 l_elbow   6 r_elbow
///   7 l_hand      8 r_hand      9 l_hip    10 r_hip
///  11 l_knee     12 r_knee     13 l_foot   14 r_foot   (foot = ankle/heel)
///  15 l_toe      16 r_toe
struct Skeleton17Frame {
    static constexpr std::size_t kJoints = 17;
    static constexpr std::size_t kScalars = 51;

    std::array<float, kScalars> joints{};

    float x(std::size_t j) const { return joints[3 * j]; }
    float y(std::size_t j) const { return joints[3 * j + 1]; }
    float z(std::size_t j) const { return joints[3 * j + 2]; }
    void set(std::size_t j, float x, float y, float z) {
        joints[3 * j] = x;
        joints[3 * j + 1] = y;
        joints[3 * j + 2] = z;
    }

    bool operator==(const Skeleton17Frame&) const = default;
};

enum Joint : std::size_t {
    kHead = 0,
    kNeck = 1,
    kHipCenter = 2,
    kLShoulder = 3,
    kRShoulder = 4,
    kLElbow = 5,
    kRElbow = 6,
    kLHand = 7,
    kRHand = 8,
    kLHip = 9,
    kRHip = 10,
    kLKnee = 11,
    kRKnee = 12,
    kLFoot = 13,
    kRFoot = 14,
    kLToe = 15,
    kRToe = 16,
};

inline constexpr std::size_t kStepsPerRecording = 8;

/// One subject's recording: uniformly sampled keypoint frames plus optional
/// per-step ground-truth validity labels (always exactly 8 when present).
struct Recording {
    std::string subject_id;
    double fps = 30.0;
    std::vector<Skeleton17Frame> frames;
    std::optional<std::array<bool, kStepsPerRecording>> step_labels;

    bool operator==(const Recording&) const = default;
};

inline constexpr std::size_t kMinFrames = 32;

/// Mapping from a source skeleton layout (e.g. 25 joints) onto the canonical
/// 17 slots. source_index[slot] is the source joint feeding that slot.
struct JointMap {
    std::size_t source_joint_count = 0;
    std::array<std::size_t, Skeleton17Frame::kJoints> source_index{};

    void validate() const;
};

/// Default map for 25-joint Kinect-v2 style skeletons (the NTU layout):
/// head<-3, neck<-2, hip_center<-0, shoulders<-4/8, elbows<-5/9, hands<-7/11,
/// hips<-12/16, knees<-13/17, feet<-14/18 (ankles), toes<-15/19 (foot tips).
JointMap ntu_default_joint_map();

/// JSONL recording format: first line is a header object
///   {"subject_id": ..., "fps": ..., "step_labels": [8 booleans]}
/// (step_labels optional), followed by one frame object per line:
///   {"t": ..., "joints": [51 numbers]}.
/// Frames are sorted by t. Malformed input is rejected with the 1-based line
/// number in the message.
Recording read_recording_jsonl(const std::string& path);

void write_recording_jsonl(const Recording& rec, const std::string& path);

/// Whitespace text adapter: frame count, then per frame a body count, per
/// body a joint count followed by that many joint lines whose first three
/// fields are x y z. Keeps body 0 only; frames with zero bodies are dropped
/// with a warning on stderr.
Recording read_ntu_skeleton(const std::string& path, const JointMap& map);

/// Root-center on hip_center per frame, then divide all coordinates by the
/// median (over frames) hip-to-neck distance. Rejects degenerate skeletons
/// (scale <= 1e-6). Idempotent up to rounding.
Recording normalize_recording(const Recording& rec);

/// All *.jsonl recordings in a directory, sorted by filename.
std::vector<Recording> load_recordings_dir(const std::string& dir);

}  // namespace gaitscore
