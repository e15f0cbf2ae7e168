#include "gaitscore/data_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <json.hpp>

#include "gaitscore/errors.hpp"

namespace gaitscore {

namespace fs = std::filesystem;
using nlohmann::json;

void JointMap::validate() const {
    if (source_joint_count == 0) throw ConfigError("joint map: source joint count must be positive");
    std::array<bool, Skeleton17Frame::kJoints> seen_slot{};
    std::vector<bool> seen_source(source_joint_count, false);
    for (std::size_t slot = 0; slot < Skeleton17Frame::kJoints; ++slot) {
        const std::size_t src = source_index[slot];
        if (src >= source_joint_count) {
            throw ConfigError("joint map: slot " + std::to_string(slot) + " references source joint " +
                              std::to_string(src) + " but source has " +
                              std::to_string(source_joint_count) + " joints");
        }
        if (seen_source[src]) {
            throw ConfigError("joint map: source joint " + std::to_string(src) + " mapped twice");
        }
        seen_source[src] = true;
        seen_slot[slot] = true;
    }
    for (bool s : seen_slot) {
        if (!s) throw ConfigError("joint map: not all 17 slots covered");
    }
}

JointMap ntu_default_joint_map() {
    JointMap map;
    map.source_joint_count = 25;
    map.source_index = {
        3,   // head
        2,   // neck
        0,   // hip_center (spine base)
        4,  8,   // shoulders
        5,  9,   // elbows
        7,  11,  // hands
        12, 16,  // hips
        13, 17,  // knees
        14, 18,  // feet (ankles)
        15, 19,  // toes (foot tips)
    };
    return map;
}

namespace {

[[noreturn]] void reject(const std::string& path, std::size_t line, const std::string& what) {
    throw InvalidDatasetError(path + ":" + std::to_string(line) + ": " + what);
}

void check_recording(const Recording& rec, const std::string& path) {
    if (rec.frames.size() < kMinFrames) {
        throw InvalidDatasetError(path + ": recording has " + std::to_string(rec.frames.size()) +
                                  " frames, need at least " + std::to_string(kMinFrames));
    }
}

std::string format_float(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

}  // namespace

Recording read_recording_jsonl(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);

    Recording rec;
    struct TimedFrame {
        double t;
        std::size_t order;
        Skeleton17Frame frame;
    };
    std::vector<TimedFrame> frames;

    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(f, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::exception& e) {
            reject(path, line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!obj.is_object()) reject(path, line_no, "expected a JSON object");

        if (!have_header) {
            if (!obj.contains("subject_id") || !obj["subject_id"].is_string()) {
                reject(path, line_no, "header must carry a string subject_id");
            }
            rec.subject_id = obj["subject_id"].get<std::string>();
            if (obj.contains("fps")) {
                if (!obj["fps"].is_number()) reject(path, line_no, "fps must be a number");
                rec.fps = obj["fps"].get<double>();
                if (!(rec.fps > 0.0) || !std::isfinite(rec.fps)) {
                    reject(path, line_no, "fps must be positive and finite");
                }
            }
            if (obj.contains("step_labels")) {
                const json& labels = obj["step_labels"];
                if (!labels.is_array() || labels.size() != kStepsPerRecording) {
                    reject(path, line_no, "step_labels must be an array of exactly 8 booleans");
                }
                std::array<bool, kStepsPerRecording> arr{};
                for (std::size_t i = 0; i < kStepsPerRecording; ++i) {
                    if (!labels[i].is_boolean()) {
                        reject(path, line_no, "step_labels[" + std::to_string(i) + "] is not a boolean");
                    }
                    arr[i] = labels[i].get<bool>();
                }
                rec.step_labels = arr;
            }
            for (auto& [key, _] : obj.items()) {
                if (key != "subject_id" && key != "fps" && key != "step_labels") {
                    reject(path, line_no, "unknown header field \"" + key + "\"");
                }
            }
            have_header = true;
            continue;
        }

        if (!obj.contains("t") || !obj["t"].is_number()) {
            reject(path, line_no, "frame line must carry numeric t");
        }
        const double t = obj["t"].get<double>();
        if (!std::isfinite(t)) reject(path, line_no, "frame t is not finite");
        if (!obj.contains("joints") || !obj["joints"].is_array()) {
            reject(path, line_no, "frame line must carry a joints array");
        }
        const json& joints = obj["joints"];
        if (joints.size() != Skeleton17Frame::kScalars) {
            reject(path, line_no, "frame has " + std::to_string(joints.size()) +
                                      " joint values, expected 51");
        }
        Skeleton17Frame frame;
        for (std::size_t i = 0; i < Skeleton17Frame::kScalars; ++i) {
            if (!joints[i].is_number()) {
                reject(path, line_no, "joints[" + std::to_string(i) + "] is not a number");
            }
            const double v = joints[i].get<double>();
            if (!std::isfinite(v)) {
                reject(path, line_no, "joints[" + std::to_string(i) + "] is not finite");
            }
            frame.joints[i] = static_cast<float>(v);
        }
        frames.push_back({t, frames.size(), frame});
    }
    if (!have_header) {
        throw InvalidDatasetError(path + ": empty file, expected a header line");
    }

    std::stable_sort(frames.begin(), frames.end(), [](const TimedFrame& a, const TimedFrame& b) {
        return a.t < b.t;
    });
    rec.frames.reserve(frames.size());
    for (auto& tf : frames) rec.frames.push_back(tf.frame);

    check_recording(rec, path);
    return rec;
}

void write_recording_jsonl(const Recording& rec, const std::string& path) {
    std::ofstream f(path, std::ios::trunc);
    if (!f) throw IoError("cannot open " + path + " for writing");

    std::ostringstream out;
    out << "{\"subject_id\":" << json(rec.subject_id).dump() << ",\"fps\":" << format_float(rec.fps);
    if (rec.step_labels) {
        out << ",\"step_labels\":[";
        for (std::size_t i = 0; i < kStepsPerRecording; ++i) {
            out << ((*rec.step_labels)[i] ? "true" : "false");
            if (i + 1 < kStepsPerRecording) out << ',';
        }
        out << ']';
    }
    out << "}\n";

    for (std::size_t i = 0; i < rec.frames.size(); ++i) {
        out << "{\"t\":" << format_float(static_cast<double>(i) / rec.fps) << ",\"joints\":[";
        const auto& j = rec.frames[i].joints;
        for (std::size_t k = 0; k < j.size(); ++k) {
            out << format_float(j[k]);
            if (k + 1 < j.size()) out << ',';
        }
        out << "]}\n";
    }
    f << out.str();
    if (!f) throw IoError("write failed for " + path);
}

Recording read_ntu_skeleton(const std::string& path, const JointMap& map) {
    map.validate();
    std::ifstream f(path);
    if (!f) throw IoError("cannot open " + path);

    std::string line;
    std::size_t line_no = 0;
    auto next_line = [&](const char* what) -> std::string {
        while (std::getline(f, line)) {
            ++line_no;
            // allow blank separator lines
            if (line.find_first_not_of(" \t\r") != std::string::npos) return line;
        }
        throw InvalidDatasetError(path + ":" + std::to_string(line_no) +
                                  ": unexpected end of file, expected " + what);
    };
    auto parse_count = [&](const std::string& text, const char* what) -> long {
        long value = 0;
        std::istringstream ss(text);
        if (!(ss >> value) || value < 0) {
            reject(path, line_no, std::string("expected a nonnegative ") + what);
        }
        std::string rest;
        if (ss >> rest) reject(path, line_no, std::string("trailing tokens after ") + what);
        return value;
    };

    const long frame_count = parse_count(next_line("frame count"), "frame count");
    if (frame_count > 1000000) reject(path, line_no, "implausible frame count");

    Recording rec;
    rec.subject_id = fs::path(path).stem().string();
    rec.fps = 30.0;

    for (long fi = 0; fi < frame_count; ++fi) {
        const long body_count = parse_count(next_line("body count"), "body count");
        if (body_count == 0) {
            std::cerr << "warning: " << path << ": frame " << fi << " has no bodies, dropped\n";
            continue;
        }
        Skeleton17Frame frame;
        for (long bi = 0; bi < body_count; ++bi) {
            const long joint_count = parse_count(next_line("joint count"), "joint count");
            if (bi == 0) {
                for (std::size_t slot = 0; slot < Skeleton17Frame::kJoints; ++slot) {
                    if (map.source_index[slot] >= static_cast<std::size_t>(joint_count)) {
                        reject(path, line_no,
                               "joint map needs source joint " + std::to_string(map.source_index[slot]) +
                                   " but body has only " + std::to_string(joint_count));
                    }
                }
            }
            std::vector<std::array<double, 3>> joints(static_cast<std::size_t>(joint_count));
            for (long ji = 0; ji < joint_count; ++ji) {
                std::istringstream ss(next_line("joint line"));
                double x, y, z;
                if (!(ss >> x >> y >> z)) {
                    reject(path, line_no, "joint line must start with three numeric fields");
                }
                if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
                    reject(path, line_no, "joint coordinates must be finite");
                }
                joints[static_cast<std::size_t>(ji)] = {x, y, z};
            }
            if (bi == 0) {
                for (std::size_t slot = 0; slot < Skeleton17Frame::kJoints; ++slot) {
                    const auto& j = joints[map.source_index[slot]];
                    frame.set(slot, static_cast<float>(j[0]), static_cast<float>(j[1]),
                              static_cast<float>(j[2]));
                }
            }
            // bodies past the first are read and ignored
        }
        rec.frames.push_back(frame);
    }

    check_recording(rec, path);
    return rec;
}

Recording normalize_recording(const Recording& rec) {
    if (rec.frames.empty()) throw InvalidDatasetError("normalize: recording has no frames");

    Recording out = rec;
    std::vector<double> neck_dist;
    neck_dist.reserve(out.frames.size());
    for (auto& frame : out.frames) {
        const float hx = frame.x(kHipCenter), hy = frame.y(kHipCenter), hz = frame.z(kHipCenter);
        for (std::size_t j = 0; j < Skeleton17Frame::kJoints; ++j) {
            frame.set(j, frame.x(j) - hx, frame.y(j) - hy, frame.z(j) - hz);
        }
        const double nx = frame.x(kNeck), ny = frame.y(kNeck), nz = frame.z(kNeck);
        neck_dist.push_back(std::sqrt(nx * nx + ny * ny + nz * nz));
    }

    std::vector<double> sorted = neck_dist;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    const double median =
        (n % 2 == 1) ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
    if (!(median > 1e-6)) {
        throw InvalidDatasetError("normalize: degenerate skeleton, hip-to-neck scale " +
                                  std::to_string(median));
    }

    const float inv = static_cast<float>(1.0 / median);
    for (auto& frame : out.frames) {
        for (float& v : frame.joints) v *= inv;
    }
    return out;
}

std::vector<Recording> load_recordings_dir(const std::string& dir) {
    if (!fs::is_directory(dir)) throw IoError("not a directory: " + dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl") {
            files.push_back(entry.path().string());
        }
    }
    std::sort(files.begin(), files.end());
    std::vector<Recording> recs;
    recs.reserve(files.size());
    for (const auto& file : files) recs.push_back(read_recording_jsonl(file));
    return recs;
}

}  // namespace gaitscore
