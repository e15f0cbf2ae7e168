#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gaitscore/data_io.hpp"
#include "gaitscore/errors.hpp"
#include "gaitscore/rng.hpp"

using namespace gaitscore;
namespace fs = std::filesystem;

namespace {

std::string temp_file(const char* name, const std::string& content) {
    const std::string path = (fs::temp_directory_path() / name).string();
    std::ofstream f(path, std::ios::trunc);
    f << content;
    return path;
}

Recording make_recording(std::size_t frames, Rng& rng, bool labels = true) {
    Recording rec;
    rec.subject_id = "test_subject";
    rec.fps = 30.0;
    rec.frames.resize(frames);
    for (auto& frame : rec.frames) {
        for (float& v : frame.joints) v = static_cast<float>(uniform_range(rng, -1.0, 2.0));
    }
    if (labels) rec.step_labels = {{true, false, true, true, false, true, false, true}};
    return rec;
}

std::string jsonl_text(std::size_t frames, const char* labels = nullptr) {
    std::ostringstream out;
    out << "{\"subject_id\":\"kid_1\",\"fps\":30";
    if (labels) out << ",\"step_labels\":" << labels;
    out << "}\n";
    for (std::size_t i = 0; i < frames; ++i) {
        out << "{\"t\":" << static_cast<double>(i) / 30.0 << ",\"joints\":[";
        for (std::size_t k = 0; k < 51; ++k) {
            out << (0.01 * static_cast<double>(k + i % 7));
            if (k + 1 < 51) out << ',';
        }
        out << "]}\n";
    }
    return out.str();
}

// 25-joint NTU-style text: frame count, per frame body count, per body a
// joint count and joint lines (x y z plus trailing fields).
std::string ntu_text(std::size_t frames, std::size_t bodies = 1, std::size_t joints = 25) {
    std::ostringstream out;
    out << frames << "\n";
    for (std::size_t f = 0; f < frames; ++f) {
        out << bodies << "\n";
        for (std::size_t b = 0; b < bodies; ++b) {
            out << joints << "\n";
            for (std::size_t j = 0; j < joints; ++j) {
                out << (0.1 * static_cast<double>(j) + static_cast<double>(b) * 10.0) << " "
                    << (0.2 * static_cast<double>(j)) << " "
                    << (0.05 * static_cast<double>(f)) << " 0 0 0 0 2\n";
            }
        }
    }
    return out.str();
}

}  // namespace

TEST_CASE("well-formed jsonl round trips through read") {
    const std::string path = temp_file("gs_ok.jsonl", jsonl_text(144, "[true,true,false,true,false,true,true,false]"));
    Recording rec = read_recording_jsonl(path);
    CHECK(rec.subject_id == "kid_1");
    CHECK(rec.fps == 30.0);
    CHECK(rec.frames.size() == 144);
    REQUIRE(rec.step_labels.has_value());
    CHECK((*rec.step_labels)[0] == true);
    CHECK((*rec.step_labels)[2] == false);
    fs::remove(path);
}

TEST_CASE("jsonl write/read round trip preserves the recording exactly") {
    Rng rng = make_rng(51);
    for (int inst = 0; inst < 5; ++inst) {
        Recording rec = make_recording(40 + 10 * static_cast<std::size_t>(inst), rng, inst % 2 == 0);
        const std::string path = (fs::temp_directory_path() / "gs_roundtrip.jsonl").string();
        write_recording_jsonl(rec, path);
        Recording back = read_recording_jsonl(path);
        CHECK(back == rec);

        // write(read(f)) is stable byte-for-byte too
        const std::string path2 = (fs::temp_directory_path() / "gs_roundtrip2.jsonl").string();
        write_recording_jsonl(back, path2);
        std::ifstream a(path), b(path2);
        std::string sa((std::istreambuf_iterator<char>(a)), std::istreambuf_iterator<char>());
        std::string sb((std::istreambuf_iterator<char>(b)), std::istreambuf_iterator<char>());
        CHECK(sa == sb);
        fs::remove(path);
        fs::remove(path2);
    }
}

TEST_CASE("jsonl rejects malformed input with line numbers") {
    SUBCASE("frame with 50 joints names its line") {
        std::string text = jsonl_text(40);
        // build a 50-value frame appended as the last line
        std::string bad = "{\"t\":99,\"joints\":[";
        for (int k = 0; k < 50; ++k) bad += k ? ",1" : "1";
        bad += "]}\n";
        const std::string path = temp_file("gs_bad50.jsonl", text + bad);
        CHECK_THROWS_WITH_AS(read_recording_jsonl(path), doctest::Contains(":42:"),
                             InvalidDatasetError);
        CHECK_THROWS_WITH_AS(read_recording_jsonl(path), doctest::Contains("50"),
                             InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("7 step labels rejected") {
        const std::string path =
            temp_file("gs_bad7.jsonl", jsonl_text(40, "[true,true,true,true,true,true,true]"));
        CHECK_THROWS_WITH_AS(read_recording_jsonl(path), doctest::Contains("8"),
                             InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("short recording rejected") {
        const std::string path = temp_file("gs_short.jsonl", jsonl_text(31));
        CHECK_THROWS_WITH_AS(read_recording_jsonl(path), doctest::Contains("31"),
                             InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("non-finite coordinate rejected") {
        std::string text = jsonl_text(40);
        std::string bad = "{\"t\":99,\"joints\":[";
        for (int k = 0; k < 51; ++k) bad += k ? ",1" : "1e999";
        bad += "]}\n";
        const std::string path = temp_file("gs_inf.jsonl", text + bad);
        CHECK_THROWS_AS(read_recording_jsonl(path), InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("garbage JSON line rejected with its number") {
        const std::string path = temp_file("gs_garbage.jsonl", jsonl_text(40) + "not json at all\n");
        CHECK_THROWS_WITH_AS(read_recording_jsonl(path), doctest::Contains(":42:"),
                             InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("missing file is an IO error") {
        CHECK_THROWS_AS(read_recording_jsonl("/nonexistent/gaitscore.jsonl"), IoError);
    }
}

TEST_CASE("jsonl frames are sorted by t") {
    std::ostringstream out;
    out << "{\"subject_id\":\"kid_2\",\"fps\":30}\n";
    // t descending on purpose
    for (int i = 39; i >= 0; --i) {
        out << "{\"t\":" << i << ",\"joints\":[";
        for (int k = 0; k < 51; ++k) out << (k ? "," : "") << i;
        out << "]}\n";
    }
    const std::string path = temp_file("gs_sorted.jsonl", out.str());
    Recording rec = read_recording_jsonl(path);
    REQUIRE(rec.frames.size() == 40);
    CHECK(rec.frames[0].joints[0] == 0.0f);
    CHECK(rec.frames[39].joints[0] == 39.0f);
    fs::remove(path);
}

TEST_CASE("ntu adapter maps 25 joints onto the canonical 17") {
    const std::string path = temp_file("gs_ntu.skeleton", ntu_text(40));
    Recording rec = read_ntu_skeleton(path, ntu_default_joint_map());
    CHECK(rec.frames.size() == 40);
    // head slot comes from source joint 3: x = 0.1 * 3
    CHECK(rec.frames[0].x(kHead) == doctest::Approx(0.3));
    // hip_center from source joint 0
    CHECK(rec.frames[0].x(kHipCenter) == doctest::Approx(0.0));
    // left toe from source joint 15
    CHECK(rec.frames[0].x(kLToe) == doctest::Approx(1.5));
    fs::remove(path);
}

TEST_CASE("ntu adapter policies") {
    SUBCASE("second body ignored") {
        const std::string path = temp_file("gs_ntu2.skeleton", ntu_text(40, 2));
        Recording rec = read_ntu_skeleton(path, ntu_default_joint_map());
        CHECK(rec.frames.size() == 40);
        CHECK(rec.frames[0].x(kHead) == doctest::Approx(0.3));  // body 0, not 10.3
        fs::remove(path);
    }

    SUBCASE("zero-body frames dropped with the rest kept") {
        std::ostringstream out;
        out << 41 << "\n" << 0 << "\n";  // first frame empty
        std::string rest = ntu_text(40);
        out << rest.substr(rest.find('\n') + 1);
        const std::string path = temp_file("gs_ntu0.skeleton", out.str());
        Recording rec = read_ntu_skeleton(path, ntu_default_joint_map());
        CHECK(rec.frames.size() == 40);
        fs::remove(path);
    }

    SUBCASE("map referencing joint 30 of a 25-joint body rejected") {
        JointMap map = ntu_default_joint_map();
        map.source_joint_count = 31;
        map.source_index[0] = 30;
        const std::string path = temp_file("gs_ntu30.skeleton", ntu_text(40));
        CHECK_THROWS_WITH_AS(read_ntu_skeleton(path, map), doctest::Contains("30"),
                             InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("truncated file rejected") {
        std::string text = ntu_text(40);
        const std::string path = temp_file("gs_ntu_trunc.skeleton", text.substr(0, text.size() / 2));
        CHECK_THROWS_AS(read_ntu_skeleton(path, ntu_default_joint_map()), InvalidDatasetError);
        fs::remove(path);
    }

    SUBCASE("non-numeric joint line rejected") {
        std::string text = ntu_text(33);
        text.replace(text.find("0.1"), 3, "abc");
        const std::string path = temp_file("gs_ntu_alpha.skeleton", text);
        CHECK_THROWS_AS(read_ntu_skeleton(path, ntu_default_joint_map()), InvalidDatasetError);
        fs::remove(path);
    }
}

TEST_CASE("joint map validation") {
    JointMap map = ntu_default_joint_map();
    CHECK_NOTHROW(map.validate());

    JointMap dup = map;
    dup.source_index[1] = dup.source_index[0];  // duplicate source
    CHECK_THROWS_AS(dup.validate(), ConfigError);

    JointMap oob = map;
    oob.source_index[5] = 99;
    CHECK_THROWS_AS(oob.validate(), ConfigError);
}

TEST_CASE("normalization invariances") {
    Rng rng = make_rng(52);
    Recording rec = make_recording(48, rng);
    Recording base = normalize_recording(rec);

    SUBCASE("translation invariance") {
        Recording moved = rec;
        for (auto& frame : moved.frames) {
            for (std::size_t j = 0; j < 17; ++j) {
                frame.set(j, frame.x(j) + 5.0f, frame.y(j) - 2.0f, frame.z(j) + 3.0f);
            }
        }
        Recording norm = normalize_recording(moved);
        for (std::size_t f = 0; f < norm.frames.size(); ++f) {
            for (std::size_t k = 0; k < 51; ++k) {
                CHECK(norm.frames[f].joints[k] ==
                      doctest::Approx(base.frames[f].joints[k]).epsilon(1e-4));
            }
        }
    }

    SUBCASE("scale invariance") {
        Recording scaled = rec;
        for (auto& frame : scaled.frames) {
            for (float& v : frame.joints) v *= 2.0f;
        }
        Recording norm = normalize_recording(scaled);
        for (std::size_t f = 0; f < norm.frames.size(); ++f) {
            for (std::size_t k = 0; k < 51; ++k) {
                CHECK(norm.frames[f].joints[k] ==
                      doctest::Approx(base.frames[f].joints[k]).epsilon(1e-4));
            }
        }
    }

    SUBCASE("hip center lands at the origin every frame") {
        for (const auto& frame : base.frames) {
            CHECK(frame.x(kHipCenter) == 0.0f);
            CHECK(frame.y(kHipCenter) == 0.0f);
            CHECK(frame.z(kHipCenter) == 0.0f);
        }
    }

    SUBCASE("idempotence up to rounding") {
        Recording twice = normalize_recording(base);
        for (std::size_t f = 0; f < twice.frames.size(); ++f) {
            for (std::size_t k = 0; k < 51; ++k) {
                CHECK(std::abs(twice.frames[f].joints[k] - base.frames[f].joints[k]) < 1e-6f);
            }
        }
    }

    SUBCASE("degenerate skeleton rejected") {
        Recording flat = rec;
        for (auto& frame : flat.frames) {
            for (float& v : frame.joints) v = 1.0f;  // neck == hip everywhere
        }
        CHECK_THROWS_WITH_AS(normalize_recording(flat), doctest::Contains("degenerate"),
                             InvalidDatasetError);
    }
}

TEST_CASE("load_recordings_dir reads jsonl files sorted by filename") {
    const fs::path dir = fs::temp_directory_path() / "gs_dir_test";
    fs::create_directories(dir);
    Rng rng = make_rng(53);
    Recording a = make_recording(40, rng);
    a.subject_id = "alpha";
    Recording b = make_recording(40, rng);
    b.subject_id = "beta";
    write_recording_jsonl(b, (dir / "02_beta.jsonl").string());
    write_recording_jsonl(a, (dir / "01_alpha.jsonl").string());

    std::vector<Recording> recs = load_recordings_dir(dir.string());
    REQUIRE(recs.size() == 2);
    CHECK(recs[0].subject_id == "alpha");
    CHECK(recs[1].subject_id == "beta");

    CHECK_THROWS_AS(load_recordings_dir((dir / "missing").string()), IoError);
    fs::remove_all(dir);
}
