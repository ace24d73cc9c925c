#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include <neuroglm/rng.hpp>
#include <neuroglm/tables.hpp>

using namespace neuroglm;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "neuroglm_tables_tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_text(const std::string& name, const std::string& body) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p, std::ios::trunc);
    out << body;
    return p;
}

} // namespace

TEST_CASE("events tsv parses, sorts, and validates") {
    const auto p = write_text("events.tsv",
                              "onset\tduration\tcondition\n"
                              "30.0\t15.0\tsilence\n"
                              "5.0\t20.0\tspeech\n");
    const io::EventTimeline tl = io::read_events_tsv(p.string(), 60.0);
    REQUIRE(tl.events.size() == 2);
    REQUIRE(tl.events[0].onset_seconds == 5.0);
    REQUIRE(tl.events[0].condition == io::Condition::speech);
    REQUIRE(tl.events[1].onset_seconds == 30.0);
    REQUIRE(tl.events[1].condition == io::Condition::silence);
    REQUIRE(tl.of(io::Condition::speech).size() == 1);
    REQUIRE(tl.of(io::Condition::silence).size() == 1);
}

TEST_CASE("events tsv rejects malformed input") {
    SECTION("missing file") {
        REQUIRE_THROWS_AS(
            io::read_events_tsv((temp_dir() / "gone.tsv").string(), 60.0),
            MissingInputError);
    }
    SECTION("empty file lacks a header") {
        const auto p = write_text("empty.tsv", "");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
    SECTION("missing column") {
        const auto p = write_text("cols.tsv",
                                  "onset\tduration\tcondition\n5.0\t20.0\n");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
    SECTION("non-numeric onset") {
        const auto p = write_text(
            "nan.tsv", "onset\tduration\tcondition\nabc\t20.0\tspeech\n");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
    SECTION("unknown condition") {
        const auto p = write_text(
            "cond.tsv", "onset\tduration\tcondition\n5.0\t20.0\tmusic\n");
        REQUIRE_THROWS_WITH(io::read_events_tsv(p.string(), 60.0),
                            Catch::Matchers::ContainsSubstring("music"));
    }
    SECTION("negative onset") {
        const auto p = write_text(
            "neg.tsv", "onset\tduration\tcondition\n-1.0\t5.0\tspeech\n");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
    SECTION("zero duration") {
        const auto p = write_text(
            "zerodur.tsv", "onset\tduration\tcondition\n5.0\t0.0\tspeech\n");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
    SECTION("overlapping events") {
        const auto p =
            write_text("overlap.tsv", "onset\tduration\tcondition\n"
                                      "5.0\t20.0\tspeech\n"
                                      "20.0\t10.0\tsilence\n");
        REQUIRE_THROWS_WITH(io::read_events_tsv(p.string(), 60.0),
                            Catch::Matchers::ContainsSubstring("overlap"));
    }
    SECTION("event past total duration") {
        const auto p = write_text(
            "late.tsv", "onset\tduration\tcondition\n50.0\t20.0\tspeech\n");
        REQUIRE_THROWS_AS(io::read_events_tsv(p.string(), 60.0),
                          ValidationError);
    }
}

TEST_CASE("events tsv write/read round trip") {
    io::EventTimeline tl;
    tl.total_duration_seconds = 100.0;
    tl.events = {{5.0, 20.0, io::Condition::speech},
                 {35.0, 15.0, io::Condition::silence},
                 {55.25, 20.5, io::Condition::speech}};
    const auto p = temp_dir() / "rt.tsv";
    io::write_events_tsv(tl, p.string());
    const io::EventTimeline back = io::read_events_tsv(p.string(), 100.0);
    REQUIRE(back.events.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        REQUIRE(back.events[i].onset_seconds ==
                Catch::Approx(tl.events[i].onset_seconds).margin(1e-6));
        REQUIRE(back.events[i].duration_seconds ==
                Catch::Approx(tl.events[i].duration_seconds).margin(1e-6));
        REQUIRE(back.events[i].condition == tl.events[i].condition);
    }
}

TEST_CASE("motion tsv round trips doubles exactly") {
    io::MotionRegressors m(5, 6);
    auto rng = rng::stream(3, "motion", 0);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = rng::gauss(rng) * 0.05;
    const auto p = temp_dir() / "motion.tsv";
    io::write_motion_tsv(m, p.string());
    const io::MotionRegressors back = io::read_motion_tsv(p.string(), 5);
    REQUIRE(back.rows() == 5);
    for (Eigen::Index r = 0; r < 5; ++r)
        for (Eigen::Index c = 0; c < 6; ++c)
            REQUIRE(back(r, c) == m(r, c)); // bitwise, %.17g is lossless
}

TEST_CASE("motion tsv rejects wrong shapes") {
    const auto p5 =
        write_text("m5.tsv", "0 0 0 0 0\n"); // five columns
    REQUIRE_THROWS_AS(io::read_motion_tsv(p5.string(), 1), ValidationError);
    const auto p7 = write_text("m7.tsv", "0 0 0 0 0 0 0\n");
    REQUIRE_THROWS_AS(io::read_motion_tsv(p7.string(), 1), ValidationError);
    const auto p_ok = write_text("m6.tsv", "0 0 0 0 0 0\n0 0 0 0 0 0\n");
    REQUIRE_THROWS_AS(io::read_motion_tsv(p_ok.string(), 3),
                      ValidationError); // row count != nt
    REQUIRE_NOTHROW(io::read_motion_tsv(p_ok.string(), 2));
    REQUIRE_THROWS_AS(
        io::read_motion_tsv((temp_dir() / "gone.tsv").string(), 2),
        MissingInputError);
}

TEST_CASE("label threshold resolution") {
    io::LabelPolicy fixed;
    REQUIRE(io::resolve_label_threshold({1, 2, 3}, fixed) == 20.0);
    io::LabelPolicy median{io::LabelPolicy::Mode::median, 0.0};
    REQUIRE(io::resolve_label_threshold({25, 10, 19}, median) == 19.0);
    REQUIRE(io::resolve_label_threshold({25, 10, 19, 21}, median) == 20.0);
    REQUIRE_THROWS_AS(io::resolve_label_threshold({}, median),
                      ValidationError);

    REQUIRE(io::label_for(21, 20.0) == io::CognitiveLabel::NORMAL);
    REQUIRE(io::label_for(20, 20.0) == io::CognitiveLabel::DECLINE);
    REQUIRE(io::label_for(19, 20.0) == io::CognitiveLabel::DECLINE);
}

TEST_CASE("cohort manifest round trip with label derivation") {
    std::vector<io::CohortRecord> recs(3);
    recs[0] = {"sub-001", 71.5, io::Gender::female, 12.0, 27,
               "sub-001_bold.nii", "sub-001_motion.tsv",
               io::CognitiveLabel::NORMAL};
    recs[1] = {"sub-002", 66.0, io::Gender::male, 16.0, 20,
               "sub-002_bold.nii", "sub-002_motion.tsv",
               io::CognitiveLabel::NORMAL};
    recs[2] = {"sub-003", 80.2, io::Gender::female, 8.0, 14,
               "sub-003_bold.nii", "sub-003_motion.tsv",
               io::CognitiveLabel::NORMAL};
    const auto p = temp_dir() / "cohort.json";
    io::write_cohort_json(recs, p.string());
    const auto back = io::read_cohort_manifest(p.string());
    REQUIRE(back.size() == 3);
    REQUIRE(back[0].subject_id == "sub-001");
    REQUIRE(back[0].age == 71.5);
    REQUIRE(back[0].gender == io::Gender::female);
    REQUIRE(back[1].moca == 20);
    // labels derived from the fixed threshold of 20, boundary inclusive
    REQUIRE(back[0].label == io::CognitiveLabel::NORMAL);
    REQUIRE(back[1].label == io::CognitiveLabel::DECLINE);
    REQUIRE(back[2].label == io::CognitiveLabel::DECLINE);
    // relative paths resolve against the manifest directory
    REQUIRE(back[0].bold_path ==
            (temp_dir() / "sub-001_bold.nii").string());

    io::LabelPolicy median{io::LabelPolicy::Mode::median, 0.0};
    const auto med = io::read_cohort_manifest(p.string(), median);
    // median of {27,20,14} = 20; NORMAL iff moca > 20
    REQUIRE(med[0].label == io::CognitiveLabel::NORMAL);
    REQUIRE(med[1].label == io::CognitiveLabel::DECLINE);
    REQUIRE(med[2].label == io::CognitiveLabel::DECLINE);
}

TEST_CASE("cohort manifest validation") {
    auto base = nlohmann::json::array();
    base.push_back({{"subject_id", "sub-001"},
                    {"age", 70.0},
                    {"gender", "male"},
                    {"education", 12.0},
                    {"moca", 25},
                    {"bold_path", "b.nii"},
                    {"motion_path", "m.tsv"}});

    auto write_doc = [&](const nlohmann::json& doc, const char* name) {
        const fs::path p = temp_dir() / name;
        std::ofstream(p, std::ios::trunc) << doc.dump();
        return p.string();
    };

    SECTION("not an array") {
        const auto p = write_doc(nlohmann::json::object(), "obj.json");
        REQUIRE_THROWS_AS(io::read_cohort_manifest(p), ValidationError);
    }
    SECTION("invalid json") {
        const auto p = write_text("broken.json", "{not json");
        REQUIRE_THROWS_AS(io::read_cohort_manifest(p.string()),
                          ValidationError);
    }
    SECTION("duplicate subject ids") {
        auto doc = base;
        doc.push_back(doc[0]);
        const auto p = write_doc(doc, "dup.json");
        REQUIRE_THROWS_WITH(io::read_cohort_manifest(p),
                            Catch::Matchers::ContainsSubstring("duplicate"));
    }
    SECTION("moca out of range") {
        auto doc = base;
        doc[0]["moca"] = 31;
        const auto p = write_doc(doc, "moca.json");
        REQUIRE_THROWS_AS(io::read_cohort_manifest(p), ValidationError);
    }
    SECTION("bad gender") {
        auto doc = base;
        doc[0]["gender"] = "unknown";
        const auto p = write_doc(doc, "gender.json");
        REQUIRE_THROWS_AS(io::read_cohort_manifest(p), ValidationError);
    }
    SECTION("missing field") {
        auto doc = base;
        doc[0].erase("age");
        const auto p = write_doc(doc, "noage.json");
        REQUIRE_THROWS_AS(io::read_cohort_manifest(p), ValidationError);
    }
    SECTION("missing manifest") {
        REQUIRE_THROWS_AS(
            io::read_cohort_manifest((temp_dir() / "gone.json").string()),
            MissingInputError);
    }
}
