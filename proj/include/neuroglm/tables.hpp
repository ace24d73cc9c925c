#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "neuroglm/errors.hpp"

namespace neuroglm::io {

// ---------------------------------------------------------------- events ---

enum class Condition { speech, silence };

inline std::string condition_name(Condition c) {
    return c == Condition::speech ? "speech" : "silence";
}

struct Event {
    double onset_seconds = 0.0;
    double duration_seconds = 0.0;
    Condition condition = Condition::speech;
};

/// Speech/silence intervals over the stimulus. Intervals are half-open
/// [onset, onset+duration) and must not overlap each other.
struct EventTimeline {
    std::vector<Event> events; // sorted by onset
    double total_duration_seconds = 0.0;

    void validate() const {
        for (std::size_t i = 0; i < events.size(); ++i) {
            const Event& e = events[i];
            if (e.onset_seconds < 0.0)
                throw ValidationError("event " + std::to_string(i) +
                                      ": negative onset");
            if (!(e.duration_seconds > 0.0))
                throw ValidationError("event " + std::to_string(i) +
                                      ": duration must be positive");
            if (e.onset_seconds + e.duration_seconds >
                total_duration_seconds + 1e-9)
                throw ValidationError("event " + std::to_string(i) +
                                      ": extends past total duration");
            if (i > 0) {
                const Event& prev = events[i - 1];
                if (prev.onset_seconds + prev.duration_seconds >
                    e.onset_seconds + 1e-12)
                    throw ValidationError(
                        "events " + std::to_string(i - 1) + " and " +
                        std::to_string(i) + " overlap");
            }
        }
    }

    std::vector<Event> of(Condition c) const {
        std::vector<Event> out;
        for (const Event& e : events)
            if (e.condition == c)
                out.push_back(e);
        return out;
    }
};

/// Parses onset\tduration\tcondition rows (header required, rows in any
/// order) and returns a validated, onset-sorted timeline.
inline EventTimeline read_events_tsv(const std::string& path,
                                     double total_duration_seconds) {
    if (!std::filesystem::exists(path))
        throw MissingInputError(path);
    std::ifstream in(path);
    if (!in)
        throw MissingInputError(path);
    std::string line;
    if (!std::getline(in, line))
        throw ValidationError(path + ": missing header row");
    EventTimeline tl;
    tl.total_duration_seconds = total_duration_seconds;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::string onset_s, dur_s, cond_s;
        if (!std::getline(row, onset_s, '\t') ||
            !std::getline(row, dur_s, '\t') || !std::getline(row, cond_s))
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": expected onset\\tduration\\tcondition");
        while (!cond_s.empty() &&
               (cond_s.back() == '\r' || cond_s.back() == ' '))
            cond_s.pop_back();
        Event e;
        try {
            e.onset_seconds = std::stod(onset_s);
            e.duration_seconds = std::stod(dur_s);
        } catch (const std::exception&) {
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": non-numeric onset or duration");
        }
        if (cond_s == "speech")
            e.condition = Condition::speech;
        else if (cond_s == "silence")
            e.condition = Condition::silence;
        else
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": unknown condition '" + cond_s + "'");
        if (e.onset_seconds < 0.0)
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": negative onset");
        tl.events.push_back(e);
    }
    std::stable_sort(tl.events.begin(), tl.events.end(),
                     [](const Event& a, const Event& b) {
                         return a.onset_seconds < b.onset_seconds;
                     });
    tl.validate();
    return tl;
}

inline void write_events_tsv(const EventTimeline& tl,
                             const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open for writing: " + path);
    out << "onset\tduration\tcondition\n";
    char buf[128];
    for (const Event& e : tl.events) {
        std::snprintf(buf, sizeof(buf), "%.6f\t%.6f\t%s\n", e.onset_seconds,
                      e.duration_seconds,
                      condition_name(e.condition).c_str());
        out << buf;
    }
}

// ---------------------------------------------------------------- motion ---

using MotionRegressors = Eigen::MatrixXd; // nt x 6

/// Six numeric columns (3 translations, 3 rotations by convention), no
/// header, exactly nt rows. Units are opaque; the columns only serve as
/// nuisance regressors.
inline MotionRegressors read_motion_tsv(const std::string& path,
                                        std::size_t nt) {
    if (!std::filesystem::exists(path))
        throw MissingInputError(path);
    std::ifstream in(path);
    if (!in)
        throw MissingInputError(path);
    std::vector<std::array<double, 6>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty())
            continue;
        std::istringstream row(line);
        std::array<double, 6> vals{};
        for (int c = 0; c < 6; ++c) {
            if (!(row >> vals[c]))
                throw ValidationError(path + " line " +
                                      std::to_string(lineno) +
                                      ": expected 6 numeric columns");
        }
        double extra;
        if (row >> extra)
            throw ValidationError(path + " line " + std::to_string(lineno) +
                                  ": more than 6 columns");
        rows.push_back(vals);
    }
    if (rows.size() != nt)
        throw ValidationError(path + ": " + std::to_string(rows.size()) +
                              " rows, expected nt=" + std::to_string(nt));
    MotionRegressors m(static_cast<Eigen::Index>(nt), 6);
    for (std::size_t r = 0; r < nt; ++r)
        for (int c = 0; c < 6; ++c)
            m(static_cast<Eigen::Index>(r), c) = rows[r][c];
    return m;
}

inline void write_motion_tsv(const MotionRegressors& m,
                             const std::string& path) {
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open for writing: " + path);
    char buf[64];
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        for (Eigen::Index c = 0; c < 6; ++c) {
            std::snprintf(buf, sizeof(buf), "%.17g", m(r, c));
            out << buf << (c == 5 ? "\n" : "\t");
        }
    }
}

// ---------------------------------------------------------------- cohort ---

enum class Gender { male, female };
enum class CognitiveLabel { NORMAL, DECLINE };

inline std::string label_name(CognitiveLabel l) {
    return l == CognitiveLabel::NORMAL ? "NORMAL" : "DECLINE";
}

struct CohortRecord {
    std::string subject_id;
    double age = 0.0;
    Gender gender = Gender::male;
    double education = 0.0;
    int moca = 0;
    std::string bold_path;
    std::string motion_path;
    CognitiveLabel label = CognitiveLabel::NORMAL; // derived, not on disk
};

/// MoCA labelling rule: NORMAL iff moca > threshold. The fixed default of 20
/// matches a cohort whose median lands there; median mode recomputes the
/// threshold from the manifest itself.
struct LabelPolicy {
    enum class Mode { fixed, median } mode = Mode::fixed;
    double threshold = 20.0;
};

inline double resolve_label_threshold(const std::vector<int>& mocas,
                                      const LabelPolicy& policy) {
    if (policy.mode == LabelPolicy::Mode::fixed)
        return policy.threshold;
    if (mocas.empty())
        throw ValidationError("median label mode needs a nonempty cohort");
    std::vector<int> sorted = mocas;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t n = sorted.size();
    if (n % 2 == 1)
        return static_cast<double>(sorted[n / 2]);
    return 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
}

inline CognitiveLabel label_for(int moca, double threshold) {
    return moca > threshold ? CognitiveLabel::NORMAL
                            : CognitiveLabel::DECLINE;
}

/// Reads cohort.json (array of subject objects, file order preserved),
/// derives labels, and resolves data paths relative to the manifest.
inline std::vector<CohortRecord>
read_cohort_manifest(const std::string& path,
                     const LabelPolicy& policy = {}) {
    if (!std::filesystem::exists(path))
        throw MissingInputError(path);
    std::ifstream in(path);
    nlohmann::json doc;
    try {
        in >> doc;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": invalid JSON: " + e.what());
    }
    if (!doc.is_array())
        throw ValidationError(path + ": manifest must be a JSON array");
    const std::filesystem::path base =
        std::filesystem::path(path).parent_path();
    std::vector<CohortRecord> records;
    std::vector<std::string> seen_ids;
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& j = doc[i];
        const std::string where =
            path + " subject " + std::to_string(i);
        CohortRecord rec;
        try {
            rec.subject_id = j.at("subject_id").get<std::string>();
            rec.age = j.at("age").get<double>();
            const std::string g = j.at("gender").get<std::string>();
            if (g == "male")
                rec.gender = Gender::male;
            else if (g == "female")
                rec.gender = Gender::female;
            else
                throw ValidationError(where + ": gender must be male|female");
            rec.education = j.at("education").get<double>();
            rec.moca = j.at("moca").get<int>();
            rec.bold_path = j.at("bold_path").get<std::string>();
            rec.motion_path = j.at("motion_path").get<std::string>();
        } catch (const nlohmann::json::exception& e) {
            throw ValidationError(where + ": " + e.what());
        }
        if (rec.moca < 0 || rec.moca > 30)
            throw ValidationError(where + ": moca " +
                                  std::to_string(rec.moca) +
                                  " outside [0,30]");
        if (!(rec.age > 0.0))
            throw ValidationError(where + ": age must be positive");
        if (rec.education < 0.0)
            throw ValidationError(where + ": education must be >= 0");
        if (rec.bold_path.empty() || rec.motion_path.empty())
            throw ValidationError(where + ": missing file path");
        for (const std::string& id : seen_ids)
            if (id == rec.subject_id)
                throw ValidationError(where + ": duplicate subject_id '" +
                                      rec.subject_id + "'");
        seen_ids.push_back(rec.subject_id);
        auto resolve = [&base](const std::string& p) {
            std::filesystem::path fp(p);
            return fp.is_absolute() ? fp.string() : (base / fp).string();
        };
        rec.bold_path = resolve(rec.bold_path);
        rec.motion_path = resolve(rec.motion_path);
        records.push_back(rec);
    }
    std::vector<int> mocas;
    for (const auto& r : records)
        mocas.push_back(r.moca);
    const double thr = resolve_label_threshold(mocas, policy);
    for (auto& r : records)
        r.label = label_for(r.moca, thr);
    return records;
}

inline void write_cohort_json(const std::vector<CohortRecord>& records,
                              const std::string& path) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : records) {
        arr.push_back({{"subject_id", r.subject_id},
                       {"age", r.age},
                       {"gender", r.gender == Gender::male ? "male"
                                                           : "female"},
                       {"education", r.education},
                       {"moca", r.moca},
                       {"bold_path", r.bold_path},
                       {"motion_path", r.motion_path}});
    }
    std::ofstream out(path, std::ios::trunc);
    if (!out)
        throw ValidationError("cannot open for writing: " + path);
    out << arr.dump(2) << "\n";
}

} // namespace neuroglm::io
