#pragma once

#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "neuroglm/errors.hpp"
#include "neuroglm/eval.hpp"
#include "neuroglm/group.hpp"
#include "neuroglm/volume.hpp"

// Result serialization: report/pairwise CSVs, AUC and selection JSON files,
// the SVG summary chart, and input-hash manifests. All writers emit fixed
// formats so identical runs produce identical bytes.

namespace neuroglm::report {

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

inline std::ofstream open_out(const std::string& path) {
    std::ofstream out(path, std::ios::trunc | std::ios::binary);
    if (!out)
        throw ValidationError("cannot open for writing: " + path);
    return out;
}

} // namespace detail

// --------------------------------------------------------------------- CSV ---

inline void write_report_csv(const eval::ExperimentReport& rep,
                             const std::string& path) {
    auto out = detail::open_out(path);
    out << "combo,classifier,mean_auc,sd_auc,n_effective\n";
    for (const auto& row : rep.rows)
        out << row.combo << ',' << row.classifier << ','
            << detail::fmt("%.6f", row.mean_auc) << ','
            << detail::fmt("%.6f", row.sd_auc) << ',' << row.n_effective
            << '\n';
}

inline void write_pairwise_csv(const eval::ExperimentReport& rep,
                               const std::string& path) {
    auto out = detail::open_out(path);
    out << "combo_a,combo_b,classifier,W,p\n";
    for (const auto& t : rep.pairwise)
        out << t.combo_a << ',' << t.combo_b << ',' << t.classifier << ','
            << detail::fmt("%.1f", t.w) << ','
            << (t.degenerate ? std::string("1.000000")
                             : detail::fmt("%.6g", t.p))
            << '\n';
}

inline void write_region_csv(const group::RegionDistribution& dist,
                             const std::string& path) {
    auto out = detail::open_out(path);
    out << "region_code,fraction\n";
    for (const auto& [code, frac] : dist.fraction_by_region)
        out << code << ',' << detail::fmt("%.6f", frac) << '\n';
    out << "unlabeled," << detail::fmt("%.6f", dist.unlabeled_fraction)
        << '\n';
}

// -------------------------------------------------------------------- JSON ---

inline void write_auc_json(const eval::ExperimentResult& res,
                           const std::string& path) {
    nlohmann::json j{
        {"combo", res.dist.combo},
        {"classifier", res.dist.classifier},
        {"seed", res.dist.seed},
        {"n_iter", res.dist.n_iter},
        {"values", res.dist.values},
        {"iterations", res.dist.iterations},
        {"fingerprints", res.dist.fingerprints},
        {"mean", res.dist.mean()},
        {"sd", res.dist.sd()},
    };
    nlohmann::json skipped = nlohmann::json::array();
    for (const auto& [it, cause] : res.skipped)
        skipped.push_back({{"iteration", it}, {"cause", cause}});
    j["skipped"] = skipped;
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline eval::AucDistribution read_auc_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInputError(path);
    nlohmann::json j;
    try {
        in >> j;
        eval::AucDistribution d;
        d.combo = j.at("combo").get<std::string>();
        d.classifier = j.at("classifier").get<std::string>();
        d.seed = j.at("seed").get<std::uint64_t>();
        d.n_iter = j.at("n_iter").get<std::size_t>();
        d.values = j.at("values").get<std::vector<double>>();
        d.iterations = j.at("iterations").get<std::vector<std::size_t>>();
        d.fingerprints =
            j.at("fingerprints").get<std::vector<std::string>>();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

struct SelectionsFile {
    std::string combo, classifier;
    std::uint64_t seed = 0;
    std::size_t n_iter = 0;
    Dims3 dims;
    std::vector<eval::SelectionRecord> records;
};

inline void write_selections_json(const eval::ExperimentResult& res,
                                  Dims3 dims, const std::string& path) {
    nlohmann::json iters = nlohmann::json::array();
    for (const auto& sel : res.selections)
        iters.push_back({
            {"iteration", sel.iteration},
            {"fingerprint", res.dist.fingerprints[sel.iteration]},
            {"speech", sel.speech_voxels},
            {"silence", sel.silence_voxels},
        });
    nlohmann::json j{
        {"combo", res.dist.combo},
        {"classifier", res.dist.classifier},
        {"seed", res.dist.seed},
        {"n_iter", res.dist.n_iter},
        {"dims", {dims.nx, dims.ny, dims.nz}},
        {"iterations", iters},
    };
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

inline SelectionsFile read_selections_json(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInputError(path);
    nlohmann::json j;
    try {
        in >> j;
        SelectionsFile f;
        f.combo = j.at("combo").get<std::string>();
        f.classifier = j.at("classifier").get<std::string>();
        f.seed = j.at("seed").get<std::uint64_t>();
        f.n_iter = j.at("n_iter").get<std::size_t>();
        const auto d = j.at("dims").get<std::vector<std::size_t>>();
        if (d.size() != 3)
            throw ValidationError(path + ": dims must have 3 entries");
        f.dims = {d[0], d[1], d[2]};
        for (const auto& it : j.at("iterations")) {
            eval::SelectionRecord rec;
            rec.iteration = it.at("iteration").get<std::size_t>();
            rec.speech_voxels =
                it.at("speech").get<std::vector<std::size_t>>();
            rec.silence_voxels =
                it.at("silence").get<std::vector<std::size_t>>();
            f.records.push_back(std::move(rec));
        }
        return f;
    } catch (const nlohmann::json::exception& e) {
        throw ValidationError(path + ": " + e.what());
    }
}

// --------------------------------------------------------------------- SVG ---

/// Bar chart of mean AUC per combo/classifier with sd whiskers. Plain
/// hand-assembled SVG, stable byte-for-byte across runs.
inline void write_auc_svg(const eval::ExperimentReport& rep,
                          const std::string& path) {
    const double width = 760.0, height = 420.0;
    const double left = 60.0, right = 140.0, top = 40.0, bottom = 100.0;
    const double plot_w = width - left - right;
    const double plot_h = height - top - bottom;
    const std::size_t n = rep.rows.size();
    auto xpos = [&](std::size_t i) {
        return left + plot_w * (static_cast<double>(i) + 0.5) /
                          static_cast<double>(n == 0 ? 1 : n);
    };
    auto ypos = [&](double auc) { return top + plot_h * (1.0 - auc); };
    auto f = [](double v) { return detail::fmt("%.2f", v); };

    auto out = detail::open_out(path);
    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\" font-family=\"sans-serif\">\n";
    out << "<text x=\"" << f(left) << "\" y=\"22\" font-size=\"16\">"
        << "Mean AUC by feature combination</text>\n";
    for (int tick = 0; tick <= 10; ++tick) {
        const double v = static_cast<double>(tick) / 10.0;
        const double y = ypos(v);
        out << "<line x1=\"" << f(left) << "\" y1=\"" << f(y) << "\" x2=\""
            << f(left + plot_w) << "\" y2=\"" << f(y)
            << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << f(left - 8.0) << "\" y=\"" << f(y + 4.0)
            << "\" font-size=\"11\" text-anchor=\"end\">"
            << detail::fmt("%.1f", v) << "</text>\n";
    }
    const double bar_w = n > 0 ? std::min(40.0, plot_w / (2.0 * n)) : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& row = rep.rows[i];
        const double x = xpos(i);
        const double y = ypos(row.mean_auc);
        const char* fill =
            row.classifier == "svc" ? "#4878a8" : "#a85448";
        out << "<rect x=\"" << f(x - bar_w / 2.0) << "\" y=\"" << f(y)
            << "\" width=\"" << f(bar_w) << "\" height=\""
            << f(ypos(0.0) - y) << "\" fill=\"" << fill << "\"/>\n";
        const double lo = std::max(0.0, row.mean_auc - row.sd_auc);
        const double hi = std::min(1.0, row.mean_auc + row.sd_auc);
        out << "<line x1=\"" << f(x) << "\" y1=\"" << f(ypos(lo))
            << "\" x2=\"" << f(x) << "\" y2=\"" << f(ypos(hi))
            << "\" stroke=\"#222222\" stroke-width=\"1.5\"/>\n";
        out << "<line x1=\"" << f(x - 5.0) << "\" y1=\"" << f(ypos(lo))
            << "\" x2=\"" << f(x + 5.0) << "\" y2=\"" << f(ypos(lo))
            << "\" stroke=\"#222222\"/>\n";
        out << "<line x1=\"" << f(x - 5.0) << "\" y1=\"" << f(ypos(hi))
            << "\" x2=\"" << f(x + 5.0) << "\" y2=\"" << f(ypos(hi))
            << "\" stroke=\"#222222\"/>\n";
        out << "<text x=\"" << f(x) << "\" y=\"" << f(ypos(0.0) + 12.0)
            << "\" font-size=\"10\" text-anchor=\"end\" transform=\"rotate(-45 "
            << f(x) << ' ' << f(ypos(0.0) + 12.0) << ")\">" << row.combo
            << "</text>\n";
    }
    out << "<line x1=\"" << f(left) << "\" y1=\"" << f(top) << "\" x2=\""
        << f(left) << "\" y2=\"" << f(ypos(0.0))
        << "\" stroke=\"#000000\"/>\n";
    out << "<line x1=\"" << f(left) << "\" y1=\"" << f(ypos(0.0))
        << "\" x2=\"" << f(left + plot_w) << "\" y2=\"" << f(ypos(0.0))
        << "\" stroke=\"#000000\"/>\n";
    out << "<rect x=\"" << f(left + plot_w + 16.0) << "\" y=\"" << f(top)
        << "\" width=\"14\" height=\"14\" fill=\"#4878a8\"/>\n";
    out << "<text x=\"" << f(left + plot_w + 36.0) << "\" y=\""
        << f(top + 12.0) << "\" font-size=\"12\">svc</text>\n";
    out << "<rect x=\"" << f(left + plot_w + 16.0) << "\" y=\""
        << f(top + 22.0) << "\" width=\"14\" height=\"14\" fill=\"#a85448\"/>\n";
    out << "<text x=\"" << f(left + plot_w + 36.0) << "\" y=\""
        << f(top + 34.0) << "\" font-size=\"12\">gnb</text>\n";
    out << "</svg>\n";
}

// ---------------------------------------------------------------- manifest ---

inline std::uint64_t fnv1a64_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInputError(path);
    std::uint64_t h = 1469598103934665603ull;
    char buf[8192];
    while (in.read(buf, sizeof buf) || in.gcount() > 0) {
        const std::streamsize got = in.gcount();
        for (std::streamsize i = 0; i < got; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
        if (got < static_cast<std::streamsize>(sizeof buf))
            break;
    }
    return h;
}

/// manifest.json: one entry per input file with its size and FNV-1a hash,
/// so any run can be checked against the exact inputs that produced it.
inline void write_manifest(const std::vector<std::string>& input_paths,
                           const std::string& path) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& p : input_paths) {
        std::ifstream in(p, std::ios::binary | std::ios::ate);
        if (!in)
            throw MissingInputError(p);
        const auto bytes = static_cast<std::uint64_t>(in.tellg());
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(p)));
        entries.push_back({{"path", p},
                           {"bytes", bytes},
                           {"fnv1a64", std::string(hex)}});
    }
    nlohmann::json j{{"inputs", entries}};
    auto out = detail::open_out(path);
    out << j.dump(2) << '\n';
}

} // namespace neuroglm::report
