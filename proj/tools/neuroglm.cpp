// Command-line pipeline driver: simulate -> tmap -> mask -> classify ->
// localize -> report. Every stage writes resolved_config.json plus a content
// hash manifest of its inputs so runs can be audited and reproduced.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include <neuroglm/neuroglm.hpp>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace neuroglm;

namespace {

// ------------------------------------------------------------------ config ---

struct DesignSettings {
    double highpass_cutoff_s = 128.0;
    std::size_t microtime_bins = 16;
    double hrf_duration_s = 32.0;
};

struct ClassifySettings {
    std::size_t n_iter = 500;
    double test_fraction = 0.05;
    std::uint64_t seed = 0;
    std::vector<std::string> combos = {
        "demographics", "speech_tmap", "demographics+speech_tmap",
        "two_tmaps", "all"};
    std::vector<std::string> classifiers = {"svc", "gnb"};
    double svc_c = 1.0;
    std::string svc_kernel = "linear";
    double pearson_alpha = 0.01;
    double l1_c = 1.0;
    double l1_threshold = 1e-5;
    bool global_mask = false;
};

struct RunConfig {
    synth::PhantomConfig phantom;
    group::GroupMaskConfig mask;
    ClassifySettings classify;
    DesignSettings design;
    io::LabelPolicy labels;
};

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key))
        out = j.at(key).get<T>();
}

RunConfig load_config(const std::string& path) {
    RunConfig cfg;
    if (path.empty())
        return cfg;
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw MissingInputError(path);
    json j;
    try {
        in >> j;
        if (j.contains("phantom")) {
            const json& p = j["phantom"];
            auto& ph = cfg.phantom;
            maybe(p, "n_subjects", ph.n_subjects);
            if (p.contains("dims")) {
                const auto d = p.at("dims").get<std::vector<std::size_t>>();
                if (d.size() != 3)
                    throw ConfigError("phantom.dims needs 3 entries");
                ph.dims = {d[0], d[1], d[2]};
            }
            maybe(p, "nt", ph.nt);
            maybe(p, "tr", ph.tr);
            maybe(p, "noise_sd", ph.noise_sd);
            maybe(p, "ar_rho", ph.ar_rho);
            maybe(p, "drift_amplitude", ph.drift_amplitude);
            maybe(p, "motion_sd", ph.motion_sd);
            maybe(p, "score_min", ph.score_min);
            maybe(p, "score_max", ph.score_max);
            maybe(p, "baseline", ph.baseline);
            maybe(p, "beta_silence_base", ph.beta_silence_base);
            maybe(p, "highpass_cutoff_s", ph.highpass_cutoff_s);
            maybe(p, "seed", ph.seed);
            if (p.contains("planted_regions")) {
                ph.planted_regions.clear();
                for (const json& r : p.at("planted_regions")) {
                    synth::PlantedRegion reg;
                    const auto c =
                        r.at("center").get<std::vector<std::size_t>>();
                    if (c.size() != 3)
                        throw ConfigError("planted region center needs 3 "
                                          "entries");
                    reg.cx = c[0];
                    reg.cy = c[1];
                    reg.cz = c[2];
                    maybe(r, "radius", reg.radius);
                    maybe(r, "base_amplitude", reg.base_amplitude);
                    maybe(r, "score_slope", reg.score_slope);
                    ph.planted_regions.push_back(reg);
                }
            }
        }
        if (j.contains("mask")) {
            const json& m = j["mask"];
            maybe(m, "alpha", cfg.mask.alpha);
            maybe(m, "tau", cfg.mask.tau);
            maybe(m, "min_subjects", cfg.mask.min_subjects);
            if (m.contains("mode")) {
                const auto mode = m.at("mode").get<std::string>();
                if (mode == "ttest")
                    cfg.mask.mode = group::MaskMode::ttest;
                else if (mode == "intersection")
                    cfg.mask.mode = group::MaskMode::intersection;
                else
                    throw ConfigError("mask.mode must be ttest or "
                                      "intersection");
            }
        }
        if (j.contains("classify")) {
            const json& c = j["classify"];
            auto& cl = cfg.classify;
            maybe(c, "n_iter", cl.n_iter);
            maybe(c, "test_fraction", cl.test_fraction);
            maybe(c, "seed", cl.seed);
            maybe(c, "combos", cl.combos);
            maybe(c, "classifiers", cl.classifiers);
            maybe(c, "svc_c", cl.svc_c);
            maybe(c, "svc_kernel", cl.svc_kernel);
            maybe(c, "pearson_alpha", cl.pearson_alpha);
            maybe(c, "l1_c", cl.l1_c);
            maybe(c, "l1_threshold", cl.l1_threshold);
            maybe(c, "global_mask", cl.global_mask);
        }
        if (j.contains("design")) {
            const json& d = j["design"];
            maybe(d, "highpass_cutoff_s", cfg.design.highpass_cutoff_s);
            maybe(d, "microtime_bins", cfg.design.microtime_bins);
            maybe(d, "hrf_duration_s", cfg.design.hrf_duration_s);
        }
        if (j.contains("labels")) {
            const json& l = j["labels"];
            if (l.contains("mode")) {
                const auto mode = l.at("mode").get<std::string>();
                if (mode == "fixed")
                    cfg.labels.mode = io::LabelPolicy::Mode::fixed;
                else if (mode == "median")
                    cfg.labels.mode = io::LabelPolicy::Mode::median;
                else
                    throw ConfigError("labels.mode must be fixed or median");
            }
            maybe(l, "threshold", cfg.labels.threshold);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config parse: ") + e.what());
    }
    return cfg;
}

json config_json(const RunConfig& cfg) {
    json planted = json::array();
    for (const auto& r : cfg.phantom.planted_regions)
        planted.push_back({{"center", {r.cx, r.cy, r.cz}},
                           {"radius", r.radius},
                           {"base_amplitude", r.base_amplitude},
                           {"score_slope", r.score_slope}});
    return json{
        {"phantom",
         {{"n_subjects", cfg.phantom.n_subjects},
          {"dims",
           {cfg.phantom.dims.nx, cfg.phantom.dims.ny, cfg.phantom.dims.nz}},
          {"nt", cfg.phantom.nt},
          {"tr", cfg.phantom.tr},
          {"planted_regions", planted},
          {"noise_sd", cfg.phantom.noise_sd},
          {"ar_rho", cfg.phantom.ar_rho},
          {"drift_amplitude", cfg.phantom.drift_amplitude},
          {"motion_sd", cfg.phantom.motion_sd},
          {"score_min", cfg.phantom.score_min},
          {"score_max", cfg.phantom.score_max},
          {"baseline", cfg.phantom.baseline},
          {"beta_silence_base", cfg.phantom.beta_silence_base},
          {"highpass_cutoff_s", cfg.phantom.highpass_cutoff_s},
          {"seed", cfg.phantom.seed}}},
        {"mask",
         {{"mode", cfg.mask.mode == group::MaskMode::ttest ? "ttest"
                                                           : "intersection"},
          {"alpha", cfg.mask.alpha},
          {"tau", cfg.mask.tau},
          {"min_subjects", cfg.mask.min_subjects}}},
        {"classify",
         {{"n_iter", cfg.classify.n_iter},
          {"test_fraction", cfg.classify.test_fraction},
          {"seed", cfg.classify.seed},
          {"combos", cfg.classify.combos},
          {"classifiers", cfg.classify.classifiers},
          {"svc_c", cfg.classify.svc_c},
          {"svc_kernel", cfg.classify.svc_kernel},
          {"pearson_alpha", cfg.classify.pearson_alpha},
          {"l1_c", cfg.classify.l1_c},
          {"l1_threshold", cfg.classify.l1_threshold},
          {"global_mask", cfg.classify.global_mask}}},
        {"design",
         {{"highpass_cutoff_s", cfg.design.highpass_cutoff_s},
          {"microtime_bins", cfg.design.microtime_bins},
          {"hrf_duration_s", cfg.design.hrf_duration_s}}},
        {"labels",
         {{"mode", cfg.labels.mode == io::LabelPolicy::Mode::fixed
                       ? "fixed"
                       : "median"},
          {"threshold", cfg.labels.threshold}}},
    };
}

void write_resolved_config(const RunConfig& cfg, const std::string& command,
                           const json& io_paths, unsigned jobs,
                           const std::string& out_dir) {
    json j{{"command", command},
           {"jobs", jobs},
           {"io", io_paths},
           {"config", config_json(cfg)}};
    std::ofstream out(fs::path(out_dir) / "resolved_config.json",
                      std::ios::trunc);
    if (!out)
        throw ValidationError("cannot write resolved_config.json in " +
                              out_dir);
    out << j.dump(2) << '\n';
}

std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == '+')
            c = '-';
    return s;
}

// ----------------------------------------------------------- shared loading ---

struct CohortOnDisk {
    std::vector<io::CohortRecord> records;
    std::string cohort_json, events_tsv;
};

CohortOnDisk locate_cohort(const std::string& arg,
                           const io::LabelPolicy& policy) {
    CohortOnDisk out;
    fs::path p(arg);
    if (fs::is_directory(p))
        p /= "cohort.json";
    if (!fs::exists(p))
        throw MissingInputError(p.string());
    out.cohort_json = p.string();
    out.events_tsv = (p.parent_path() / "events.tsv").string();
    if (!fs::exists(out.events_tsv))
        throw MissingInputError(out.events_tsv);
    out.records = io::read_cohort_manifest(out.cohort_json, policy);
    return out;
}

struct TmapIndexEntry {
    std::string subject_id;
    std::string t_speech, t_silence, con_speech, con_silence; // resolved
};

struct TmapIndex {
    Dims3 dims;
    std::vector<TmapIndexEntry> entries;
    std::string index_path;
};

TmapIndex read_tmap_index(const std::string& dir) {
    const fs::path p = fs::path(dir) / "tmaps_index.json";
    if (!fs::exists(p))
        throw MissingInputError(p.string());
    std::ifstream in(p);
    json j;
    try {
        in >> j;
        TmapIndex idx;
        idx.index_path = p.string();
        const auto d = j.at("dims").get<std::vector<std::size_t>>();
        if (d.size() != 3)
            throw ValidationError("tmaps_index.json: dims needs 3 entries");
        idx.dims = {d[0], d[1], d[2]};
        for (const json& s : j.at("subjects")) {
            TmapIndexEntry e;
            e.subject_id = s.at("subject_id").get<std::string>();
            const fs::path base(dir);
            e.t_speech = (base / s.at("t_speech").get<std::string>()).string();
            e.t_silence =
                (base / s.at("t_silence").get<std::string>()).string();
            e.con_speech =
                (base / s.at("con_speech").get<std::string>()).string();
            e.con_silence =
                (base / s.at("con_silence").get<std::string>()).string();
            idx.entries.push_back(std::move(e));
        }
        return idx;
    } catch (const json::exception& e) {
        throw ValidationError(p.string() + ": " + e.what());
    }
}

// ------------------------------------------------------------- subcommands ---

int cmd_simulate(const RunConfig& cfg0, const std::string& config_path,
                 const std::string& out_dir, unsigned jobs,
                 bool write_clean) {
    RunConfig cfg = cfg0;
    fs::create_directories(out_dir);
    const auto cohort =
        synth::generate_phantom_cohort(cfg.phantom, out_dir, jobs,
                                       write_clean);
    log::info("simulate: wrote " + std::to_string(cohort.subjects.size()) +
              " subjects to " + out_dir);
    write_resolved_config(cfg, "simulate", json{{"out", out_dir}}, jobs,
                          out_dir);
    std::vector<std::string> inputs;
    if (!config_path.empty())
        inputs.push_back(config_path);
    report::write_manifest(inputs,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_tmap(const RunConfig& cfg, const std::string& config_path,
             const std::string& cohort_arg, const std::string& out_dir,
             unsigned jobs) {
    const CohortOnDisk cohort = locate_cohort(cohort_arg, cfg.labels);
    fs::create_directories(out_dir);
    json subjects = json::array();
    Dims3 dims{};
    std::size_t nt = 0;
    double tr = 0.0;
    std::vector<std::string> inputs{cohort.cohort_json, cohort.events_tsv};
    for (const auto& rec : cohort.records) {
        if (!fs::exists(rec.bold_path))
            throw MissingInputError(rec.bold_path);
        const Volume4D bold = io::read_volume4d(rec.bold_path);
        if (nt == 0) {
            nt = bold.dims.nt;
            tr = bold.tr_seconds;
            dims = bold.dims.spatial();
        } else if (bold.dims.nt != nt || !(bold.dims.spatial() == dims)) {
            throw ValidationError("tmap: subject " + rec.subject_id +
                                  " disagrees on volume shape");
        }
        const io::MotionRegressors motion =
            io::read_motion_tsv(rec.motion_path, nt);
        const io::EventTimeline timeline = io::read_events_tsv(
            cohort.events_tsv, static_cast<double>(nt) * tr);
        const design::DesignMatrix dm = design::build_design(
            timeline, motion, nt, tr, cfg.design.highpass_cutoff_s,
            cfg.design.microtime_bins, cfg.design.hrf_duration_s);
        const glm::TMapPair maps = glm::subject_tmaps(bold, dm, jobs);

        const std::string stem = rec.subject_id;
        const std::string f_ts = stem + "_tmap_speech_gt_silence.nii";
        const std::string f_tn = stem + "_tmap_silence_gt_speech.nii";
        const std::string f_cs = stem + "_con_speech_gt_silence.nii";
        const std::string f_cn = stem + "_con_silence_gt_speech.nii";
        io::write_nifti(maps.t_speech_gt_silence,
                        (fs::path(out_dir) / f_ts).string());
        io::write_nifti(maps.t_silence_gt_speech,
                        (fs::path(out_dir) / f_tn).string());
        io::write_nifti(maps.con_speech_gt_silence,
                        (fs::path(out_dir) / f_cs).string());
        io::write_nifti(maps.con_silence_gt_speech,
                        (fs::path(out_dir) / f_cn).string());
        double rho_mean = 0.0, rho_min = 0.0, rho_max = 0.0;
        if (!maps.summary.rho.empty()) {
            rho_min = rho_max = maps.summary.rho.front();
            for (double r : maps.summary.rho) {
                rho_mean += r;
                rho_min = std::min(rho_min, r);
                rho_max = std::max(rho_max, r);
            }
            rho_mean /= static_cast<double>(maps.summary.rho.size());
        }
        subjects.push_back({{"subject_id", rec.subject_id},
                            {"t_speech", f_ts},
                            {"t_silence", f_tn},
                            {"con_speech", f_cs},
                            {"con_silence", f_cn},
                            {"dof", maps.summary.dof},
                            {"rank", maps.summary.rank},
                            {"n_degenerate", maps.summary.n_degenerate},
                            {"rho_mean", rho_mean},
                            {"rho_min", rho_min},
                            {"rho_max", rho_max}});
        inputs.push_back(rec.bold_path);
        inputs.push_back(rec.motion_path);
        log::info("tmap: " + rec.subject_id + " done");
    }
    json idx{{"dims", {dims.nx, dims.ny, dims.nz}},
             {"nt", nt},
             {"tr", tr},
             {"subjects", subjects}};
    {
        std::ofstream out(fs::path(out_dir) / "tmaps_index.json",
                          std::ios::trunc);
        out << idx.dump(2) << '\n';
    }
    write_resolved_config(cfg, "tmap",
                          json{{"cohort", cohort_arg}, {"out", out_dir}},
                          jobs, out_dir);
    report::write_manifest(inputs,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_mask(const RunConfig& cfg, const std::string& tmap_dir,
             const std::string& out_dir, unsigned jobs) {
    (void)jobs;
    const TmapIndex idx = read_tmap_index(tmap_dir);
    fs::create_directories(out_dir);
    // masks come from the signed t (speech minus silence); the rectified
    // pair stores it split across two files
    std::vector<ScalarMap> speech, silence;
    std::vector<std::string> inputs{idx.index_path};
    for (const auto& e : idx.entries) {
        ScalarMap sp = io::read_scalar_map(e.t_speech,
                                           MapKind::tmap_speech_gt_silence);
        const ScalarMap si = io::read_scalar_map(
            e.t_silence, MapKind::tmap_silence_gt_speech);
        sp.kind = MapKind::contrast;
        ScalarMap neg = sp;
        for (std::size_t v = 0; v < sp.data.size(); ++v) {
            sp.data[v] -= si.data[v];
            neg.data[v] = -sp.data[v];
        }
        speech.push_back(std::move(sp));
        silence.push_back(std::move(neg));
        inputs.push_back(e.t_speech);
        inputs.push_back(e.t_silence);
    }
    const BrainMask mask_speech = group::group_mask(speech, cfg.mask);
    const BrainMask mask_silence = group::group_mask(silence, cfg.mask);
    io::write_nifti(mask_speech,
                    (fs::path(out_dir) / "mask_speech.nii").string());
    io::write_nifti(mask_silence,
                    (fs::path(out_dir) / "mask_silence.nii").string());
    json j{{"n_subjects", idx.entries.size()},
           {"mask_speech_voxels", mask_speech.count()},
           {"mask_silence_voxels", mask_silence.count()},
           {"total_voxels", mask_speech.dims.nvox()}};
    {
        std::ofstream out(fs::path(out_dir) / "mask_stats.json",
                          std::ios::trunc);
        out << j.dump(2) << '\n';
    }
    write_resolved_config(cfg, "mask",
                          json{{"tmaps", tmap_dir}, {"out", out_dir}}, 1,
                          out_dir);
    report::write_manifest(inputs,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_classify(const RunConfig& cfg, const std::string& cohort_arg,
                 const std::string& tmap_dir, const std::string& out_dir,
                 unsigned jobs) {
    const CohortOnDisk cohort = locate_cohort(cohort_arg, cfg.labels);
    const TmapIndex idx = read_tmap_index(tmap_dir);
    fs::create_directories(out_dir);

    std::map<std::string, const TmapIndexEntry*> by_id;
    for (const auto& e : idx.entries)
        by_id[e.subject_id] = &e;
    eval::ExperimentInput input;
    input.cohort = cohort.records;
    std::vector<std::string> inputs{cohort.cohort_json, idx.index_path};
    for (const auto& rec : cohort.records) {
        const auto it = by_id.find(rec.subject_id);
        if (it == by_id.end())
            throw MissingInputError("t-maps for subject " + rec.subject_id +
                                    " under " + tmap_dir);
        eval::SubjectMaps m;
        m.t_speech = io::read_scalar_map(it->second->t_speech,
                                         MapKind::tmap_speech_gt_silence);
        m.t_silence = io::read_scalar_map(it->second->t_silence,
                                          MapKind::tmap_silence_gt_speech);
        input.maps.push_back(std::move(m));
        inputs.push_back(it->second->t_speech);
        inputs.push_back(it->second->t_silence);
    }

    for (const auto& combo_name : cfg.classify.combos) {
        for (const auto& clf_name : cfg.classify.classifiers) {
            eval::ExperimentConfig ec;
            ec.n_iter = cfg.classify.n_iter;
            ec.test_fraction = cfg.classify.test_fraction;
            ec.seed = cfg.classify.seed;
            ec.combo = eval::combo_from_name(combo_name);
            ec.classifier = eval::classifier_from_name(clf_name);
            ec.svc_c = cfg.classify.svc_c;
            if (cfg.classify.svc_kernel == "linear")
                ec.svc_kernel = ml::Kernel::linear;
            else if (cfg.classify.svc_kernel == "rbf")
                ec.svc_kernel = ml::Kernel::rbf;
            else
                throw ConfigError("svc_kernel must be linear or rbf");
            ec.pearson_alpha = cfg.classify.pearson_alpha;
            ec.l1_c = cfg.classify.l1_c;
            ec.l1_threshold = cfg.classify.l1_threshold;
            ec.mask_cfg = cfg.mask;
            ec.global_mask = cfg.classify.global_mask;
            ec.jobs = jobs;
            const eval::ExperimentResult res =
                eval::run_experiment(input, ec);
            const std::string tag =
                sanitize(combo_name) + "_" + clf_name;
            report::write_auc_json(
                res, (fs::path(out_dir) / ("auc_" + tag + ".json")).string());
            report::write_selections_json(
                res, idx.dims,
                (fs::path(out_dir) / ("selections_" + tag + ".json"))
                    .string());
            log::info("classify: " + combo_name + "/" + clf_name +
                      " mean AUC " + std::to_string(res.dist.mean()));
        }
    }
    write_resolved_config(cfg, "classify",
                          json{{"cohort", cohort_arg},
                               {"tmaps", tmap_dir},
                               {"out", out_dir}},
                          jobs, out_dir);
    report::write_manifest(inputs,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_localize(const RunConfig& cfg, const std::string& selections_path,
                 const std::string& mask_path, const std::string& out_dir,
                 std::size_t top_k) {
    if (!fs::exists(selections_path))
        throw MissingInputError(selections_path);
    const report::SelectionsFile sel =
        report::read_selections_json(selections_path);
    fs::create_directories(out_dir);
    BrainMask mask = mask_path.empty() ? BrainMask::full(sel.dims)
                                       : io::read_mask(mask_path);
    std::vector<std::vector<std::size_t>> speech_sets, silence_sets;
    for (const auto& r : sel.records) {
        speech_sets.push_back(r.speech_voxels);
        silence_sets.push_back(r.silence_voxels);
    }
    const ScalarMap prob_speech =
        group::selection_probability_map(speech_sets, mask, sel.n_iter);
    const ScalarMap prob_silence =
        group::selection_probability_map(silence_sets, mask, sel.n_iter);
    io::write_nifti(prob_speech,
                    (fs::path(out_dir) / "prob_speech.nii").string());
    io::write_nifti(prob_silence,
                    (fs::path(out_dir) / "prob_silence.nii").string());
    const auto clusters = group::top_clusters(prob_speech, top_k);
    json jc = json::array();
    for (const auto& c : clusters) {
        const auto xyz = coordinates(c.peak_index, prob_speech.dims);
        jc.push_back({{"peak_voxel", c.peak_index},
                      {"peak_xyz", {xyz[0], xyz[1], xyz[2]}},
                      {"size", c.size},
                      {"peak_probability", c.peak_value},
                      {"mean_probability", c.mean_value}});
    }
    json j{{"combo", sel.combo},
           {"classifier", sel.classifier},
           {"n_iter", sel.n_iter},
           {"clusters", jc}};
    {
        std::ofstream out(fs::path(out_dir) / "clusters.json",
                          std::ios::trunc);
        out << j.dump(2) << '\n';
    }
    write_resolved_config(cfg, "localize",
                          json{{"selections", selections_path},
                               {"mask", mask_path},
                               {"out", out_dir}},
                          1, out_dir);
    std::vector<std::string> inputs{selections_path};
    if (!mask_path.empty())
        inputs.push_back(mask_path);
    report::write_manifest(inputs,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

int cmd_report(const RunConfig& cfg, const std::string& results_dir,
               const std::string& out_dir) {
    if (!fs::is_directory(results_dir))
        throw MissingInputError(results_dir);
    std::vector<std::string> files;
    for (const auto& entry : fs::directory_iterator(results_dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("auc_", 0) == 0 && entry.path().extension() == ".json")
            files.push_back(entry.path().string());
    }
    if (files.empty())
        throw MissingInputError(results_dir + "/auc_*.json");
    std::vector<eval::AucDistribution> dists;
    for (const auto& f : files)
        dists.push_back(report::read_auc_json(f));
    // Canonical row order: classifier, then the pipeline's combo order.
    auto combo_rank = [](const std::string& c) {
        int i = 0;
        for (eval::FeatureCombo fc :
             {eval::FeatureCombo::demographics, eval::FeatureCombo::speech_tmap,
              eval::FeatureCombo::demographics_speech_tmap,
              eval::FeatureCombo::two_tmaps, eval::FeatureCombo::all}) {
            if (c == eval::combo_name(fc))
                return i;
            ++i;
        }
        return i;
    };
    std::sort(dists.begin(), dists.end(),
              [&](const eval::AucDistribution& a,
                  const eval::AucDistribution& b) {
                  if (a.classifier != b.classifier)
                      return a.classifier < b.classifier;
                  return combo_rank(a.combo) < combo_rank(b.combo);
              });
    const eval::ExperimentReport rep = eval::summarize(dists);
    fs::create_directories(out_dir);
    report::write_report_csv(rep,
                             (fs::path(out_dir) / "report.csv").string());
    report::write_pairwise_csv(
        rep, (fs::path(out_dir) / "pairwise.csv").string());
    report::write_auc_svg(rep,
                          (fs::path(out_dir) / "auc_chart.svg").string());
    write_resolved_config(cfg, "report",
                          json{{"results", results_dir}, {"out", out_dir}},
                          1, out_dir);
    std::sort(files.begin(), files.end());
    report::write_manifest(files,
                           (fs::path(out_dir) / "manifest.json").string());
    return 0;
}

// -------------------------------------------------------------- error shell ---

void print_error(const char* type, const std::exception& e,
                 const json& extra = {}) {
    json j{{"error", {{"type", type}, {"message", e.what()}}}};
    for (auto it = extra.begin(); it != extra.end(); ++it)
        j["error"][it.key()] = it.value();
    std::cerr << j.dump() << std::endl;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const MissingInputError& e) {
        print_error("MissingInputError", e, {{"path", e.path}});
        return 2;
    } catch (const ConfigError& e) {
        print_error("ConfigError", e);
        return 3;
    } catch (const FormatError& e) {
        print_error("FormatError", e, {{"byte_offset", e.offset}});
        return 3;
    } catch (const StratifyError& e) {
        print_error("StratifyError", e);
        return 3;
    } catch (const PairingError& e) {
        print_error("PairingError", e);
        return 3;
    } catch (const DimsError& e) {
        print_error("DimsError", e);
        return 3;
    } catch (const IndexError& e) {
        print_error("IndexError", e);
        return 3;
    } catch (const EmptyMaskError& e) {
        print_error("EmptyMaskError", e);
        return 3;
    } catch (const ValidationError& e) {
        print_error("ValidationError", e);
        return 3;
    } catch (const ConvergenceError& e) {
        print_error("ConvergenceError", e, {{"gap", e.gap}});
        return 4;
    } catch (const DofError& e) {
        print_error("DofError", e);
        return 4;
    } catch (const TrainingError& e) {
        print_error("TrainingError", e);
        return 4;
    } catch (const DegenerateError& e) {
        print_error("DegenerateError", e);
        return 4;
    } catch (const DivisionError& e) {
        print_error("DivisionError", e);
        return 4;
    } catch (const AucUndefined& e) {
        print_error("AucUndefined", e);
        return 4;
    } catch (const Error& e) {
        print_error("Error", e);
        return 3;
    } catch (const std::exception& e) {
        print_error("Unexpected", e);
        return 1;
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Speech-vs-silence fMRI GLM pipeline with synthetic "
                 "phantom validation"};
    app.require_subcommand(1);

    std::string config_path, out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    unsigned jobs = 1;
    app.add_option("--config", config_path, "JSON config file")
        ->configurable(false);
    app.add_option("--seed", seed, "Override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    app.add_option("--jobs", jobs, "Worker threads for stage internals")
        ->check(CLI::Range(1u, 256u));

    auto* sim = app.add_subcommand("simulate", "Generate a phantom cohort");
    bool write_clean = false;
    sim->add_option("--out", out_dir, "Output directory")->required();
    sim->add_flag("--write-clean", write_clean,
                  "Also store noise-free volumes");

    auto* tmap = app.add_subcommand("tmap", "Per-subject GLM t-maps");
    std::string cohort_arg;
    tmap->add_option("--cohort", cohort_arg,
                     "Cohort directory or cohort.json")
        ->required();
    tmap->add_option("--out", out_dir, "Output directory")->required();

    auto* mask = app.add_subcommand("mask", "Group significance masks");
    std::string tmap_dir;
    mask->add_option("--tmaps", tmap_dir, "tmap output directory")
        ->required();
    mask->add_option("--out", out_dir, "Output directory")->required();

    auto* classify =
        app.add_subcommand("classify", "Shuffle-split classification");
    classify->add_option("--cohort", cohort_arg,
                         "Cohort directory or cohort.json")
        ->required();
    classify->add_option("--tmaps", tmap_dir, "tmap output directory")
        ->required();
    classify->add_option("--out", out_dir, "Output directory")->required();

    auto* localize =
        app.add_subcommand("localize", "Selection-probability maps");
    std::string selections_path, mask_path;
    std::size_t top_k = 3;
    localize->add_option("--selections", selections_path,
                         "selections_*.json from classify")
        ->required();
    localize->add_option("--mask", mask_path,
                         "Mask NIfTI (defaults to the full grid)");
    localize->add_option("--top", top_k, "Cluster count to report");
    localize->add_option("--out", out_dir, "Output directory")->required();

    auto* rep = app.add_subcommand("report", "Aggregate classify outputs");
    std::string results_dir;
    rep->add_option("--results", results_dir, "classify output directory")
        ->required();
    rep->add_option("--out", out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    return guarded([&]() -> int {
        RunConfig cfg = load_config(config_path);
        if (seed_set) {
            cfg.phantom.seed = seed;
            cfg.classify.seed = seed;
        }
        if (sim->parsed())
            return cmd_simulate(cfg, config_path, out_dir, jobs, write_clean);
        if (tmap->parsed())
            return cmd_tmap(cfg, config_path, cohort_arg, out_dir, jobs);
        if (mask->parsed())
            return cmd_mask(cfg, tmap_dir, out_dir, jobs);
        if (classify->parsed())
            return cmd_classify(cfg, cohort_arg, tmap_dir, out_dir, jobs);
        if (localize->parsed())
            return cmd_localize(cfg, selections_path, mask_path, out_dir,
                                top_k);
        if (rep->parsed())
            return cmd_report(cfg, results_dir, out_dir);
        return 1;
    });
}
