#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "neuroglm/design.hpp"
#include "neuroglm/errors.hpp"
#include "neuroglm/nifti.hpp"
#include "neuroglm/rng.hpp"
#include "neuroglm/tables.hpp"
#include "neuroglm/threading.hpp"
#include "neuroglm/volume.hpp"

// Ground-truth phantom cohorts: synthetic subjects whose planted
// speech-responsive regions scale with a synthetic cognition score, plus an
// independent dense GLM used as a verification oracle.

namespace neuroglm::synth {

struct PlantedRegion {
    std::size_t cx = 0, cy = 0, cz = 0;
    double radius = 2.0;
    double base_amplitude = 0.8;
    double score_slope = 0.06;
};

struct PhantomConfig {
    std::size_t n_subjects = 40;
    Dims3 dims{20, 20, 20};
    std::size_t nt = 200;
    double tr = 0.9;
    std::vector<PlantedRegion> planted_regions = {
        {6, 10, 10, 2.0, 0.8, 0.06},
        {13, 6, 9, 2.0, 0.7, 0.05},
        {10, 14, 13, 2.0, 0.9, 0.07},
    };
    double noise_sd = 2.0;
    double ar_rho = 0.3;
    double drift_amplitude = 2.0;
    double motion_sd = 0.05;
    double score_min = 10.0, score_max = 28.0;
    double baseline = 100.0;
    double beta_silence_base = 0.3;
    double highpass_cutoff_s = 128.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (n_subjects < 4)
            throw ConfigError("phantom: needs at least 4 subjects");
        if (nt < 16)
            throw ConfigError("phantom: nt too small");
        if (!(tr > 0.0))
            throw ConfigError("phantom: tr must be positive");
        if (!(noise_sd >= 0.0))
            throw ConfigError("phantom: noise_sd must be >= 0");
        if (!(std::fabs(ar_rho) < 1.0))
            throw ConfigError("phantom: |ar_rho| must be < 1");
        if (!(score_min < score_max))
            throw ConfigError("phantom: empty score range");
        for (const auto& r : planted_regions) {
            const auto rad = static_cast<long>(std::ceil(r.radius));
            const long lo[3] = {static_cast<long>(r.cx) - rad,
                                static_cast<long>(r.cy) - rad,
                                static_cast<long>(r.cz) - rad};
            const long hi[3] = {static_cast<long>(r.cx) + rad,
                                static_cast<long>(r.cy) + rad,
                                static_cast<long>(r.cz) + rad};
            const long n[3] = {static_cast<long>(dims.nx),
                               static_cast<long>(dims.ny),
                               static_cast<long>(dims.nz)};
            for (int a = 0; a < 3; ++a)
                if (lo[a] < 0 || hi[a] >= n[a])
                    throw ConfigError("phantom: planted region exceeds grid");
        }
    }

    double score_midpoint() const { return (score_min + score_max) / 2.0; }
};

/// Voxels within Euclidean distance radius of the region center.
inline std::vector<std::size_t> region_voxels(const PlantedRegion& r,
                                              Dims3 dims) {
    std::vector<std::size_t> out;
    const auto rad = static_cast<long>(std::ceil(r.radius));
    for (long z = -rad; z <= rad; ++z)
        for (long y = -rad; y <= rad; ++y)
            for (long x = -rad; x <= rad; ++x) {
                const double d2 = static_cast<double>(x * x + y * y + z * z);
                if (d2 > r.radius * r.radius)
                    continue;
                out.push_back(linear_index(
                    static_cast<std::size_t>(static_cast<long>(r.cx) + x),
                    static_cast<std::size_t>(static_cast<long>(r.cy) + y),
                    static_cast<std::size_t>(static_cast<long>(r.cz) + z),
                    dims));
            }
    std::sort(out.begin(), out.end());
    return out;
}

/// Alternating block schedule: 5 s gap, 20 s speech, 5 s gap, 15 s silence,
/// repeated while complete events fit inside the run.
inline io::EventTimeline phantom_timeline(double total_seconds) {
    io::EventTimeline tl;
    tl.total_duration_seconds = total_seconds;
    double t = 0.0;
    while (t + 45.0 <= total_seconds + 1e-9) {
        tl.events.push_back({t + 5.0, 20.0, io::Condition::speech});
        tl.events.push_back({t + 30.0, 15.0, io::Condition::silence});
        t += 45.0;
    }
    if (tl.events.empty())
        throw ConfigError("phantom: run too short for one block cycle");
    tl.validate();
    return tl;
}

struct SubjectTruth {
    std::string subject_id;
    double score = 0.0;
    int moca = 0;
    double rho = 0.0;
    double noise_sd = 0.0;
    std::vector<std::size_t> planted_voxels;
    std::vector<double> planted_beta_diff; // aligned with planted_voxels
    double beta_silence = 0.0;
    double baseline = 0.0;
    std::vector<double> drift_coefs;
    std::vector<double> motion_gains; // 6 values
    io::CohortRecord record; // label left at its derived default
};

struct SubjectData {
    SubjectTruth truth;
    io::MotionRegressors motion;
    Volume4D bold;
    Volume4D clean; // noise-free signal
};

namespace detail {

/// Per-voxel coefficient vector in design column order
/// [speech, silence, motion x6, drift xK, intercept].
inline Eigen::VectorXd subject_beta(const SubjectTruth& t, std::size_t voxel,
                                    std::size_t ncols, std::size_t n_drift) {
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(
        static_cast<Eigen::Index>(ncols));
    const auto it = std::lower_bound(t.planted_voxels.begin(),
                                     t.planted_voxels.end(), voxel);
    if (it != t.planted_voxels.end() && *it == voxel) {
        const auto k = static_cast<std::size_t>(
            it - t.planted_voxels.begin());
        beta(0) = t.beta_silence + t.planted_beta_diff[k];
        beta(1) = t.beta_silence;
    }
    for (int j = 0; j < 6; ++j)
        beta(2 + j) = t.motion_gains[static_cast<std::size_t>(j)];
    for (std::size_t k = 0; k < n_drift; ++k)
        beta(2 + 6 + static_cast<Eigen::Index>(k)) = t.drift_coefs[k];
    beta(static_cast<Eigen::Index>(ncols) - 1) = t.baseline;
    return beta;
}

} // namespace detail

/// Noise-free BOLD implied by a subject's ground truth, rebuilt from the
/// same design the pipeline uses.
inline Volume4D reconstruct_clean(const SubjectTruth& truth,
                                  const io::EventTimeline& timeline,
                                  const io::MotionRegressors& motion,
                                  const PhantomConfig& cfg) {
    const design::DesignMatrix dm = design::build_design(
        timeline, motion, cfg.nt, cfg.tr, cfg.highpass_cutoff_s);
    Volume4D vol;
    vol.dims = {cfg.dims.nx, cfg.dims.ny, cfg.dims.nz, cfg.nt};
    vol.tr_seconds = cfg.tr;
    vol.data.assign(vol.dims.nvox() * cfg.nt, 0.0);
    const std::size_t nvox = vol.dims.nvox();
    const std::size_t n_drift = dm.n_drift();
    for (std::size_t v = 0; v < nvox; ++v) {
        const Eigen::VectorXd beta =
            detail::subject_beta(truth, v, dm.ncols(), n_drift);
        const Eigen::VectorXd y = dm.values * beta;
        for (std::size_t t = 0; t < cfg.nt; ++t)
            vol.data[v + nvox * t] = y(static_cast<Eigen::Index>(t));
    }
    return vol;
}

/// Generates one subject in memory. All randomness comes from streams
/// derived from (seed, purpose, subject index), so subjects are independent
/// of generation order.
inline SubjectData generate_subject(const PhantomConfig& cfg,
                                    const io::EventTimeline& timeline,
                                    std::size_t index) {
    SubjectData sub;
    SubjectTruth& truth = sub.truth;
    char idbuf[16];
    std::snprintf(idbuf, sizeof idbuf, "sub-%03zu", index + 1);
    truth.subject_id = idbuf;
    truth.noise_sd = cfg.noise_sd;
    truth.rho = cfg.ar_rho;
    truth.baseline = cfg.baseline;
    truth.beta_silence = cfg.beta_silence_base;

    auto g_score = rng::stream(cfg.seed, "score", index);
    truth.score = rng::uniform(g_score, cfg.score_min, cfg.score_max);
    truth.moca = static_cast<int>(std::lround(truth.score));
    truth.moca = std::clamp(truth.moca, 0, 30);

    for (const auto& r : cfg.planted_regions) {
        const double diff =
            r.base_amplitude +
            r.score_slope * (truth.score - cfg.score_midpoint());
        for (std::size_t v : region_voxels(r, cfg.dims)) {
            truth.planted_voxels.push_back(v);
            truth.planted_beta_diff.push_back(diff);
        }
    }
    // Overlapping regions: keep the first region's value per voxel.
    {
        std::vector<std::size_t> order(truth.planted_voxels.size());
        for (std::size_t i = 0; i < order.size(); ++i)
            order[i] = i;
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) {
                             return truth.planted_voxels[a] <
                                    truth.planted_voxels[b];
                         });
        std::vector<std::size_t> vox;
        std::vector<double> diff;
        for (std::size_t i : order) {
            if (!vox.empty() && vox.back() == truth.planted_voxels[i])
                continue;
            vox.push_back(truth.planted_voxels[i]);
            diff.push_back(truth.planted_beta_diff[i]);
        }
        truth.planted_voxels = std::move(vox);
        truth.planted_beta_diff = std::move(diff);
    }

    auto g_demo = rng::stream(cfg.seed, "demo", index);
    truth.record.subject_id = truth.subject_id;
    truth.record.age = std::floor(rng::uniform(g_demo, 55.0, 85.0) * 10.0) / 10.0;
    truth.record.education =
        std::floor(rng::uniform(g_demo, 6.0, 21.0));
    truth.record.gender = rng::uniform01(g_demo) < 0.5 ? io::Gender::male
                                                       : io::Gender::female;
    truth.record.moca = truth.moca;

    auto g_motion = rng::stream(cfg.seed, "motion", index);
    sub.motion.resize(static_cast<Eigen::Index>(cfg.nt), 6);
    for (int c = 0; c < 6; ++c) {
        double val = 0.0;
        for (std::size_t t = 0; t < cfg.nt; ++t) {
            val += cfg.motion_sd * rng::gauss(g_motion);
            sub.motion(static_cast<Eigen::Index>(t), c) = val;
        }
    }
    auto g_gain = rng::stream(cfg.seed, "gain", index);
    truth.motion_gains.resize(6);
    for (double& g : truth.motion_gains)
        g = rng::gauss(g_gain);

    const design::DesignMatrix dm = design::build_design(
        timeline, sub.motion, cfg.nt, cfg.tr, cfg.highpass_cutoff_s);
    auto g_drift = rng::stream(cfg.seed, "drift", index);
    truth.drift_coefs.resize(dm.n_drift());
    for (double& a : truth.drift_coefs)
        a = cfg.drift_amplitude * rng::gauss(g_drift);

    const std::size_t nvox = cfg.dims.nvox();
    sub.clean.dims = {cfg.dims.nx, cfg.dims.ny, cfg.dims.nz, cfg.nt};
    sub.clean.tr_seconds = cfg.tr;
    sub.clean.data.assign(nvox * cfg.nt, 0.0);
    for (std::size_t v = 0; v < nvox; ++v) {
        const Eigen::VectorXd beta =
            detail::subject_beta(truth, v, dm.ncols(), dm.n_drift());
        const Eigen::VectorXd y = dm.values * beta;
        for (std::size_t t = 0; t < cfg.nt; ++t)
            sub.clean.data[v + nvox * t] = y(static_cast<Eigen::Index>(t));
    }

    sub.bold = sub.clean;
    if (cfg.noise_sd > 0.0) {
        auto g_noise = rng::stream(cfg.seed, "noise", index);
        const double innov =
            cfg.noise_sd * std::sqrt(1.0 - cfg.ar_rho * cfg.ar_rho);
        for (std::size_t v = 0; v < nvox; ++v) {
            double e = cfg.noise_sd * rng::gauss(g_noise);
            sub.bold.data[v] += e;
            for (std::size_t t = 1; t < cfg.nt; ++t) {
                e = cfg.ar_rho * e + innov * rng::gauss(g_noise);
                sub.bold.data[v + nvox * t] += e;
            }
        }
    }
    return sub;
}

struct PhantomCohort {
    PhantomConfig cfg;
    io::EventTimeline timeline;
    std::vector<SubjectTruth> subjects;
    std::vector<std::size_t> planted_union; // sorted union over regions
};

inline std::vector<std::size_t> planted_union(const PhantomConfig& cfg) {
    std::vector<std::size_t> all;
    for (const auto& r : cfg.planted_regions) {
        const auto v = region_voxels(r, cfg.dims);
        all.insert(all.end(), v.begin(), v.end());
    }
    std::sort(all.begin(), all.end());
    all.erase(std::unique(all.begin(), all.end()), all.end());
    return all;
}

namespace detail {

inline nlohmann::json truth_json(const PhantomCohort& cohort) {
    nlohmann::json subs = nlohmann::json::array();
    for (const auto& t : cohort.subjects) {
        nlohmann::json planted = nlohmann::json::array();
        for (std::size_t k = 0; k < t.planted_voxels.size(); ++k)
            planted.push_back({{"voxel", t.planted_voxels[k]},
                               {"beta_diff", t.planted_beta_diff[k]}});
        subs.push_back({
            {"subject_id", t.subject_id},
            {"score", t.score},
            {"moca", t.moca},
            {"rho", t.rho},
            {"noise_sd", t.noise_sd},
            {"planted", planted},
            {"beta_silence", t.beta_silence},
            {"baseline", t.baseline},
            {"drift_coefs", t.drift_coefs},
            {"motion_gains", t.motion_gains},
            {"age", t.record.age},
            {"education", t.record.education},
            {"gender", t.record.gender == io::Gender::male ? "male"
                                                           : "female"},
        });
    }
    return {{"subjects", subs},
            {"planted_union", cohort.planted_union},
            {"score_midpoint", cohort.cfg.score_midpoint()}};
}

} // namespace detail

/// Writes the full cohort to out_dir: per-subject BOLD + motion files, one
/// shared events.tsv, cohort.json, ground_truth.json. With write_clean the
/// noise-free volumes are stored alongside.
inline PhantomCohort generate_phantom_cohort(const PhantomConfig& cfg,
                                             const std::string& out_dir,
                                             unsigned jobs = 1,
                                             bool write_clean = false) {
    cfg.validate();
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    PhantomCohort cohort;
    cohort.cfg = cfg;
    cohort.timeline =
        phantom_timeline(static_cast<double>(cfg.nt) * cfg.tr);
    cohort.planted_union = planted_union(cfg);
    cohort.subjects.resize(cfg.n_subjects);

    std::vector<io::CohortRecord> records(cfg.n_subjects);
    parallel_for(cfg.n_subjects, jobs, [&](std::size_t i) {
        SubjectData sub = generate_subject(cfg, cohort.timeline, i);
        const std::string stem = sub.truth.subject_id;
        const std::string bold_rel = stem + "_bold.nii";
        const std::string motion_rel = stem + "_motion.tsv";
        io::write_nifti(sub.bold, fs::path(out_dir) / bold_rel,
                        io::NiftiDatatype::float64);
        io::write_motion_tsv(sub.motion, fs::path(out_dir) / motion_rel);
        if (write_clean)
            io::write_nifti(sub.clean,
                            fs::path(out_dir) / (stem + "_clean.nii"),
                            io::NiftiDatatype::float64);
        sub.truth.record.bold_path = bold_rel;
        sub.truth.record.motion_path = motion_rel;
        records[i] = sub.truth.record;
        cohort.subjects[i] = std::move(sub.truth);
    });

    io::write_events_tsv(cohort.timeline,
                         (fs::path(out_dir) / "events.tsv").string());
    io::write_cohort_json(records,
                          (fs::path(out_dir) / "cohort.json").string());
    {
        std::ofstream out(fs::path(out_dir) / "ground_truth.json",
                          std::ios::trunc);
        if (!out)
            throw ValidationError("cannot write ground_truth.json");
        out << detail::truth_json(cohort).dump(2) << '\n';
    }
    return cohort;
}

// -------------------------------------------------------------- oracle GLM ---
// Deliberately separate from the main GLM: normal equations accumulated by
// hand and a cyclic Jacobi eigensolver for the pseudoinverse.

namespace oracle {

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
inline void jacobi_eigen(Eigen::MatrixXd a, Eigen::MatrixXd& vecs,
                         Eigen::VectorXd& vals) {
    const Eigen::Index n = a.rows();
    vecs = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q)
                off += a(p, q) * a(p, q);
        if (off < 1e-30 * std::max(1.0, a.diagonal().squaredNorm()))
            break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (a(p, q) == 0.0)
                    continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double sign = theta >= 0.0 ? 1.0 : -1.0;
                const double t =
                    sign / (std::fabs(theta) +
                            std::sqrt(1.0 + theta * theta));
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = vecs(k, p), vkq = vecs(k, q);
                    vecs(k, p) = c * vkp - s * vkq;
                    vecs(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    vals = a.diagonal();
}

struct OracleFit {
    Eigen::VectorXd betas;
    double sigma2 = 0.0;
    double dof = 0.0;
    std::size_t rank = 0;
    Eigen::MatrixXd xtx_pinv;
};

/// Normal-equations least squares with an eigendecomposition pseudoinverse.
inline OracleFit fit(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    const Eigen::Index nt = x.rows(), p = x.cols();
    if (y.size() != nt)
        throw DimsError("oracle fit: length mismatch");
    Eigen::MatrixXd xtx = Eigen::MatrixXd::Zero(p, p);
    Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        for (Eigen::Index j = 0; j < p; ++j) {
            double s = 0.0;
            for (Eigen::Index t = 0; t < nt; ++t)
                s += x(t, i) * x(t, j);
            xtx(i, j) = s;
        }
        double s = 0.0;
        for (Eigen::Index t = 0; t < nt; ++t)
            s += x(t, i) * y(t);
        xty(i) = s;
    }
    Eigen::MatrixXd vecs;
    Eigen::VectorXd vals;
    jacobi_eigen(xtx, vecs, vals);
    const double lam_max = vals.cwiseAbs().maxCoeff();
    // cutoff must clear the Jacobi noise floor (~p*eps*lam_max) or exact
    // collinearity leaks back in as a spurious rank
    const double thresh = 1e-12 * lam_max;
    OracleFit out;
    out.xtx_pinv = Eigen::MatrixXd::Zero(p, p);
    for (Eigen::Index k = 0; k < p; ++k) {
        if (vals(k) > thresh) {
            out.xtx_pinv += vecs.col(k) * vecs.col(k).transpose() / vals(k);
            ++out.rank;
        }
    }
    out.betas = out.xtx_pinv * xty;
    if (static_cast<std::size_t>(nt) <= out.rank)
        throw DofError("oracle fit: no residual dof");
    double rss = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        double f = 0.0;
        for (Eigen::Index j = 0; j < p; ++j)
            f += x(t, j) * out.betas(j);
        const double r = y(t) - f;
        rss += r * r;
    }
    out.dof = static_cast<double>(nt) - static_cast<double>(out.rank);
    out.sigma2 = rss / out.dof;
    return out;
}

inline double ar1(const Eigen::VectorXd& resid) {
    const Eigen::Index nt = resid.size();
    double mean = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t)
        mean += resid(t);
    mean /= static_cast<double>(nt);
    double num = 0.0, den = 0.0;
    for (Eigen::Index t = 0; t < nt; ++t) {
        const double c = resid(t) - mean;
        den += c * c;
        if (t > 0)
            num += c * (resid(t - 1) - mean);
    }
    if (den == 0.0)
        return 0.0;
    return std::clamp(num / den, -0.95, 0.95);
}

inline Eigen::MatrixXd whiten_cols(const Eigen::MatrixXd& m, double rho) {
    Eigen::MatrixXd out(m.rows(), m.cols());
    const double s = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        out(0, j) = s * m(0, j);
        for (Eigen::Index t = 1; t < m.rows(); ++t)
            out(t, j) = m(t, j) - rho * m(t - 1, j);
    }
    return out;
}

struct OracleVoxel {
    Eigen::VectorXd betas;
    double rho = 0.0;
    double con_speech = 0.0, t_speech = 0.0;
    double con_silence = 0.0, t_silence = 0.0;
};

/// Full per-voxel reference pipeline: OLS, AR(1), whitened refit,
/// positive-part contrasts. Mirrors the production contract with none of
/// its code.
inline OracleVoxel voxel_pipeline(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& x) {
    OracleVoxel out;
    const OracleFit ols = fit(y, x);
    Eigen::VectorXd resid = y;
    for (Eigen::Index t = 0; t < x.rows(); ++t)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            resid(t) -= x(t, j) * ols.betas(j);
    out.rho = ar1(resid);
    const Eigen::MatrixXd xw = whiten_cols(x, out.rho);
    const Eigen::MatrixXd yw = whiten_cols(y, out.rho);
    const OracleFit fin = fit(yw.col(0), xw);
    out.betas = fin.betas;
    Eigen::VectorXd c = Eigen::VectorXd::Zero(x.cols());
    c(0) = 1.0;
    c(1) = -1.0;
    const double value = c.dot(fin.betas);
    const double se =
        std::sqrt(std::max(0.0, fin.sigma2 * c.dot(fin.xtx_pinv * c)));
    const double t = se > 0.0 ? value / se : 0.0;
    if (value > 0.0) {
        out.con_speech = value;
        out.t_speech = t;
    } else if (value < 0.0) {
        out.con_silence = -value;
        out.t_silence = -t;
    }
    return out;
}

} // namespace oracle

} // namespace neuroglm::synth
