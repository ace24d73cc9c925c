#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neuroglm/errors.hpp"
#include "neuroglm/group.hpp"
#include "neuroglm/log.hpp"
#include "neuroglm/ml.hpp"
#include "neuroglm/rng.hpp"
#include "neuroglm/stats.hpp"
#include "neuroglm/tables.hpp"
#include "neuroglm/threading.hpp"
#include "neuroglm/volume.hpp"

// Cross-validation harness: stratified shuffle splits, ROC AUC, Wilcoxon
// signed-rank comparisons, and the per-iteration feature/classifier pipeline
// with strictly training-only statistics.

namespace neuroglm::eval {

// ------------------------------------------------------------------ splits ---

struct Split {
    std::vector<std::size_t> train, test;
    std::string fingerprint;
};

namespace detail {

inline std::string split_fingerprint(const std::vector<std::size_t>& test) {
    std::string buf;
    for (std::size_t v : test) {
        buf += std::to_string(v);
        buf += ',';
    }
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx",
                  static_cast<unsigned long long>(rng::fnv1a64(buf)));
    return std::string(hex);
}

} // namespace detail

/// Repeated stratified train/test partitions. Test size is
/// ceil(test_fraction * n); per-class test counts follow largest-remainder
/// apportionment of the class proportions, with every class granted at
/// least one slot when the test set is big enough. Identical seeds yield
/// identical split lists on every platform.
inline std::vector<Split> stratified_shuffle_split(const ml::Labels& labels,
                                                   std::size_t n_iter,
                                                   double test_fraction,
                                                   std::uint64_t seed) {
    const std::size_t n = labels.size();
    if (!(test_fraction > 0.0 && test_fraction < 0.5))
        throw ValidationError(
            "stratified_shuffle_split: test_fraction must lie in (0, 0.5)");
    if (n_iter < 1)
        throw ValidationError("stratified_shuffle_split: n_iter must be >= 1");
    std::vector<std::size_t> class0, class1;
    for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] == 1)
            class1.push_back(i);
        else if (labels[i] == 0)
            class0.push_back(i);
        else
            throw ValidationError("stratified_shuffle_split: labels not 0/1");
    }
    if (class0.size() < 2 || class1.size() < 2)
        throw StratifyError(
            "stratified_shuffle_split: each class needs >= 2 members");
    const std::size_t n_test = static_cast<std::size_t>(
        std::ceil(test_fraction * static_cast<double>(n)));

    // Per-class test counts: largest-remainder apportionment.
    const std::size_t counts[2] = {class0.size(), class1.size()};
    double quota[2];
    std::size_t alloc[2];
    for (int c = 0; c < 2; ++c) {
        quota[c] = static_cast<double>(n_test) *
                   static_cast<double>(counts[c]) / static_cast<double>(n);
        alloc[c] = static_cast<std::size_t>(std::floor(quota[c]));
    }
    std::size_t leftover = n_test - alloc[0] - alloc[1];
    const double rem0 = quota[0] - std::floor(quota[0]);
    const double rem1 = quota[1] - std::floor(quota[1]);
    int order[2] = {0, 1};
    if (rem1 > rem0 || (rem1 == rem0 && counts[1] > counts[0])) {
        order[0] = 1;
        order[1] = 0;
    }
    for (int k = 0; leftover > 0; k = (k + 1) % 2, --leftover)
        ++alloc[order[k]];
    if (n_test >= 2) {
        for (int c = 0; c < 2; ++c)
            if (alloc[c] == 0) {
                ++alloc[c];
                --alloc[1 - c];
            }
    }
    for (int c = 0; c < 2; ++c)
        if (alloc[c] >= counts[c])
            throw StratifyError("stratified_shuffle_split: class " +
                                std::to_string(c) +
                                " too small to stratify");

    std::vector<Split> splits;
    splits.reserve(n_iter);
    for (std::size_t it = 0; it < n_iter; ++it) {
        auto g = rng::stream(seed, "split", it);
        std::vector<std::size_t> c0 = class0, c1 = class1;
        rng::shuffle(c0, g);
        rng::shuffle(c1, g);
        Split s;
        s.test.assign(c0.begin(),
                      c0.begin() + static_cast<std::ptrdiff_t>(alloc[0]));
        s.test.insert(s.test.end(), c1.begin(),
                      c1.begin() + static_cast<std::ptrdiff_t>(alloc[1]));
        s.train.assign(c0.begin() + static_cast<std::ptrdiff_t>(alloc[0]),
                       c0.end());
        s.train.insert(s.train.end(),
                       c1.begin() + static_cast<std::ptrdiff_t>(alloc[1]),
                       c1.end());
        std::sort(s.test.begin(), s.test.end());
        std::sort(s.train.begin(), s.train.end());
        s.fingerprint = detail::split_fingerprint(s.test);
        splits.push_back(std::move(s));
    }
    return splits;
}

// --------------------------------------------------------------------- AUC ---

/// Mann-Whitney formulation: fraction of (positive, negative) pairs ranked
/// correctly, ties counting one half.
inline double roc_auc(const std::vector<double>& scores,
                      const ml::Labels& labels) {
    if (scores.size() != labels.size())
        throw DimsError("roc_auc: score/label length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0, n_neg = 0;
    for (int l : labels) {
        if (l == 1)
            ++n_pos;
        else if (l == 0)
            ++n_neg;
        else
            throw ValidationError("roc_auc: labels not 0/1");
    }
    if (n_pos == 0 || n_neg == 0)
        throw AucUndefined("roc_auc: test set holds a single class");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[idx[j]] == scores[idx[i]])
            ++j;
        const double midrank =
            (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            if (labels[idx[k]] == 1)
                rank_sum_pos += midrank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

// ---------------------------------------------------------------- Wilcoxon ---

struct WilcoxonResult {
    double w = 0.0; // min(W+, W-)
    double p = 1.0; // two-sided
    std::size_t n = 0; // nonzero differences
    bool exact = false;
};

/// Paired signed-rank test on a - b. Zero differences are dropped; |d| is
/// ranked with midranks. Exact p for n <= 12 enumerates all sign patterns
/// and counts those with min(W+, W-) <= observed; larger n uses the normal
/// approximation with tie and continuity corrections.
inline WilcoxonResult wilcoxon_signed_rank(const std::vector<double>& a,
                                           const std::vector<double>& b) {
    if (a.size() != b.size())
        throw PairingError("wilcoxon_signed_rank: unequal lengths");
    std::vector<double> d;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double di = a[i] - b[i];
        if (di != 0.0)
            d.push_back(di);
    }
    if (d.empty())
        throw DegenerateError("wilcoxon_signed_rank: identical paired samples");
    const std::size_t n = d.size();
    if (n < 5)
        throw ValidationError(
            "wilcoxon_signed_rank: needs >= 5 nonzero differences");

    std::vector<std::size_t> idx(n);
    for (std::size_t i = 0; i < n; ++i)
        idx[i] = i;
    std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
        return std::fabs(d[x]) < std::fabs(d[y]);
    });
    std::vector<double> rank(n);
    std::vector<std::size_t> tie_sizes;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && std::fabs(d[idx[j]]) == std::fabs(d[idx[i]]))
            ++j;
        const double midrank =
            (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k)
            rank[idx[k]] = midrank;
        tie_sizes.push_back(j - i);
        i = j;
    }
    double w_plus = 0.0, w_minus = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        if (d[k] > 0.0)
            w_plus += rank[k];
        else
            w_minus += rank[k];
    }
    WilcoxonResult res;
    res.n = n;
    res.w = std::min(w_plus, w_minus);

    if (n <= 12) {
        res.exact = true;
        const double total = static_cast<double>(n) *
                             static_cast<double>(n + 1) / 2.0;
        const std::uint64_t patterns = std::uint64_t{1} << n;
        std::uint64_t hits = 0;
        const double eps = 1e-9;
        for (std::uint64_t mask = 0; mask < patterns; ++mask) {
            double wp = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                if (mask & (std::uint64_t{1} << k))
                    wp += rank[k];
            if (std::min(wp, total - wp) <= res.w + eps)
                ++hits;
        }
        res.p = static_cast<double>(hits) / static_cast<double>(patterns);
        return res;
    }

    const double nn = static_cast<double>(n);
    const double mean = nn * (nn + 1.0) / 4.0;
    double var = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
    for (std::size_t t : tie_sizes) {
        const double td = static_cast<double>(t);
        var -= (td * td * td - td) / 48.0;
    }
    if (var <= 0.0)
        throw DegenerateError("wilcoxon_signed_rank: zero variance");
    const double z = (res.w - mean + 0.5) / std::sqrt(var);
    res.p = std::min(1.0, 2.0 * stats::norm_cdf(z));
    return res;
}

// ------------------------------------------------------------------ config ---

enum class FeatureCombo {
    demographics,
    speech_tmap,
    demographics_speech_tmap,
    two_tmaps,
    all,
};

inline const char* combo_name(FeatureCombo c) {
    switch (c) {
    case FeatureCombo::demographics: return "demographics";
    case FeatureCombo::speech_tmap: return "speech_tmap";
    case FeatureCombo::demographics_speech_tmap:
        return "demographics+speech_tmap";
    case FeatureCombo::two_tmaps: return "two_tmaps";
    case FeatureCombo::all: return "all";
    }
    return "?";
}

inline FeatureCombo combo_from_name(const std::string& s) {
    for (FeatureCombo c :
         {FeatureCombo::demographics, FeatureCombo::speech_tmap,
          FeatureCombo::demographics_speech_tmap, FeatureCombo::two_tmaps,
          FeatureCombo::all})
        if (s == combo_name(c))
            return c;
    throw ConfigError("unknown feature combo: " + s);
}

enum class ClassifierKind { svc, gnb };

inline const char* classifier_name(ClassifierKind c) {
    return c == ClassifierKind::svc ? "svc" : "gnb";
}

inline ClassifierKind classifier_from_name(const std::string& s) {
    if (s == "svc")
        return ClassifierKind::svc;
    if (s == "gnb")
        return ClassifierKind::gnb;
    throw ConfigError("unknown classifier: " + s);
}

struct ExperimentConfig {
    std::size_t n_iter = 500;
    double test_fraction = 0.05;
    std::uint64_t seed = 0;
    FeatureCombo combo = FeatureCombo::all;
    ClassifierKind classifier = ClassifierKind::svc;
    double svc_c = 1.0;
    ml::Kernel svc_kernel = ml::Kernel::linear;
    double pearson_alpha = 0.01;
    double l1_c = 1.0;
    double l1_threshold = 1e-5;
    group::GroupMaskConfig mask_cfg;
    bool global_mask = false; // compute the mask once on all subjects
    unsigned jobs = 1;

    void validate() const {
        if (!(test_fraction > 0.0 && test_fraction < 0.5))
            throw ConfigError("test_fraction must lie in (0, 0.5)");
        if (n_iter < 1)
            throw ConfigError("n_iter must be >= 1");
        if (!(svc_c > 0.0) || !(l1_c > 0.0))
            throw ConfigError("C values must be positive");
    }
};

inline bool combo_uses_tmaps(FeatureCombo c) {
    return c != FeatureCombo::demographics;
}

inline bool combo_uses_silence(FeatureCombo c) {
    return c == FeatureCombo::two_tmaps || c == FeatureCombo::all;
}

inline bool combo_uses_demographics(FeatureCombo c) {
    return c == FeatureCombo::demographics ||
           c == FeatureCombo::demographics_speech_tmap ||
           c == FeatureCombo::all;
}

// ------------------------------------------------------------------- input ---

struct SubjectMaps {
    ScalarMap t_speech;
    ScalarMap t_silence;
};

struct ExperimentInput {
    std::vector<io::CohortRecord> cohort;
    std::vector<SubjectMaps> maps; // may stay empty for demographics-only

    std::size_t n_subjects() const { return cohort.size(); }

    ml::Labels labels() const {
        ml::Labels y(cohort.size());
        for (std::size_t i = 0; i < cohort.size(); ++i)
            y[i] = cohort[i].label == io::CognitiveLabel::DECLINE ? 1 : 0;
        return y;
    }

    void validate(FeatureCombo combo) const {
        if (cohort.empty())
            throw ValidationError("experiment input: empty cohort");
        if (combo_uses_tmaps(combo)) {
            if (maps.size() != cohort.size())
                throw MissingInputError(
                    "t-maps missing for some cohort subjects");
            const Dims3 d = maps.front().t_speech.dims;
            for (const auto& m : maps)
                if (!(m.t_speech.dims == d) || !(m.t_silence.dims == d))
                    throw DimsError("experiment input: map dims disagree");
        }
    }
};

/// Demographic design: age, education, gender as 0/1 (male = 1).
inline Eigen::MatrixXd demographics_matrix(
    const std::vector<io::CohortRecord>& cohort) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(cohort.size()), 3);
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        out(static_cast<Eigen::Index>(i), 0) = cohort[i].age;
        out(static_cast<Eigen::Index>(i), 1) = cohort[i].education;
        out(static_cast<Eigen::Index>(i), 2) =
            cohort[i].gender == io::Gender::male ? 1.0 : 0.0;
    }
    return out;
}

// -------------------------------------------------------------- iterations ---

/// Everything one iteration computed, exposed for the leakage audit.
struct IterationDetail {
    Split split;
    std::vector<std::size_t> mask_speech_voxels, mask_silence_voxels;
    Eigen::VectorXd std_mean, std_sd;
    Eigen::VectorXd demo_mean, demo_sd;
    std::vector<std::size_t> pearson_cols; // into the masked feature space
    std::vector<std::size_t> final_tmap_cols; // post-L1, same space
    std::vector<std::size_t> sel_speech_voxels, sel_silence_voxels;
    Eigen::VectorXd model_w; // linear SVC weights (empty otherwise)
    double model_bias = 0.0;
    std::vector<double> test_scores;
    double auc = 0.0;
    bool skipped = false;
    std::string skip_cause;
};

namespace detail {

struct MaskedSpace {
    BrainMask mask_speech, mask_silence;
    // Column layout: speech-mask voxels first, then silence-mask voxels.
    std::vector<std::size_t> col_voxel;
    std::vector<bool> col_is_speech;

    std::size_t cols() const { return col_voxel.size(); }
};

// Group masks are tested on the signed per-subject t (speech minus silence
// recovers it exactly: one side of the pair is always zero). Feeding the
// rectified maps instead would hand the one-sided test a folded null and
// admit nearly every voxel.
inline ScalarMap signed_tmap(const SubjectMaps& m, bool speech_positive) {
    ScalarMap out = m.t_speech;
    out.kind = MapKind::contrast;
    for (std::size_t v = 0; v < out.data.size(); ++v) {
        const double d = m.t_speech.data[v] - m.t_silence.data[v];
        out.data[v] = speech_positive ? d : -d;
    }
    return out;
}

inline MaskedSpace build_masked_space(const ExperimentInput& input,
                                      const std::vector<std::size_t>& subjects,
                                      const ExperimentConfig& cfg) {
    MaskedSpace sp;
    std::vector<ScalarMap> maps;
    maps.reserve(subjects.size());
    for (std::size_t s : subjects)
        maps.push_back(signed_tmap(input.maps[s], true));
    sp.mask_speech = group::group_mask(maps, cfg.mask_cfg);
    for (std::size_t v : sp.mask_speech.voxel_index) {
        sp.col_voxel.push_back(v);
        sp.col_is_speech.push_back(true);
    }
    if (combo_uses_silence(cfg.combo)) {
        maps.clear();
        for (std::size_t s : subjects)
            maps.push_back(signed_tmap(input.maps[s], false));
        sp.mask_silence = group::group_mask(maps, cfg.mask_cfg);
        for (std::size_t v : sp.mask_silence.voxel_index) {
            sp.col_voxel.push_back(v);
            sp.col_is_speech.push_back(false);
        }
    }
    return sp;
}

inline Eigen::MatrixXd masked_features(const ExperimentInput& input,
                                       const std::vector<std::size_t>& rows,
                                       const MaskedSpace& sp) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()),
                        static_cast<Eigen::Index>(sp.cols()));
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& m = input.maps[rows[r]];
        for (std::size_t c = 0; c < sp.cols(); ++c) {
            const ScalarMap& map =
                sp.col_is_speech[c] ? m.t_speech : m.t_silence;
            out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                map.data[sp.col_voxel[c]];
        }
    }
    return out;
}

} // namespace detail

/// Runs one iteration of the pipeline. All data-dependent statistics (mask,
/// standardizer, Pearson filter, L1 selection) are fit on the training rows
/// only; a global_mask computed upstream may be injected for the leaky
/// comparison mode.
inline IterationDetail run_iteration(const ExperimentInput& input,
                                     const Split& split,
                                     const ExperimentConfig& cfg,
                                     const detail::MaskedSpace* global_space =
                                         nullptr) {
    IterationDetail det;
    det.split = split;
    const ml::Labels y_all = input.labels();
    ml::Labels y_train, y_test;
    for (std::size_t i : split.train)
        y_train.push_back(y_all[i]);
    for (std::size_t i : split.test)
        y_test.push_back(y_all[i]);

    Eigen::MatrixXd train_feats(static_cast<Eigen::Index>(split.train.size()),
                                0);
    Eigen::MatrixXd test_feats(static_cast<Eigen::Index>(split.test.size()),
                               0);
    auto hstack = [](Eigen::MatrixXd& dst, const Eigen::MatrixXd& add) {
        if (dst.cols() == 0) {
            dst = add;
            return;
        }
        Eigen::MatrixXd merged(dst.rows(), dst.cols() + add.cols());
        merged << dst, add;
        dst = std::move(merged);
    };

    if (combo_uses_tmaps(cfg.combo)) {
        const detail::MaskedSpace space =
            global_space ? *global_space
                         : detail::build_masked_space(input, split.train, cfg);
        for (std::size_t c = 0; c < space.cols(); ++c)
            if (space.col_is_speech[c])
                det.mask_speech_voxels.push_back(space.col_voxel[c]);
            else
                det.mask_silence_voxels.push_back(space.col_voxel[c]);

        if (space.cols() > 0) {
            const Eigen::MatrixXd x_train =
                detail::masked_features(input, split.train, space);
            const Eigen::MatrixXd x_test =
                detail::masked_features(input, split.test, space);
            const ml::Standardizer st = ml::standardizer_fit(x_train);
            det.std_mean = st.mean;
            det.std_sd = st.sd;
            const Eigen::MatrixXd xs_train = ml::standardizer_apply(x_train, st);
            const Eigen::MatrixXd xs_test = ml::standardizer_apply(x_test, st);

            std::vector<double> moca_train;
            for (std::size_t i : split.train)
                moca_train.push_back(input.cohort[i].moca);
            const auto pearson =
                ml::pearson_filter(xs_train, moca_train, cfg.pearson_alpha);
            std::vector<std::size_t> stage1 = pearson.selected;
            if (stage1.empty()) {
                std::size_t best = 0;
                double best_r = -1.0;
                for (std::size_t j = 0; j < pearson.r.size(); ++j)
                    if (std::fabs(pearson.r[j]) > best_r) {
                        best_r = std::fabs(pearson.r[j]);
                        best = j;
                    }
                stage1.assign(1, best);
            }
            det.pearson_cols = stage1;

            Eigen::MatrixXd x1_train(xs_train.rows(),
                                     static_cast<Eigen::Index>(stage1.size()));
            Eigen::MatrixXd x1_test(xs_test.rows(),
                                    static_cast<Eigen::Index>(stage1.size()));
            std::vector<double> abs_r(stage1.size());
            for (std::size_t k = 0; k < stage1.size(); ++k) {
                x1_train.col(static_cast<Eigen::Index>(k)) =
                    xs_train.col(static_cast<Eigen::Index>(stage1[k]));
                x1_test.col(static_cast<Eigen::Index>(k)) =
                    xs_test.col(static_cast<Eigen::Index>(stage1[k]));
                abs_r[k] = std::fabs(pearson.r[stage1[k]]);
            }
            const auto l1 = ml::l1svc_select(x1_train, y_train, cfg.l1_c,
                                             cfg.l1_threshold, abs_r);
            for (std::size_t k : l1.selected) {
                const std::size_t col = stage1[k];
                det.final_tmap_cols.push_back(col);
                if (space.col_is_speech[col])
                    det.sel_speech_voxels.push_back(space.col_voxel[col]);
                else
                    det.sel_silence_voxels.push_back(space.col_voxel[col]);
            }
            Eigen::MatrixXd xf_train(
                x1_train.rows(), static_cast<Eigen::Index>(l1.selected.size()));
            Eigen::MatrixXd xf_test(
                x1_test.rows(), static_cast<Eigen::Index>(l1.selected.size()));
            for (std::size_t k = 0; k < l1.selected.size(); ++k) {
                xf_train.col(static_cast<Eigen::Index>(k)) =
                    x1_train.col(static_cast<Eigen::Index>(l1.selected[k]));
                xf_test.col(static_cast<Eigen::Index>(k)) =
                    x1_test.col(static_cast<Eigen::Index>(l1.selected[k]));
            }
            hstack(train_feats, xf_train);
            hstack(test_feats, xf_test);
        }
    }

    if (combo_uses_demographics(cfg.combo)) {
        const Eigen::MatrixXd demo = demographics_matrix(input.cohort);
        Eigen::MatrixXd d_train(static_cast<Eigen::Index>(split.train.size()),
                                3);
        Eigen::MatrixXd d_test(static_cast<Eigen::Index>(split.test.size()),
                               3);
        for (std::size_t r = 0; r < split.train.size(); ++r)
            d_train.row(static_cast<Eigen::Index>(r)) =
                demo.row(static_cast<Eigen::Index>(split.train[r]));
        for (std::size_t r = 0; r < split.test.size(); ++r)
            d_test.row(static_cast<Eigen::Index>(r)) =
                demo.row(static_cast<Eigen::Index>(split.test[r]));
        // demographics get their own train-fit standardizer; raw age on a
        // 55-85 scale would swamp the standardized t-map columns
        const ml::Standardizer ds = ml::standardizer_fit(d_train);
        det.demo_mean = ds.mean;
        det.demo_sd = ds.sd;
        hstack(train_feats, ml::standardizer_apply(d_train, ds));
        hstack(test_feats, ml::standardizer_apply(d_test, ds));
    }

    if (train_feats.cols() == 0) {
        det.skipped = true;
        det.skip_cause = "no features";
        return det;
    }

    std::vector<double> scores(split.test.size());
    try {
        if (cfg.classifier == ClassifierKind::svc) {
            const ml::SvcModel model = ml::svc_fit(
                train_feats, y_train, cfg.svc_c, cfg.svc_kernel);
            const Eigen::VectorXd s = ml::svc_decision(model, test_feats);
            for (std::size_t i = 0; i < scores.size(); ++i)
                scores[i] = s(static_cast<Eigen::Index>(i));
            if (model.kernel == ml::Kernel::linear) {
                det.model_w = model.w;
                det.model_bias = model.bias;
            }
        } else {
            const ml::GnbModel model = ml::gnb_fit(train_feats, y_train);
            const Eigen::VectorXd s = ml::gnb_scores(model, test_feats);
            for (std::size_t i = 0; i < scores.size(); ++i)
                scores[i] = s(static_cast<Eigen::Index>(i));
        }
        det.test_scores = scores;
        det.auc = roc_auc(scores, y_test);
    } catch (const AucUndefined& e) {
        det.skipped = true;
        det.skip_cause = e.what();
    } catch (const TrainingError& e) {
        det.skipped = true;
        det.skip_cause = e.what();
    }
    return det;
}

// ------------------------------------------------------------------ result ---

struct AucDistribution {
    std::vector<double> values; // one per retained iteration
    std::vector<std::size_t> iterations; // source iteration per value
    std::vector<std::string> fingerprints; // all n_iter splits
    std::size_t n_iter = 0;
    std::uint64_t seed = 0;
    std::string combo, classifier;

    double mean() const {
        return values.empty() ? 0.0 : stats::mean(values);
    }
    double sd() const {
        return values.size() < 2 ? 0.0 : stats::sample_sd(values);
    }
};

struct SelectionRecord {
    std::size_t iteration = 0;
    std::vector<std::size_t> speech_voxels, silence_voxels;
};

struct ExperimentResult {
    AucDistribution dist;
    std::vector<SelectionRecord> selections;
    std::vector<std::pair<std::size_t, std::string>> skipped;
};

/// Runs the full shuffle-split experiment for one combo/classifier pair.
/// Iterations execute in parallel; per-iteration RNG streams depend only on
/// (seed, iteration), so the job count never changes the result.
inline ExperimentResult run_experiment(const ExperimentInput& input,
                                       const ExperimentConfig& cfg) {
    cfg.validate();
    input.validate(cfg.combo);
    const auto splits = stratified_shuffle_split(
        input.labels(), cfg.n_iter, cfg.test_fraction, cfg.seed);

    detail::MaskedSpace global_space;
    const detail::MaskedSpace* space_ptr = nullptr;
    if (cfg.global_mask && combo_uses_tmaps(cfg.combo)) {
        std::vector<std::size_t> everyone(input.n_subjects());
        for (std::size_t i = 0; i < everyone.size(); ++i)
            everyone[i] = i;
        global_space = detail::build_masked_space(input, everyone, cfg);
        space_ptr = &global_space;
        log::warn("run_experiment: global mask mode leaks test subjects into "
                  "the significance mask");
    }

    std::vector<IterationDetail> details(cfg.n_iter);
    parallel_for(cfg.n_iter, cfg.jobs, [&](std::size_t it) {
        details[it] = run_iteration(input, splits[it], cfg, space_ptr);
    });

    ExperimentResult res;
    res.dist.n_iter = cfg.n_iter;
    res.dist.seed = cfg.seed;
    res.dist.combo = combo_name(cfg.combo);
    res.dist.classifier = classifier_name(cfg.classifier);
    for (std::size_t it = 0; it < cfg.n_iter; ++it) {
        res.dist.fingerprints.push_back(splits[it].fingerprint);
        const auto& det = details[it];
        if (det.skipped) {
            res.skipped.emplace_back(it, det.skip_cause);
            log::info("iteration " + std::to_string(it) +
                      " skipped: " + det.skip_cause);
            continue;
        }
        res.dist.values.push_back(det.auc);
        res.dist.iterations.push_back(it);
        SelectionRecord sel;
        sel.iteration = it;
        sel.speech_voxels = det.sel_speech_voxels;
        sel.silence_voxels = det.sel_silence_voxels;
        res.selections.push_back(std::move(sel));
    }
    return res;
}

// ----------------------------------------------------------------- summary ---

struct ComboSummary {
    std::string combo, classifier;
    double mean_auc = 0.0, sd_auc = 0.0;
    std::size_t n_effective = 0;
};

struct PairwiseTest {
    std::string combo_a, combo_b, classifier;
    double w = 0.0;
    double p = 1.0; // 1.0 marks degenerate (identical) distributions
    std::size_t n = 0;
    bool degenerate = false;
};

struct ExperimentReport {
    std::vector<ComboSummary> rows;
    std::vector<PairwiseTest> pairwise;
};

/// Mean/sd table plus pairwise Wilcoxon tests between combos that share a
/// classifier. All distributions must come from the same seed and n_iter.
/// Pairs the test cannot handle (identical values, or fewer than five
/// nonzero differences) are reported with the degenerate marker, p = 1.
inline ExperimentReport summarize(const std::vector<AucDistribution>& dists) {
    ExperimentReport rep;
    if (dists.empty())
        return rep;
    for (const auto& d : dists) {
        if (d.seed != dists.front().seed || d.n_iter != dists.front().n_iter)
            throw PairingError("summarize: distributions from different runs");
        ComboSummary row;
        row.combo = d.combo;
        row.classifier = d.classifier;
        row.mean_auc = d.mean();
        row.sd_auc = d.sd();
        row.n_effective = d.values.size();
        rep.rows.push_back(row);
    }
    for (std::size_t ai = 0; ai < dists.size(); ++ai) {
        for (std::size_t bi = ai + 1; bi < dists.size(); ++bi) {
            const auto& a = dists[ai];
            const auto& b = dists[bi];
            if (a.classifier != b.classifier)
                continue;
            // Pair values by iteration index (skips drop the pair).
            std::vector<double> va, vb;
            std::size_t ia = 0, ib = 0;
            while (ia < a.iterations.size() && ib < b.iterations.size()) {
                if (a.iterations[ia] == b.iterations[ib]) {
                    va.push_back(a.values[ia]);
                    vb.push_back(b.values[ib]);
                    ++ia;
                    ++ib;
                } else if (a.iterations[ia] < b.iterations[ib]) {
                    ++ia;
                } else {
                    ++ib;
                }
            }
            PairwiseTest t;
            t.combo_a = a.combo;
            t.combo_b = b.combo;
            t.classifier = a.classifier;
            try {
                const auto wr = wilcoxon_signed_rank(va, vb);
                t.w = wr.w;
                t.p = wr.p;
                t.n = wr.n;
            } catch (const DegenerateError&) {
                t.degenerate = true;
                t.p = 1.0;
                t.n = 0;
            } catch (const ValidationError&) {
                // < 5 nonzero differences: too close to call
                t.degenerate = true;
                t.p = 1.0;
                t.n = 0;
            }
            rep.pairwise.push_back(t);
        }
    }
    return rep;
}

} // namespace neuroglm::eval
