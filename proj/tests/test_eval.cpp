#include <catch2/catch_amalgamated.hpp>

#include <neuroglm/eval.hpp>
#include <neuroglm/rng.hpp>

#include "oracles.hpp"

#include <algorithm>
#include <cstdio>
#include <random>
#include <set>
#include <vector>

using namespace neuroglm;
using eval::ClassifierKind;
using eval::FeatureCombo;

namespace {

ml::Labels make_labels(std::size_t zeros, std::size_t ones) {
    ml::Labels y(zeros, 0);
    y.insert(y.end(), ones, 1);
    return y;
}

std::size_t count_label(const eval::Split& s, const ml::Labels& y, int want) {
    std::size_t k = 0;
    for (std::size_t i : s.test)
        if (y[i] == want)
            ++k;
    return k;
}

bool same_vec(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    return a.size() == b.size() && (a.array() == b.array()).all();
}

} // namespace

// ---------------------------------------------------------------------------
// Stratified shuffle splits.

TEST_CASE("test size and per-class apportionment") {
    // 97 subjects at 5%: ceil(4.85) = 5 test slots, quotas 2.47/2.53, the
    // larger remainder (class 1) takes the leftover slot.
    const auto y = make_labels(48, 49);
    const auto splits = eval::stratified_shuffle_split(y, 20, 0.05, 7);
    REQUIRE(splits.size() == 20);
    for (const auto& s : splits) {
        REQUIRE(s.test.size() == 5);
        REQUIRE(s.train.size() == 92);
        REQUIRE(count_label(s, y, 0) == 2);
        REQUIRE(count_label(s, y, 1) == 3);
    }
}

TEST_CASE("every class keeps a test slot under heavy skew") {
    // 90/7: the quota rounds class 1 down to zero, the floor fixes it up.
    const auto y = make_labels(90, 7);
    const auto splits = eval::stratified_shuffle_split(y, 50, 0.05, 1);
    for (const auto& s : splits) {
        REQUIRE(s.test.size() == 5);
        REQUIRE(count_label(s, y, 0) == 4);
        REQUIRE(count_label(s, y, 1) == 1);
    }
}

TEST_CASE("remainder ties favour class 0, then the larger class") {
    // 5/5 at 45%: quotas 2.5 each, tie broken toward class 0.
    const auto even = make_labels(5, 5);
    for (const auto& s : eval::stratified_shuffle_split(even, 10, 0.45, 3)) {
        REQUIRE(count_label(s, even, 0) == 3);
        REQUIRE(count_label(s, even, 1) == 2);
    }
    // 3/5 at 45%: quotas 1.5/2.5 tie on the remainder, class 1 is larger.
    const auto skew = make_labels(3, 5);
    for (const auto& s : eval::stratified_shuffle_split(skew, 10, 0.45, 3)) {
        REQUIRE(count_label(s, skew, 0) == 1);
        REQUIRE(count_label(s, skew, 1) == 3);
    }
}

TEST_CASE("splits partition the cohort") {
    const auto y = make_labels(9, 8);
    const auto splits = eval::stratified_shuffle_split(y, 25, 0.2, 11);
    for (const auto& s : splits) {
        REQUIRE(std::is_sorted(s.test.begin(), s.test.end()));
        REQUIRE(std::is_sorted(s.train.begin(), s.train.end()));
        std::set<std::size_t> seen(s.test.begin(), s.test.end());
        for (std::size_t i : s.train)
            REQUIRE(seen.insert(i).second); // no overlap
        REQUIRE(seen.size() == y.size());
    }
}

TEST_CASE("splits are seed-deterministic") {
    const auto y = make_labels(10, 10);
    const auto a = eval::stratified_shuffle_split(y, 10, 0.2, 99);
    const auto b = eval::stratified_shuffle_split(y, 10, 0.2, 99);
    for (std::size_t i = 0; i < a.size(); ++i) {
        REQUIRE(a[i].test == b[i].test);
        REQUIRE(a[i].train == b[i].train);
        REQUIRE(a[i].fingerprint == b[i].fingerprint);
    }
    const auto c = eval::stratified_shuffle_split(y, 10, 0.2, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.size(); ++i)
        any_diff = any_diff || a[i].test != c[i].test;
    REQUIRE(any_diff);
    // Iterations are not copies of each other.
    bool varies = false;
    for (std::size_t i = 1; i < a.size(); ++i)
        varies = varies || a[i].test != a[0].test;
    REQUIRE(varies);
}

TEST_CASE("split fingerprints hash the sorted test indices") {
    const auto y = make_labels(6, 6);
    const auto splits = eval::stratified_shuffle_split(y, 3, 0.25, 5);
    for (const auto& s : splits) {
        std::string buf;
        for (std::size_t v : s.test) {
            buf += std::to_string(v);
            buf += ',';
        }
        char hex[17];
        std::snprintf(hex, sizeof hex, "%016llx",
                      static_cast<unsigned long long>(rng::fnv1a64(buf)));
        REQUIRE(s.fingerprint == std::string(hex));
        REQUIRE(s.fingerprint.size() == 16);
    }
}

TEST_CASE("split input validation") {
    const auto y = make_labels(6, 6);
    REQUIRE_THROWS_AS(eval::stratified_shuffle_split(y, 10, 0.0, 1),
                      ValidationError);
    REQUIRE_THROWS_AS(eval::stratified_shuffle_split(y, 10, 0.5, 1),
                      ValidationError);
    REQUIRE_THROWS_AS(eval::stratified_shuffle_split(y, 0, 0.2, 1),
                      ValidationError);
    REQUIRE_THROWS_AS(
        eval::stratified_shuffle_split({0, 1, 1, 1}, 10, 0.2, 1),
        StratifyError); // class 0 has one member
    REQUIRE_THROWS_AS(
        eval::stratified_shuffle_split({0, 1, 2, 1}, 10, 0.2, 1),
        ValidationError);
}

// ---------------------------------------------------------------------------
// ROC AUC.

TEST_CASE("auc hand fixtures") {
    REQUIRE(eval::roc_auc({0.1, 0.4, 0.35, 0.8}, {0, 0, 1, 1}) == 0.75);
    REQUIRE(eval::roc_auc({0.5, 0.5}, {0, 1}) == 0.5); // tie counts half
    REQUIRE(eval::roc_auc({0.2, 0.9}, {0, 1}) == 1.0);
    REQUIRE(eval::roc_auc({0.9, 0.2}, {0, 1}) == 0.0);
}

TEST_CASE("auc equals exhaustive pair counting") {
    std::mt19937 rng(4242);
    std::uniform_int_distribution<int> nd(2, 10), level(0, 4);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 200; ++rep) {
        const int n = nd(rng);
        std::vector<double> scores(static_cast<std::size_t>(n));
        ml::Labels labels(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
            scores[static_cast<std::size_t>(i)] = 0.25 * level(rng);
            labels[static_cast<std::size_t>(i)] = coin(rng) ? 1 : 0;
        }
        labels[0] = 0;
        labels[static_cast<std::size_t>(n - 1)] = 1;
        const double got = eval::roc_auc(scores, labels);
        const double want = oracles::auc_pairs(scores, labels);
        REQUIRE(got == want); // both are exact ratios of half-integers
    }
}

TEST_CASE("auc input validation") {
    REQUIRE_THROWS_AS(eval::roc_auc({0.1, 0.2}, {1, 1}), AucUndefined);
    REQUIRE_THROWS_AS(eval::roc_auc({0.1, 0.2}, {0, 0}), AucUndefined);
    REQUIRE_THROWS_AS(eval::roc_auc({0.1, 0.2}, {0, 3}), ValidationError);
    REQUIRE_THROWS_AS(eval::roc_auc({0.1}, {0, 1}), DimsError);
}

// ---------------------------------------------------------------------------
// Wilcoxon signed-rank.

TEST_CASE("wilcoxon one-sided extreme fixture") {
    const std::vector<double> a{1, 2, 3, 4, 5};
    const std::vector<double> b{0, 0, 0, 0, 0};
    const auto res = eval::wilcoxon_signed_rank(a, b);
    REQUIRE(res.w == 0.0);
    REQUIRE(res.n == 5);
    REQUIRE(res.exact);
    REQUIRE(res.p == 0.0625); // 2 of 32 sign patterns
}

TEST_CASE("wilcoxon mixed-sign fixture") {
    const std::vector<double> a{5, -1, 4, -2, 6};
    const std::vector<double> b{0, 0, 0, 0, 0};
    const auto res = eval::wilcoxon_signed_rank(a, b);
    REQUIRE(res.w == 3.0); // ranks 1 and 2 carry the negative signs
    REQUIRE(res.p == 0.3125);
}

TEST_CASE("zero differences are dropped before ranking") {
    const std::vector<double> a{3, 7, 1, 2, 3, 4, 5, 9};
    const std::vector<double> b{3, 7, 0, 0, 0, 0, 0, 9};
    const auto res = eval::wilcoxon_signed_rank(a, b);
    REQUIRE(res.n == 5);
    REQUIRE(res.p == 0.0625);
}

TEST_CASE("wilcoxon matches the subset-sum oracle with ties") {
    std::mt19937 rng(99);
    std::uniform_int_distribution<int> nd(5, 10), mag(1, 3);
    std::bernoulli_distribution coin(0.5);
    for (int rep = 0; rep < 150; ++rep) {
        const int n = nd(rng);
        std::vector<double> diffs(static_cast<std::size_t>(n));
        for (auto& d : diffs)
            d = (coin(rng) ? 1.0 : -1.0) * mag(rng);
        const std::vector<double> zeros(diffs.size(), 0.0);
        const auto res = eval::wilcoxon_signed_rank(diffs, zeros);
        REQUIRE(res.exact);
        REQUIRE_THAT(res.p,
                     Catch::Matchers::WithinAbs(
                         oracles::wilcoxon_exact_p(diffs), 1e-12));
    }
}

TEST_CASE("wilcoxon switches to the normal approximation past n=12") {
    std::vector<double> a(13), zeros(13, 0.0);
    for (std::size_t i = 0; i < 13; ++i)
        a[i] = static_cast<double>(i + 1);
    REQUIRE_FALSE(eval::wilcoxon_signed_rank(a, zeros).exact);
    a.resize(12);
    zeros.resize(12);
    REQUIRE(eval::wilcoxon_signed_rank(a, zeros).exact);
}

TEST_CASE("wilcoxon approximate branch applies the continuity correction") {
    // Magnitudes 1..20, negatives on 1, 2, 3: W- = 6, no ties.
    std::vector<double> a(20), zeros(20, 0.0);
    for (std::size_t i = 0; i < 20; ++i)
        a[i] = static_cast<double>(i + 1);
    a[0] = -1;
    a[1] = -2;
    a[2] = -3;
    const auto res = eval::wilcoxon_signed_rank(a, zeros);
    REQUIRE(res.w == 6.0);
    REQUIRE_FALSE(res.exact);
    const double mean = 20.0 * 21.0 / 4.0;
    const double var = 20.0 * 21.0 * 41.0 / 24.0;
    const double z = (6.0 - mean + 0.5) / std::sqrt(var);
    REQUIRE_THAT(res.p, Catch::Matchers::WithinAbs(
                            2.0 * stats::norm_cdf(z), 1e-12));
}

TEST_CASE("wilcoxon input validation") {
    const std::vector<double> five{1, 2, 3, 4, 5};
    REQUIRE_THROWS_AS(eval::wilcoxon_signed_rank(five, {0, 0}), PairingError);
    REQUIRE_THROWS_AS(eval::wilcoxon_signed_rank(five, five),
                      DegenerateError); // all differences zero
    REQUIRE_THROWS_AS(
        eval::wilcoxon_signed_rank({1, 2, 3, 4, 0, 0}, {0, 0, 0, 0, 0, 0}),
        ValidationError); // only 4 nonzero differences
}

// ---------------------------------------------------------------------------
// Names and small helpers.

TEST_CASE("combo and classifier names round-trip") {
    for (FeatureCombo c :
         {FeatureCombo::demographics, FeatureCombo::speech_tmap,
          FeatureCombo::demographics_speech_tmap, FeatureCombo::two_tmaps,
          FeatureCombo::all})
        REQUIRE(eval::combo_from_name(eval::combo_name(c)) == c);
    REQUIRE(std::string(eval::combo_name(
                FeatureCombo::demographics_speech_tmap)) ==
            "demographics+speech_tmap");
    REQUIRE_THROWS_AS(eval::combo_from_name("tmaps"), ConfigError);
    REQUIRE(eval::classifier_from_name("svc") == ClassifierKind::svc);
    REQUIRE(eval::classifier_from_name("gnb") == ClassifierKind::gnb);
    REQUIRE_THROWS_AS(eval::classifier_from_name("svm"), ConfigError);
}

TEST_CASE("demographics matrix layout") {
    std::vector<io::CohortRecord> cohort(2);
    cohort[0].age = 70;
    cohort[0].education = 12;
    cohort[0].gender = io::Gender::female;
    cohort[1].age = 65;
    cohort[1].education = 16;
    cohort[1].gender = io::Gender::male;
    const Eigen::MatrixXd m = eval::demographics_matrix(cohort);
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    REQUIRE(m(0, 0) == 70.0);
    REQUIRE(m(0, 1) == 12.0);
    REQUIRE(m(0, 2) == 0.0);
    REQUIRE(m(1, 2) == 1.0);
}

TEST_CASE("decline is the positive class") {
    eval::ExperimentInput in;
    in.cohort.resize(3);
    in.cohort[0].label = io::CognitiveLabel::DECLINE;
    in.cohort[1].label = io::CognitiveLabel::NORMAL;
    in.cohort[2].label = io::CognitiveLabel::DECLINE;
    REQUIRE(in.labels() == ml::Labels{1, 0, 1});
}

// ---------------------------------------------------------------------------
// Iteration pipeline.

namespace {

eval::ExperimentInput toy_input(std::size_t n_subjects = 12) {
    eval::ExperimentInput in;
    const Dims3 d{3, 3, 3};
    for (std::size_t s = 0; s < n_subjects; ++s) {
        io::CohortRecord rec;
        rec.subject_id = "sub-" + std::to_string(s);
        rec.age = 60.0 + static_cast<double>(s % 7);
        rec.education = 8.0 + static_cast<double>(s % 5);
        rec.gender = s % 2 == 0 ? io::Gender::male : io::Gender::female;
        rec.moca = 14 + static_cast<int>(s); // 14..25 straddles the cutoff
        rec.label = rec.moca > 20 ? io::CognitiveLabel::NORMAL
                                  : io::CognitiveLabel::DECLINE;
        in.cohort.push_back(rec);

        eval::SubjectMaps maps;
        maps.t_speech = ScalarMap(d, MapKind::tmap_speech_gt_silence);
        maps.t_silence = ScalarMap(d, MapKind::tmap_silence_gt_speech);
        for (std::size_t v = 0; v < d.nvox(); ++v) {
            maps.t_speech.data[v] =
                1.0 + 0.01 * static_cast<double>((v * 7 + s * 13) % 23);
            maps.t_silence.data[v] =
                0.5 + 0.01 * static_cast<double>((v * 5 + s * 11) % 17);
        }
        // A few voxels track cognition, so the filter has something to find.
        for (std::size_t v : {4, 13, 22})
            maps.t_speech.data[v] += 0.3 * static_cast<double>(rec.moca - 14);
        in.maps.push_back(maps);
    }
    return in;
}

eval::ExperimentConfig toy_config() {
    eval::ExperimentConfig cfg;
    cfg.n_iter = 12;
    cfg.test_fraction = 0.25;
    cfg.seed = 31;
    cfg.combo = FeatureCombo::all;
    cfg.classifier = ClassifierKind::svc;
    return cfg;
}

} // namespace

TEST_CASE("iteration statistics never touch the test rows") {
    const auto input = toy_input();
    const auto cfg = toy_config();
    const auto splits = eval::stratified_shuffle_split(
        input.labels(), cfg.n_iter, cfg.test_fraction, cfg.seed);
    const auto& split = splits[0];
    const auto base = eval::run_iteration(input, split, cfg);
    REQUIRE_FALSE(base.skipped);
    REQUIRE_FALSE(base.mask_speech_voxels.empty());
    REQUIRE_FALSE(base.final_tmap_cols.empty());

    auto tampered = input;
    for (std::size_t t : split.test) {
        for (double& v : tampered.maps[t].t_speech.data)
            v += 41.0;
        for (double& v : tampered.maps[t].t_silence.data)
            v += 17.0;
        tampered.cohort[t].moca = 30;
        tampered.cohort[t].age += 25.0;
        tampered.cohort[t].education += 9.0;
    }
    const auto det = eval::run_iteration(tampered, split, cfg);

    REQUIRE(det.mask_speech_voxels == base.mask_speech_voxels);
    REQUIRE(det.mask_silence_voxels == base.mask_silence_voxels);
    REQUIRE(same_vec(det.std_mean, base.std_mean));
    REQUIRE(same_vec(det.std_sd, base.std_sd));
    REQUIRE(det.pearson_cols == base.pearson_cols);
    REQUIRE(det.final_tmap_cols == base.final_tmap_cols);
    REQUIRE(det.sel_speech_voxels == base.sel_speech_voxels);
    REQUIRE(det.sel_silence_voxels == base.sel_silence_voxels);
    REQUIRE(same_vec(det.model_w, base.model_w));
    REQUIRE(det.model_bias == base.model_bias);
    // The perturbation itself was live: the test predictions moved.
    REQUIRE(det.test_scores != base.test_scores);
}

TEST_CASE("a global mask does leak test subjects") {
    const auto input = toy_input();
    auto cfg = toy_config();
    cfg.combo = FeatureCombo::speech_tmap;
    std::vector<std::size_t> everyone(input.n_subjects());
    for (std::size_t i = 0; i < everyone.size(); ++i)
        everyone[i] = i;
    const auto space = eval::detail::build_masked_space(input, everyone, cfg);

    auto tampered = input;
    tampered.maps[0].t_speech.data[0] = -1000.0; // subject 0, voxel 0
    const auto space2 =
        eval::detail::build_masked_space(tampered, everyone, cfg);
    REQUIRE(space.mask_speech.contains(0));
    REQUIRE_FALSE(space2.mask_speech.contains(0));
}

TEST_CASE("experiments are deterministic and job-count independent") {
    const auto input = toy_input();
    auto cfg = toy_config();
    const auto a = eval::run_experiment(input, cfg);
    const auto b = eval::run_experiment(input, cfg);
    cfg.jobs = 4;
    const auto c = eval::run_experiment(input, cfg);

    REQUIRE(a.dist.values == b.dist.values);
    REQUIRE(a.dist.values == c.dist.values);
    REQUIRE(a.dist.fingerprints == c.dist.fingerprints);
    REQUIRE(a.dist.iterations == c.dist.iterations);
    REQUIRE(a.selections.size() == c.selections.size());
    for (std::size_t i = 0; i < a.selections.size(); ++i) {
        REQUIRE(a.selections[i].iteration == c.selections[i].iteration);
        REQUIRE(a.selections[i].speech_voxels ==
                c.selections[i].speech_voxels);
        REQUIRE(a.selections[i].silence_voxels ==
                c.selections[i].silence_voxels);
    }
    REQUIRE(a.dist.values.size() + a.skipped.size() == cfg.n_iter);
    REQUIRE(std::is_sorted(a.dist.iterations.begin(),
                           a.dist.iterations.end()));
    REQUIRE(a.dist.fingerprints.size() == cfg.n_iter);

    auto reseeded = cfg;
    reseeded.seed = 32;
    const auto d = eval::run_experiment(input, reseeded);
    REQUIRE(a.dist.fingerprints != d.dist.fingerprints);
}

TEST_CASE("demographics-only experiments skip the maps entirely") {
    auto input = toy_input();
    input.maps.clear();
    auto cfg = toy_config();
    cfg.combo = FeatureCombo::demographics;
    cfg.classifier = ClassifierKind::gnb;
    const auto res = eval::run_experiment(input, cfg);
    REQUIRE(res.dist.values.size() == cfg.n_iter);
    for (const auto& sel : res.selections) {
        REQUIRE(sel.speech_voxels.empty());
        REQUIRE(sel.silence_voxels.empty());
    }
    for (double v : res.dist.values) {
        REQUIRE(v >= 0.0);
        REQUIRE(v <= 1.0);
    }
}

TEST_CASE("experiment input validation") {
    const auto input = toy_input();
    auto cfg = toy_config();

    auto no_maps = input;
    no_maps.maps.clear();
    REQUIRE_THROWS_AS(eval::run_experiment(no_maps, cfg), MissingInputError);

    eval::ExperimentInput empty;
    REQUIRE_THROWS_AS(eval::run_experiment(empty, cfg), ValidationError);

    auto bad = cfg;
    bad.test_fraction = 0.6;
    REQUIRE_THROWS_AS(eval::run_experiment(input, bad), ConfigError);
    bad = cfg;
    bad.n_iter = 0;
    REQUIRE_THROWS_AS(eval::run_experiment(input, bad), ConfigError);
    bad = cfg;
    bad.svc_c = 0.0;
    REQUIRE_THROWS_AS(eval::run_experiment(input, bad), ConfigError);

    auto mismatched = input;
    mismatched.maps[3].t_silence =
        ScalarMap({2, 2, 2}, MapKind::tmap_silence_gt_speech);
    REQUIRE_THROWS_AS(eval::run_experiment(mismatched, cfg), DimsError);
}

// ---------------------------------------------------------------------------
// Summaries.

namespace {

eval::AucDistribution make_dist(const std::string& combo,
                                const std::vector<double>& values,
                                const std::vector<std::size_t>& iterations,
                                const std::string& classifier = "svc") {
    eval::AucDistribution d;
    d.values = values;
    d.iterations = iterations;
    d.n_iter = 10;
    d.seed = 5;
    d.combo = combo;
    d.classifier = classifier;
    return d;
}

} // namespace

TEST_CASE("summary rows report mean, sd, and retained count") {
    const auto d = make_dist("all", {0.9, 0.8, 0.7, 0.8, 0.85},
                             {0, 1, 2, 3, 4});
    const auto rep = eval::summarize({d});
    REQUIRE(rep.rows.size() == 1);
    REQUIRE(rep.rows[0].combo == "all");
    REQUIRE(rep.rows[0].n_effective == 5);
    REQUIRE_THAT(rep.rows[0].mean_auc,
                 Catch::Matchers::WithinAbs(0.81, 1e-12));
    // Sample sd: deviations {.09, -.01, -.11, -.01, .04}, ss = 0.022.
    REQUIRE_THAT(rep.rows[0].sd_auc,
                 Catch::Matchers::WithinAbs(std::sqrt(0.022 / 4.0), 1e-12));
    REQUIRE(rep.pairwise.empty());
}

TEST_CASE("pairwise tests pair by iteration and share a classifier") {
    const auto a = make_dist("all", {0.9, 0.92, 0.88, 0.95, 0.91, 0.9, 0.93},
                             {0, 1, 2, 4, 5, 6, 7});
    const auto b = make_dist("demographics",
                             {0.5, 0.52, 0.48, 0.51, 0.5, 0.49, 0.53},
                             {0, 2, 3, 4, 5, 6, 7});
    const auto g = make_dist("all", {0.7, 0.7}, {0, 1}, "gnb");
    const auto rep = eval::summarize({a, b, g});
    REQUIRE(rep.rows.size() == 3);
    REQUIRE(rep.pairwise.size() == 1); // gnb never pairs with svc
    const auto& t = rep.pairwise[0];
    REQUIRE(t.combo_a == "all");
    REQUIRE(t.combo_b == "demographics");
    REQUIRE(t.classifier == "svc");
    // Shared iterations: {0, 2, 4, 5, 6, 7}; every difference is positive.
    REQUIRE(t.n == 6);
    REQUIRE(t.w == 0.0);
    REQUIRE_FALSE(t.degenerate);
    REQUIRE(t.p == 2.0 / 64.0);
}

TEST_CASE("identical distributions mark the pair degenerate") {
    const auto a = make_dist("all", {0.9, 0.9, 0.9, 0.9, 0.9},
                             {0, 1, 2, 3, 4});
    const auto b = make_dist("two_tmaps", {0.9, 0.9, 0.9, 0.9, 0.9},
                             {0, 1, 2, 3, 4});
    const auto rep = eval::summarize({a, b});
    REQUIRE(rep.pairwise.size() == 1);
    REQUIRE(rep.pairwise[0].degenerate);
    REQUIRE(rep.pairwise[0].p == 1.0);
    REQUIRE(rep.pairwise[0].n == 0);
}

TEST_CASE("summaries reject mixed runs") {
    auto a = make_dist("all", {0.9}, {0});
    auto b = make_dist("demographics", {0.5}, {0});
    b.seed = 6;
    REQUIRE_THROWS_AS(eval::summarize({a, b}), PairingError);
    b = make_dist("demographics", {0.5}, {0});
    b.n_iter = 11;
    REQUIRE_THROWS_AS(eval::summarize({a, b}), PairingError);
    REQUIRE(eval::summarize({}).rows.empty());
}

TEST_CASE("empty distributions fall back to zero summaries") {
    const auto d = make_dist("all", {}, {});
    REQUIRE(d.mean() == 0.0);
    REQUIRE(d.sd() == 0.0);
    const auto one = make_dist("all", {0.7}, {0});
    REQUIRE(one.sd() == 0.0);
}
