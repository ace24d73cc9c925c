#include <catch2/catch_amalgamated.hpp>

#include <neuroglm/design.hpp>
#include <neuroglm/glm.hpp>
#include <neuroglm/rng.hpp>
#include <neuroglm/synth.hpp>

using namespace neuroglm;

namespace {

io::EventTimeline block_timeline(double total) {
    io::EventTimeline tl;
    tl.total_duration_seconds = total;
    double t = 0.0;
    while (t + 45.0 <= total + 1e-9) {
        tl.events.push_back({t + 5.0, 20.0, io::Condition::speech});
        tl.events.push_back({t + 30.0, 15.0, io::Condition::silence});
        t += 45.0;
    }
    tl.validate();
    return tl;
}

design::DesignMatrix test_design(std::size_t nt, double tr,
                                 std::uint64_t seed) {
    io::MotionRegressors m(static_cast<Eigen::Index>(nt), 6);
    auto rng = rng::stream(seed, "motion", 0);
    for (Eigen::Index c = 0; c < 6; ++c) {
        double pos = 0.0;
        for (Eigen::Index r = 0; r < static_cast<Eigen::Index>(nt); ++r) {
            pos += 0.05 * rng::gauss(rng);
            m(r, c) = pos;
        }
    }
    return design::build_design(block_timeline(nt * tr), m, nt, tr);
}

Eigen::MatrixXd random_matrix(Eigen::Index r, Eigen::Index c,
                              std::uint64_t seed) {
    Eigen::MatrixXd x(r, c);
    auto rng = rng::stream(seed, "mat", 0);
    for (Eigen::Index i = 0; i < r; ++i)
        for (Eigen::Index j = 0; j < c; ++j)
            x(i, j) = rng::gauss(rng);
    return x;
}

} // namespace

TEST_CASE("OLS matches the hand-solved simple regression") {
    Eigen::MatrixXd x(4, 2);
    x << 1, 0, 1, 1, 1, 2, 1, 3;
    Eigen::VectorXd y(4);
    y << 1, 3, 2, 5;
    const glm::GlmFit fit = glm::fit_ols(y, x);
    REQUIRE(fit.betas(0) == Catch::Approx(1.1).margin(1e-12));
    REQUIRE(fit.betas(1) == Catch::Approx(1.1).margin(1e-12));
    REQUIRE(fit.rank == 2);
    REQUIRE(fit.dof == 2.0);
    REQUIRE(fit.rss == Catch::Approx(2.7).margin(1e-12));
    REQUIRE(fit.sigma2 == Catch::Approx(1.35).margin(1e-12));
    // (X'X)^-1 = [[0.7, -0.3], [-0.3, 0.2]]
    REQUIRE(fit.xtx_inv(0, 0) == Catch::Approx(0.7).margin(1e-12));
    REQUIRE(fit.xtx_inv(0, 1) == Catch::Approx(-0.3).margin(1e-12));
    REQUIRE(fit.xtx_inv(1, 1) == Catch::Approx(0.2).margin(1e-12));

    glm::Contrast slope;
    slope.weights = Eigen::VectorXd::Zero(2);
    slope.weights(1) = 1.0;
    const glm::ContrastStat s = glm::contrast_stat(fit, slope);
    REQUIRE(s.value == Catch::Approx(1.1).margin(1e-12));
    REQUIRE(s.se == Catch::Approx(std::sqrt(0.27)).margin(1e-12));
    REQUIRE(s.t == Catch::Approx(1.1 / std::sqrt(0.27)).margin(1e-12));
    REQUIRE_FALSE(s.degenerate);
}

TEST_CASE("OLS agrees with the independent oracle") {
    for (std::uint64_t inst = 0; inst < 30; ++inst) {
        const Eigen::Index nt = 24 + static_cast<Eigen::Index>(inst % 13);
        const Eigen::Index p = 3 + static_cast<Eigen::Index>(inst % 5);
        Eigen::MatrixXd x = random_matrix(nt, p, 100 + inst);
        x.col(p - 1).setOnes();
        const Eigen::VectorXd beta = random_matrix(p, 1, 200 + inst);
        auto rng = rng::stream(300 + inst, "noise", 0);
        Eigen::VectorXd y = x * beta;
        for (Eigen::Index t = 0; t < nt; ++t)
            y(t) += rng::gauss(rng);

        const glm::GlmFit fit = glm::fit_ols(y, x);
        const synth::oracle::OracleFit ref = synth::oracle::fit(y, x);
        REQUIRE(fit.rank == ref.rank);
        REQUIRE(fit.dof == Catch::Approx(ref.dof).margin(0.0));
        for (Eigen::Index j = 0; j < p; ++j)
            REQUIRE(fit.betas(j) ==
                    Catch::Approx(ref.betas(j)).margin(1e-10));
        REQUIRE(fit.sigma2 == Catch::Approx(ref.sigma2).margin(1e-10));
    }
}

TEST_CASE("rank-deficient designs fall back to the min-norm solution") {
    Eigen::MatrixXd x = random_matrix(20, 4, 7);
    x.col(3) = x.col(1); // exact collinearity
    const Eigen::VectorXd y = random_matrix(20, 1, 8);
    const glm::GlmFit fit = glm::fit_ols(y, x);
    REQUIRE(fit.rank == 3);
    REQUIRE(fit.dof == 17.0);
    const synth::oracle::OracleFit ref = synth::oracle::fit(y, x);
    for (Eigen::Index j = 0; j < 4; ++j)
        REQUIRE(fit.betas(j) == Catch::Approx(ref.betas(j)).margin(1e-8));
    // min-norm solution splits the shared coefficient evenly
    REQUIRE(fit.betas(1) == Catch::Approx(fit.betas(3)).margin(1e-8));
}

TEST_CASE("DofError when observations do not exceed rank") {
    const Eigen::MatrixXd x = random_matrix(4, 4, 9);
    const Eigen::VectorXd y = random_matrix(4, 1, 10);
    REQUIRE_THROWS_AS(glm::fit_ols(y, x), DofError);
    const Eigen::VectorXd bad = random_matrix(5, 1, 11);
    REQUIRE_THROWS_AS(glm::fit_ols(bad, x), DimsError);
}

TEST_CASE("AR(1) estimation") {
    SECTION("hand fixture: alternating residuals") {
        Eigen::VectorXd r(8);
        r << 1, -1, 1, -1, 1, -1, 1, -1;
        REQUIRE(glm::estimate_ar1(r) == Catch::Approx(-0.875).margin(1e-15));
    }
    SECTION("hand fixture: linear trend n=10") {
        Eigen::VectorXd r(10);
        for (int t = 0; t < 10; ++t)
            r(t) = t;
        REQUIRE(glm::estimate_ar1(r) == Catch::Approx(0.7).margin(1e-12));
    }
    SECTION("clamping at +-0.95") {
        Eigen::VectorXd trend(200);
        for (int t = 0; t < 200; ++t)
            trend(t) = t; // raw lag-1 autocorrelation 0.985
        REQUIRE(glm::estimate_ar1(trend) == 0.95);
        Eigen::VectorXd alt(200);
        for (int t = 0; t < 200; ++t)
            alt(t) = (t % 2 == 0) ? 1.0 : -1.0; // raw -0.995
        REQUIRE(glm::estimate_ar1(alt) == -0.95);
    }
    SECTION("degenerate inputs") {
        REQUIRE(glm::estimate_ar1(Eigen::VectorXd::Constant(20, 3.5)) == 0.0);
        REQUIRE_THROWS_AS(glm::estimate_ar1(Eigen::VectorXd::Zero(7)),
                          ValidationError);
    }
    SECTION("recovers a known AR(1) coefficient approximately") {
        auto rng = rng::stream(77, "ar", 0);
        const double rho = 0.5;
        Eigen::VectorXd e(4000);
        e(0) = rng::gauss(rng);
        for (int t = 1; t < 4000; ++t)
            e(t) = rho * e(t - 1) +
                   std::sqrt(1.0 - rho * rho) * rng::gauss(rng);
        REQUIRE(glm::estimate_ar1(e) == Catch::Approx(0.5).margin(0.05));
    }
}

TEST_CASE("whitening transform") {
    Eigen::VectorXd v(3);
    v << 1, 2, 3;
    const Eigen::VectorXd w = glm::whiten(v, 0.5);
    REQUIRE(w(0) == Catch::Approx(std::sqrt(0.75)).margin(1e-15));
    REQUIRE(w(1) == 1.5);
    REQUIRE(w(2) == 2.0);

    const Eigen::MatrixXd x = random_matrix(6, 3, 12);
    const Eigen::MatrixXd wx = glm::whiten_design(x, 0.3);
    for (Eigen::Index c = 0; c < 3; ++c) {
        REQUIRE(wx(0, c) ==
                Catch::Approx(std::sqrt(1.0 - 0.09) * x(0, c)).margin(1e-15));
        for (Eigen::Index t = 1; t < 6; ++t)
            REQUIRE(wx(t, c) ==
                    Catch::Approx(x(t, c) - 0.3 * x(t - 1, c))
                        .margin(1e-15));
    }
}

TEST_CASE("whitening with rho = 0 reproduces OLS bit for bit") {
    const Eigen::MatrixXd x = random_matrix(40, 5, 13);
    const Eigen::VectorXd y = random_matrix(40, 1, 14);
    const glm::GlmFit ols = glm::fit_ols(y, x);
    const glm::GlmFit white = glm::prewhiten_and_refit(y, x, 0.0);
    REQUIRE(white.rho == 0.0);
    for (Eigen::Index j = 0; j < 5; ++j)
        REQUIRE(white.betas(j) == ols.betas(j)); // exact
    REQUIRE(white.sigma2 == ols.sigma2);
    REQUIRE(white.rss == ols.rss);
}

TEST_CASE("Cochrane-Orcutt pass equals the manual sequence") {
    const Eigen::MatrixXd x = random_matrix(60, 4, 15);
    Eigen::VectorXd y = random_matrix(60, 1, 16);
    // inject autocorrelated noise so rho is nontrivial
    auto rng = rng::stream(17, "arnoise", 0);
    double e = rng::gauss(rng);
    for (Eigen::Index t = 0; t < 60; ++t) {
        e = 0.4 * e + rng::gauss(rng);
        y(t) += e;
    }
    const glm::GlmFit ols = glm::fit_ols(y, x);
    const double rho = glm::estimate_ar1(y - x * ols.betas);
    const glm::GlmFit manual = glm::prewhiten_and_refit(y, x, rho);
    const glm::GlmFit co = glm::fit_cochrane_orcutt(y, x);
    REQUIRE(co.rho == manual.rho);
    for (Eigen::Index j = 0; j < 4; ++j)
        REQUIRE(co.betas(j) == manual.betas(j));
    REQUIRE_THROWS_AS(glm::prewhiten_and_refit(y, x, 1.0), ValidationError);
}

TEST_CASE("positive-part split") {
    glm::GlmFit fit;
    fit.betas = Eigen::VectorXd::Zero(3);
    fit.sigma2 = 1.0;
    fit.xtx_inv = Eigen::MatrixXd::Identity(3, 3);

    glm::Contrast c;
    c.weights = Eigen::VectorXd::Zero(3);
    c.weights(0) = 1.0;

    SECTION("positive contrast keeps value and t") {
        fit.betas(0) = 2.0;
        const auto s = glm::contrast_stat(fit, c);
        const auto p = glm::positive_part(s);
        REQUIRE(p.contrast == 2.0);
        REQUIRE(p.t == Catch::Approx(2.0).margin(1e-12));
    }
    SECTION("negative contrast zeroes both") {
        fit.betas(0) = -2.0;
        const auto p = glm::positive_part(glm::contrast_stat(fit, c));
        REQUIRE(p.contrast == 0.0);
        REQUIRE(p.t == 0.0);
    }
    SECTION("zero contrast zeroes both") {
        const auto p = glm::positive_part(glm::contrast_stat(fit, c));
        REQUIRE(p.contrast == 0.0);
        REQUIRE(p.t == 0.0);
    }
    SECTION("zero SE with nonzero contrast flags degenerate") {
        fit.betas(0) = 2.0;
        fit.sigma2 = 0.0;
        const auto s = glm::contrast_stat(fit, c);
        REQUIRE(s.degenerate);
        REQUIRE(s.t == 0.0);
        const auto p = glm::positive_part(s);
        REQUIRE(p.contrast == 2.0);
        REQUIRE(p.t == 0.0);
    }
}

TEST_CASE("contrast helpers target the speech and silence columns") {
    const auto c1 = glm::speech_minus_silence(11);
    REQUIRE(c1.weights.size() == 11);
    REQUIRE(c1.weights(0) == 1.0);
    REQUIRE(c1.weights(1) == -1.0);
    REQUIRE(c1.weights.tail(9).isZero());
    const auto c2 = glm::silence_minus_speech(11);
    REQUIRE(c2.weights(0) == -1.0);
    REQUIRE(c2.weights(1) == 1.0);
    REQUIRE(c1.name == "speech_gt_silence");
    REQUIRE(c2.name == "silence_gt_speech");
}

TEST_CASE("subject t-maps") {
    const std::size_t nt = 135;
    const double tr = 1.0;
    const design::DesignMatrix dm = test_design(nt, tr, 21);
    const Dims4 d4{4, 3, 2, nt};
    Volume4D bold(d4, tr);
    auto rng = rng::stream(22, "bold", 0);

    // voxel 0: pure noise; voxel 1: speech > silence; voxel 2: silence >
    // speech; voxel 5: all zero (degenerate)
    for (std::size_t v = 0; v < d4.nvox(); ++v) {
        if (v == 5)
            continue;
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(
            static_cast<Eigen::Index>(dm.ncols()));
        beta(static_cast<Eigen::Index>(dm.intercept_col())) = 100.0;
        if (v == 1)
            beta(0) = 3.0;
        if (v == 2)
            beta(1) = 3.0;
        const Eigen::VectorXd clean = dm.values * beta;
        for (std::size_t t = 0; t < nt; ++t)
            bold.data[v + d4.nvox() * t] =
                clean(static_cast<Eigen::Index>(t)) + 0.5 * rng::gauss(rng);
    }

    const glm::TMapPair maps = glm::subject_tmaps(bold, dm);

    SECTION("planted directions show up on the matching map only") {
        REQUIRE(maps.t_speech_gt_silence.data[1] > 5.0);
        REQUIRE(maps.t_silence_gt_speech.data[1] == 0.0);
        REQUIRE(maps.t_silence_gt_speech.data[2] > 5.0);
        REQUIRE(maps.t_speech_gt_silence.data[2] == 0.0);
    }
    SECTION("per-voxel positive-part invariants hold everywhere") {
        for (std::size_t v = 0; v < d4.nvox(); ++v) {
            const double ts = maps.t_speech_gt_silence.data[v];
            const double tn = maps.t_silence_gt_speech.data[v];
            const double cs = maps.con_speech_gt_silence.data[v];
            const double cn = maps.con_silence_gt_speech.data[v];
            REQUIRE(ts >= 0.0);
            REQUIRE(tn >= 0.0);
            REQUIRE(cs >= 0.0);
            REQUIRE(cn >= 0.0);
            REQUIRE_FALSE((ts > 0.0 && tn > 0.0));
            REQUIRE_FALSE((cs > 0.0 && cn > 0.0));
        }
    }
    SECTION("summary bookkeeping") {
        REQUIRE(maps.summary.n_voxels == d4.nvox());
        REQUIRE(maps.summary.rank == dm.ncols());
        REQUIRE(maps.summary.dof ==
                static_cast<double>(nt) - static_cast<double>(dm.ncols()));
        REQUIRE(maps.summary.rho.size() == d4.nvox());
        REQUIRE(maps.summary.degenerate.size() == d4.nvox());
        REQUIRE(maps.summary.degenerate[5]);
        REQUIRE(maps.summary.n_degenerate >= 1);
        REQUIRE(maps.t_speech_gt_silence.data[5] == 0.0);
        REQUIRE(maps.t_silence_gt_speech.data[5] == 0.0);
    }
    SECTION("job count does not change the result") {
        const glm::TMapPair par = glm::subject_tmaps(bold, dm, 4);
        REQUIRE(par.t_speech_gt_silence.data ==
                maps.t_speech_gt_silence.data);
        REQUIRE(par.con_silence_gt_speech.data ==
                maps.con_silence_gt_speech.data);
        REQUIRE(par.summary.rho == maps.summary.rho);
    }
    SECTION("relabeling the conditions mirrors the maps") {
        design::DesignMatrix flipped = dm;
        flipped.values.col(0).swap(flipped.values.col(1));
        std::swap(flipped.column_names[0], flipped.column_names[1]);
        const glm::TMapPair m2 = glm::subject_tmaps(bold, flipped);
        for (std::size_t v = 0; v < d4.nvox(); ++v) {
            REQUIRE(m2.t_silence_gt_speech.data[v] ==
                    Catch::Approx(maps.t_speech_gt_silence.data[v])
                        .epsilon(1e-8)
                        .margin(1e-10));
            REQUIRE(m2.t_speech_gt_silence.data[v] ==
                    Catch::Approx(maps.t_silence_gt_speech.data[v])
                        .epsilon(1e-8)
                        .margin(1e-10));
        }
    }
    SECTION("input validation") {
        Volume4D short_bold({4, 3, 2, nt - 1}, tr);
        REQUIRE_THROWS_AS(glm::subject_tmaps(short_bold, dm), DimsError);
    }
}

TEST_CASE("whitened voxel pipeline matches the oracle end to end") {
    const std::size_t nt = 90;
    const design::DesignMatrix dm = test_design(nt, 1.0, 31);
    auto rng = rng::stream(32, "voxel", 0);
    for (int rep = 0; rep < 5; ++rep) {
        Eigen::VectorXd beta = Eigen::VectorXd::Zero(
            static_cast<Eigen::Index>(dm.ncols()));
        beta(0) = 0.8 * rep;
        beta(static_cast<Eigen::Index>(dm.intercept_col())) = 50.0;
        Eigen::VectorXd y = dm.values * beta;
        double e = rng::gauss(rng);
        for (std::size_t t = 0; t < nt; ++t) {
            e = 0.3 * e + rng::gauss(rng);
            y(static_cast<Eigen::Index>(t)) += e;
        }
        const synth::oracle::OracleVoxel ref =
            synth::oracle::voxel_pipeline(y, dm.values);
        const glm::GlmFit co = glm::fit_cochrane_orcutt(y, dm.values);
        REQUIRE(co.rho == Catch::Approx(ref.rho).margin(1e-10));
        const auto s1 = glm::contrast_stat(
            co, glm::speech_minus_silence(dm.ncols()));
        const auto p1 = glm::positive_part(s1);
        REQUIRE(p1.contrast == Catch::Approx(ref.con_speech).margin(1e-8));
        REQUIRE(p1.t == Catch::Approx(ref.t_speech).margin(1e-6));
    }
}
