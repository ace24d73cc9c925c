#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "neuroglm/design.hpp"
#include "neuroglm/errors.hpp"
#include "neuroglm/threading.hpp"
#include "neuroglm/volume.hpp"

// Per-voxel GLM estimation with a single Cochrane-Orcutt AR(1) pass, plus
// the positive-part contrast/t-map construction.

namespace neuroglm::glm {

/// Least-squares solver for one design matrix, shared across voxels.
/// Pseudoinverse semantics: singular values below 1e-10 * sigma_max count
/// as zero.
class DesignSolver {
public:
    explicit DesignSolver(const Eigen::MatrixXd& x, double rel_tol = 1e-10)
        : x_(x) {
        Eigen::JacobiSVD<Eigen::MatrixXd> svd(
            x, Eigen::ComputeThinU | Eigen::ComputeThinV);
        thin_u_ = svd.matrixU();
        v_ = svd.matrixV();
        const auto& sv = svd.singularValues();
        inv_sv_.resize(sv.size());
        const double thresh = sv.size() ? rel_tol * sv(0) : 0.0;
        rank_ = 0;
        for (Eigen::Index i = 0; i < sv.size(); ++i) {
            if (sv(i) > thresh) {
                inv_sv_(i) = 1.0 / sv(i);
                ++rank_;
            } else {
                inv_sv_(i) = 0.0;
            }
        }
    }

    std::size_t rank() const { return rank_; }
    std::size_t nt() const { return static_cast<std::size_t>(x_.rows()); }
    std::size_t ncols() const { return static_cast<std::size_t>(x_.cols()); }
    const Eigen::MatrixXd& x() const { return x_; }

    /// Minimum-norm least-squares solution.
    Eigen::VectorXd solve(const Eigen::VectorXd& y) const {
        return v_ * (inv_sv_.asDiagonal() * (thin_u_.transpose() * y));
    }

    /// Pseudoinverse of X'X.
    Eigen::MatrixXd xtx_pinv() const {
        return v_ * inv_sv_.array().square().matrix().asDiagonal() *
               v_.transpose();
    }

    /// c' (X'X)^+ c without forming the full matrix.
    double quad_form(const Eigen::VectorXd& c) const {
        return (inv_sv_.asDiagonal() * (v_.transpose() * c)).squaredNorm();
    }

private:
    Eigen::MatrixXd x_;
    Eigen::MatrixXd thin_u_, v_;
    Eigen::VectorXd inv_sv_;
    std::size_t rank_ = 0;
};

struct GlmFit {
    Eigen::VectorXd betas;
    double sigma2 = 0.0;
    double dof = 0.0; // nt - rank(X)
    double rho = 0.0; // AR(1) coefficient used for whitening
    Eigen::MatrixXd xtx_inv; // pseudoinverse of the (whitened) X'X
    double rss = 0.0;
    std::size_t rank = 0;
};

struct Contrast {
    Eigen::VectorXd weights;
    std::string name;
};

inline Contrast speech_minus_silence(std::size_t ncols) {
    Contrast c;
    c.weights = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(ncols));
    c.weights(0) = 1.0;
    c.weights(1) = -1.0;
    c.name = "speech_gt_silence";
    return c;
}

inline Contrast silence_minus_speech(std::size_t ncols) {
    Contrast c = speech_minus_silence(ncols);
    c.weights = -c.weights;
    c.name = "silence_gt_speech";
    return c;
}

namespace detail {

inline GlmFit fit_with_solver(const Eigen::VectorXd& y,
                              const DesignSolver& solver) {
    if (static_cast<std::size_t>(y.size()) != solver.nt())
        throw DimsError("fit_ols: y length != design rows");
    if (solver.nt() <= solver.rank())
        throw DofError("fit_ols: nt <= rank(X), no residual dof");
    GlmFit fit;
    fit.betas = solver.solve(y);
    fit.rank = solver.rank();
    fit.dof = static_cast<double>(solver.nt() - solver.rank());
    fit.rss = (y - solver.x() * fit.betas).squaredNorm();
    fit.sigma2 = fit.rss / fit.dof;
    fit.xtx_inv = solver.xtx_pinv();
    return fit;
}

} // namespace detail

/// Plain OLS via the thresholded pseudoinverse.
inline GlmFit fit_ols(const Eigen::VectorXd& y, const Eigen::MatrixXd& x) {
    DesignSolver solver(x);
    return detail::fit_with_solver(y, solver);
}

inline GlmFit fit_ols(const Eigen::VectorXd& y,
                      const design::DesignMatrix& dm) {
    return fit_ols(y, dm.values);
}

/// Lag-1 autocorrelation of the demeaned residuals, clamped to +-0.95.
inline double estimate_ar1(const Eigen::VectorXd& residuals) {
    const Eigen::Index nt = residuals.size();
    if (nt < 8)
        throw ValidationError("estimate_ar1: needs at least 8 samples");
    const double mean = residuals.mean();
    double num = 0.0, den = 0.0;
    double prev = residuals(0) - mean;
    den = prev * prev;
    for (Eigen::Index t = 1; t < nt; ++t) {
        const double cur = residuals(t) - mean;
        num += cur * prev;
        den += cur * cur;
        prev = cur;
    }
    if (den == 0.0)
        return 0.0;
    double rho = num / den;
    if (rho > 0.95)
        rho = 0.95;
    if (rho < -0.95)
        rho = -0.95;
    return rho;
}

/// AR(1) whitening transform: row 0 scaled by sqrt(1 - rho^2), row t
/// becomes v_t - rho * v_{t-1}. rho = 0 reproduces the input bit-for-bit.
inline Eigen::VectorXd whiten(const Eigen::VectorXd& v, double rho) {
    Eigen::VectorXd out(v.size());
    if (v.size() == 0)
        return out;
    out(0) = std::sqrt(1.0 - rho * rho) * v(0);
    for (Eigen::Index t = 1; t < v.size(); ++t)
        out(t) = v(t) - rho * v(t - 1);
    return out;
}

inline Eigen::MatrixXd whiten_design(const Eigen::MatrixXd& x, double rho) {
    Eigen::MatrixXd out(x.rows(), x.cols());
    if (x.rows() == 0)
        return out;
    const double s = std::sqrt(1.0 - rho * rho);
    out.row(0) = s * x.row(0);
    for (Eigen::Index t = 1; t < x.rows(); ++t)
        out.row(t) = x.row(t) - rho * x.row(t - 1);
    return out;
}

/// Whitens both sides with the given rho and refits by OLS.
inline GlmFit prewhiten_and_refit(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& x, double rho) {
    if (!(std::fabs(rho) < 1.0))
        throw ValidationError("prewhiten_and_refit: |rho| must be < 1");
    DesignSolver solver(whiten_design(x, rho));
    GlmFit fit = detail::fit_with_solver(whiten(y, rho), solver);
    fit.rho = rho;
    return fit;
}

/// One Cochrane-Orcutt pass: OLS, estimate rho from the residuals, whiten,
/// refit.
inline GlmFit fit_cochrane_orcutt(const Eigen::VectorXd& y,
                                  const Eigen::MatrixXd& x) {
    DesignSolver solver(x);
    const GlmFit ols = detail::fit_with_solver(y, solver);
    const double rho = estimate_ar1(y - x * ols.betas);
    return prewhiten_and_refit(y, x, rho);
}

// --------------------------------------------------------------- contrasts ---

struct ContrastStat {
    double value = 0.0; // c' beta, signed
    double se = 0.0;
    double t = 0.0; // signed; 0 when se = 0
    bool degenerate = false; // se = 0 with a nonzero contrast
};

inline ContrastStat contrast_stat(const GlmFit& fit, const Contrast& c) {
    if (c.weights.size() != fit.betas.size())
        throw DimsError("contrast_stat: weight length != number of betas");
    ContrastStat s;
    s.value = c.weights.dot(fit.betas);
    const double quad = c.weights.dot(fit.xtx_inv * c.weights);
    s.se = std::sqrt(std::max(0.0, fit.sigma2 * quad));
    if (s.se > 0.0) {
        s.t = s.value / s.se;
    } else {
        s.t = 0.0;
        s.degenerate = s.value != 0.0;
    }
    return s;
}

/// Positive-part outputs for one contrast direction: the clamped contrast
/// max(C, 0) and its t (0 wherever C <= 0).
struct PositivePart {
    double contrast = 0.0;
    double t = 0.0;
};

inline PositivePart positive_part(const ContrastStat& s) {
    PositivePart out;
    if (s.value > 0.0) {
        out.contrast = s.value;
        out.t = s.t;
    }
    return out;
}

// ----------------------------------------------------------- subject maps ---

struct GlmSummary {
    std::size_t n_voxels = 0;
    std::size_t rank = 0;
    double dof = 0.0;
    std::size_t n_degenerate = 0;
    std::vector<double> rho; // per voxel
    std::vector<std::uint8_t> degenerate; // per voxel
};

/// Per-subject positive-part maps for both contrast directions. At every
/// voxel at most one of the two t values is nonzero.
struct TMapPair {
    ScalarMap t_speech_gt_silence;
    ScalarMap t_silence_gt_speech;
    ScalarMap con_speech_gt_silence;
    ScalarMap con_silence_gt_speech;
    GlmSummary summary;
};

/// Full per-voxel pipeline: OLS -> AR(1) estimate -> whitened refit ->
/// positive-part contrasts. Voxels run in parallel; results are merged by
/// voxel index so the job count never changes the output.
inline TMapPair subject_tmaps(const Volume4D& bold,
                              const design::DesignMatrix& dm,
                              unsigned jobs = 1) {
    const std::size_t nt = bold.dims.nt;
    if (nt != dm.nt())
        throw DimsError("subject_tmaps: bold nt != design rows");
    if (nt < 8)
        throw ValidationError("subject_tmaps: needs at least 8 scans");
    const std::size_t nvox = bold.dims.nvox();
    const Dims3 sdims = bold.dims.spatial();

    TMapPair out;
    out.t_speech_gt_silence =
        ScalarMap(sdims, MapKind::tmap_speech_gt_silence);
    out.t_silence_gt_speech =
        ScalarMap(sdims, MapKind::tmap_silence_gt_speech);
    out.con_speech_gt_silence = ScalarMap(sdims, MapKind::contrast);
    out.con_silence_gt_speech = ScalarMap(sdims, MapKind::contrast);
    out.summary.n_voxels = nvox;
    out.summary.rho.assign(nvox, 0.0);
    out.summary.degenerate.assign(nvox, 0);

    const DesignSolver shared(dm.values);
    if (nt <= shared.rank())
        throw DofError("subject_tmaps: nt <= rank(X)");
    out.summary.rank = shared.rank();
    out.summary.dof = static_cast<double>(nt - shared.rank());

    const Contrast c1 = speech_minus_silence(dm.ncols());
    const std::size_t stride = nvox;

    parallel_for(nvox, jobs, [&](std::size_t v) {
        Eigen::VectorXd y(static_cast<Eigen::Index>(nt));
        bool all_zero = true;
        for (std::size_t t = 0; t < nt; ++t) {
            const double val = bold.data[v + stride * t];
            y(static_cast<Eigen::Index>(t)) = val;
            if (val != 0.0)
                all_zero = false;
        }
        if (all_zero) {
            out.summary.degenerate[v] = 1;
            return;
        }
        const Eigen::VectorXd beta0 = shared.solve(y);
        const double rho = estimate_ar1(y - shared.x() * beta0);
        out.summary.rho[v] = rho;

        double value, se;
        if (rho == 0.0) {
            const double rss = (y - shared.x() * beta0).squaredNorm();
            const double sigma2 = rss / out.summary.dof;
            value = c1.weights.dot(beta0);
            se = std::sqrt(
                std::max(0.0, sigma2 * shared.quad_form(c1.weights)));
        } else {
            const DesignSolver wsolver(whiten_design(dm.values, rho));
            const Eigen::VectorXd yw = whiten(y, rho);
            const Eigen::VectorXd betaw = wsolver.solve(yw);
            const double dof =
                static_cast<double>(nt - wsolver.rank());
            const double rss = (yw - wsolver.x() * betaw).squaredNorm();
            const double sigma2 = rss / dof;
            value = c1.weights.dot(betaw);
            se = std::sqrt(
                std::max(0.0, sigma2 * wsolver.quad_form(c1.weights)));
        }

        ContrastStat s1;
        s1.value = value;
        s1.se = se;
        if (se > 0.0) {
            s1.t = value / se;
        } else {
            s1.degenerate = value != 0.0;
        }
        ContrastStat s2 = s1;
        s2.value = -s1.value;
        s2.t = -s1.t;

        const PositivePart p1 = positive_part(s1);
        const PositivePart p2 = positive_part(s2);
        out.t_speech_gt_silence.data[v] = p1.t;
        out.con_speech_gt_silence.data[v] = p1.contrast;
        out.t_silence_gt_speech.data[v] = p2.t;
        out.con_silence_gt_speech.data[v] = p2.contrast;
        if (s1.degenerate)
            out.summary.degenerate[v] = 1;
    });

    for (std::uint8_t d : out.summary.degenerate)
        out.summary.n_degenerate += d;
    return out;
}

} // namespace neuroglm::glm
