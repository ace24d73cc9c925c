#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "neuroglm/errors.hpp"
#include "neuroglm/log.hpp"
#include "neuroglm/tables.hpp"

namespace neuroglm::design {

// ------------------------------------------------------------------- HRF ---

struct HrfParams {
    double peak_shape = 6.0;       // gamma shape of the main response
    double undershoot_shape = 16.0;
    double peak_rate = 1.0;        // gamma rate (per second)
    double undershoot_rate = 1.0;
    double undershoot_ratio = 6.0; // peak / undershoot amplitude ratio
    double duration_seconds = 32.0;
};

/// Sampled double-gamma impulse response, max-normalized to 1.
struct Hrf {
    double dt_seconds = 0.0;
    std::vector<double> samples; // at t = 0, dt, 2*dt, ...
    HrfParams params;
};

inline double gamma_pdf(double t, double shape, double rate) {
    if (t <= 0.0)
        return 0.0;
    return std::exp(shape * std::log(rate) + (shape - 1.0) * std::log(t) -
                    rate * t - std::lgamma(shape));
}

/// h(t) = g(t; a1, b1) - g(t; a2, b2) / r, sampled on [0, duration] and
/// scaled so max(h) = 1. The peak sits at (a1-1)/b1 = 5 s.
inline Hrf canonical_hrf(double dt_seconds, double duration_seconds = 32.0,
                         const HrfParams& params = {}) {
    if (!(dt_seconds > 0.0 && dt_seconds <= 0.5))
        throw ValidationError("canonical_hrf: dt must lie in (0, 0.5]");
    if (duration_seconds < 24.0)
        throw ValidationError("canonical_hrf: duration must be >= 24 s");
    Hrf hrf;
    hrf.dt_seconds = dt_seconds;
    hrf.params = params;
    hrf.params.duration_seconds = duration_seconds;
    const std::size_t n =
        static_cast<std::size_t>(std::floor(duration_seconds / dt_seconds)) +
        1;
    hrf.samples.resize(n);
    double peak = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        const double t = static_cast<double>(k) * dt_seconds;
        const double h =
            gamma_pdf(t, params.peak_shape, params.peak_rate) -
            gamma_pdf(t, params.undershoot_shape, params.undershoot_rate) /
                params.undershoot_ratio;
        hrf.samples[k] = h;
        peak = std::max(peak, h);
    }
    for (double& h : hrf.samples)
        h /= peak;
    return hrf;
}

// ------------------------------------------------------------ regressors ---

/// Condition boxcar convolved with the HRF on a microtime grid of
/// `microtime_bins` bins per scan, then sampled at the first bin of each
/// scan. The boxcar carries fractional bin coverage so values converge as
/// the grid refines. Event order does not matter; a condition absent from
/// the timeline yields the zero vector.
inline std::vector<double>
event_regressor(const io::EventTimeline& timeline, io::Condition condition,
                std::size_t nt, double tr_seconds, const Hrf& hrf,
                std::size_t microtime_bins = 16) {
    if (microtime_bins < 1)
        throw ValidationError("event_regressor: microtime_bins must be >= 1");
    if (!(tr_seconds > 0.0))
        throw ValidationError("event_regressor: tr must be positive");
    const double dt = tr_seconds / static_cast<double>(microtime_bins);
    if (std::fabs(hrf.dt_seconds - dt) > 1e-12 * tr_seconds)
        throw ValidationError(
            "event_regressor: hrf.dt must equal tr/microtime_bins");

    const std::size_t m = nt * microtime_bins;
    std::vector<double> box(m, 0.0);
    std::vector<io::Event> events = timeline.of(condition);
    std::sort(events.begin(), events.end(),
              [](const io::Event& a, const io::Event& b) {
                  return a.onset_seconds < b.onset_seconds;
              });
    for (const io::Event& e : events) {
        const double lo = e.onset_seconds;
        const double hi = e.onset_seconds + e.duration_seconds;
        const std::size_t g0 = static_cast<std::size_t>(
            std::max(0.0, std::floor(lo / dt)));
        for (std::size_t g = g0; g < m; ++g) {
            const double bin_lo = static_cast<double>(g) * dt;
            if (bin_lo >= hi)
                break;
            const double bin_hi = bin_lo + dt;
            const double overlap =
                std::min(hi, bin_hi) - std::max(lo, bin_lo);
            if (overlap > 0.0)
                box[g] += overlap / dt;
        }
    }

    // discrete approximation of (box * h)(t): sum h[k] box[g-k] dt
    const std::size_t nh = hrf.samples.size();
    std::vector<double> reg(nt, 0.0);
    for (std::size_t i = 0; i < nt; ++i) {
        const std::size_t g = i * microtime_bins;
        const std::size_t kmax = std::min(g + 1, nh);
        double acc = 0.0;
        for (std::size_t k = 0; k < kmax; ++k)
            acc += hrf.samples[k] * box[g - k];
        reg[i] = acc * dt;
    }
    return reg;
}

// ------------------------------------------------------------- DCT basis ---

/// Discrete cosine drift columns c_k(t) = cos(pi*k*(2t+1)/(2*nt)) for
/// k = 1..K with K = floor(2*nt*tr/cutoff + 1) - 1, each scaled to unit
/// norm. The constant k = 0 term is excluded (the intercept covers it).
inline Eigen::MatrixXd dct_highpass_basis(std::size_t nt, double tr_seconds,
                                          double cutoff_seconds) {
    if (!(cutoff_seconds > 2.0 * tr_seconds))
        throw ValidationError("dct_highpass_basis: cutoff must exceed 2*tr");
    const double total = 2.0 * static_cast<double>(nt) * tr_seconds;
    const long k_max =
        static_cast<long>(std::floor(total / cutoff_seconds + 1.0)) - 1;
    const std::size_t K = k_max > 0 ? static_cast<std::size_t>(k_max) : 0;
    if (K == 0)
        log::warn("dct_highpass_basis: cutoff " +
                  std::to_string(cutoff_seconds) +
                  " s yields an empty drift basis");
    Eigen::MatrixXd basis(static_cast<Eigen::Index>(nt),
                          static_cast<Eigen::Index>(K));
    const double pi = 3.14159265358979323846;
    const double norm = std::sqrt(2.0 / static_cast<double>(nt));
    for (std::size_t k = 1; k <= K; ++k)
        for (std::size_t t = 0; t < nt; ++t)
            basis(static_cast<Eigen::Index>(t),
                  static_cast<Eigen::Index>(k - 1)) =
                norm * std::cos(pi * static_cast<double>(k) *
                                (2.0 * static_cast<double>(t) + 1.0) /
                                (2.0 * static_cast<double>(nt)));
    return basis;
}

// ---------------------------------------------------------- design matrix ---

/// nt x P regressor matrix, columns [speech, silence, motion x 6,
/// drift x K, intercept].
struct DesignMatrix {
    Eigen::MatrixXd values;
    std::vector<std::string> column_names;
    std::size_t rank = 0;

    std::size_t nt() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t ncols() const {
        return static_cast<std::size_t>(values.cols());
    }
    std::size_t speech_col() const { return 0; }
    std::size_t silence_col() const { return 1; }
    std::size_t intercept_col() const { return ncols() - 1; }
    std::size_t n_drift() const { return ncols() - 9; } // P - 2 - 6 - 1
};

inline std::size_t matrix_rank(const Eigen::MatrixXd& m,
                               double rel_tol = 1e-10) {
    if (m.cols() == 0 || m.rows() == 0)
        return 0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    const auto& sv = svd.singularValues();
    const double thresh = rel_tol * sv(0);
    std::size_t r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > thresh)
            ++r;
    return r;
}

inline DesignMatrix assemble_design(const std::vector<double>& speech_reg,
                                    const std::vector<double>& silence_reg,
                                    const io::MotionRegressors& motion,
                                    const Eigen::MatrixXd& drift,
                                    std::size_t nt) {
    if (speech_reg.size() != nt || silence_reg.size() != nt ||
        static_cast<std::size_t>(motion.rows()) != nt ||
        static_cast<std::size_t>(drift.rows()) != nt)
        throw DimsError("assemble_design: all inputs must have nt rows");
    if (motion.cols() != 6)
        throw DimsError("assemble_design: motion must have 6 columns");
    const std::size_t K = static_cast<std::size_t>(drift.cols());
    const std::size_t P = 2 + 6 + K + 1;
    DesignMatrix dm;
    dm.values.resize(static_cast<Eigen::Index>(nt),
                     static_cast<Eigen::Index>(P));
    for (std::size_t t = 0; t < nt; ++t) {
        dm.values(static_cast<Eigen::Index>(t), 0) = speech_reg[t];
        dm.values(static_cast<Eigen::Index>(t), 1) = silence_reg[t];
    }
    dm.values.block(0, 2, static_cast<Eigen::Index>(nt), 6) = motion;
    if (K > 0)
        dm.values.block(0, 8, static_cast<Eigen::Index>(nt),
                        static_cast<Eigen::Index>(K)) = drift;
    dm.values.col(static_cast<Eigen::Index>(P - 1)).setOnes();
    dm.column_names = {"speech", "silence"};
    for (int m = 1; m <= 6; ++m)
        dm.column_names.push_back("motion_" + std::to_string(m));
    for (std::size_t k = 1; k <= K; ++k)
        dm.column_names.push_back("drift_" + std::to_string(k));
    dm.column_names.push_back("intercept");
    dm.rank = matrix_rank(dm.values);
    if (dm.rank < P)
        log::info("assemble_design: rank " + std::to_string(dm.rank) +
                  " < " + std::to_string(P) + " columns");
    return dm;
}

/// Full design for one subject from its timeline and motion table.
inline DesignMatrix build_design(const io::EventTimeline& timeline,
                                 const io::MotionRegressors& motion,
                                 std::size_t nt, double tr_seconds,
                                 double highpass_cutoff_s = 128.0,
                                 std::size_t microtime_bins = 16,
                                 double hrf_duration_s = 32.0) {
    const Hrf hrf = canonical_hrf(
        tr_seconds / static_cast<double>(microtime_bins), hrf_duration_s);
    const auto speech = event_regressor(timeline, io::Condition::speech, nt,
                                        tr_seconds, hrf, microtime_bins);
    const auto silence = event_regressor(timeline, io::Condition::silence,
                                         nt, tr_seconds, hrf,
                                         microtime_bins);
    const Eigen::MatrixXd drift =
        dct_highpass_basis(nt, tr_seconds, highpass_cutoff_s);
    return assemble_design(speech, silence, motion, drift, nt);
}

} // namespace neuroglm::design
