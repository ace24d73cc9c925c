#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "neuroglm/errors.hpp"
#include "neuroglm/log.hpp"
#include "neuroglm/stats.hpp"

// Feature pipeline and classifiers: standardization, Pearson score filter,
// L1-penalized linear SVM selection, SMO-based SVC, Gaussian Naive Bayes.
// Labels are 0/1 throughout; class 1 is the positive class.

namespace neuroglm::ml {

using Labels = std::vector<int>;

inline void check_binary(const Labels& y) {
    bool has0 = false, has1 = false;
    for (int v : y) {
        if (v == 0)
            has0 = true;
        else if (v == 1)
            has1 = true;
        else
            throw ValidationError("labels must be 0 or 1");
    }
    if (!has0 || !has1)
        throw TrainingError("training labels contain a single class");
}

// ---------------------------------------------------------- feature matrix ---

enum class FeatureProvenance { tmap_speech, tmap_silence, demographic };

struct FeatureMatrix {
    Eigen::MatrixXd values; // subjects x features
    std::vector<std::string> col_names;
    std::vector<FeatureProvenance> col_provenance;
    // Voxel linear index for t-map columns; npos for demographics.
    std::vector<std::size_t> voxel_index;

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    std::size_t rows() const { return static_cast<std::size_t>(values.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(values.cols()); }

    void validate() const {
        const auto p = cols();
        if (col_names.size() != p || col_provenance.size() != p ||
            voxel_index.size() != p)
            throw DimsError("FeatureMatrix: metadata length != column count");
        if (!values.allFinite())
            throw ValidationError("FeatureMatrix: non-finite value");
        std::vector<std::string> names = col_names;
        std::sort(names.begin(), names.end());
        if (std::adjacent_find(names.begin(), names.end()) != names.end())
            throw ValidationError("FeatureMatrix: duplicate column name");
    }

    void append(const FeatureMatrix& other) {
        if (cols() == 0 && rows() == 0) {
            *this = other;
            return;
        }
        if (other.rows() != rows())
            throw DimsError("FeatureMatrix::append: row count mismatch");
        Eigen::MatrixXd merged(values.rows(), values.cols() + other.values.cols());
        merged << values, other.values;
        values = std::move(merged);
        col_names.insert(col_names.end(), other.col_names.begin(),
                         other.col_names.end());
        col_provenance.insert(col_provenance.end(),
                              other.col_provenance.begin(),
                              other.col_provenance.end());
        voxel_index.insert(voxel_index.end(), other.voxel_index.begin(),
                           other.voxel_index.end());
    }

    FeatureMatrix select_columns(const std::vector<std::size_t>& keep) const {
        FeatureMatrix out;
        out.values.resize(values.rows(),
                          static_cast<Eigen::Index>(keep.size()));
        for (std::size_t k = 0; k < keep.size(); ++k) {
            const std::size_t j = keep[k];
            if (j >= cols())
                throw IndexError("FeatureMatrix::select_columns: bad column");
            out.values.col(static_cast<Eigen::Index>(k)) =
                values.col(static_cast<Eigen::Index>(j));
            out.col_names.push_back(col_names[j]);
            out.col_provenance.push_back(col_provenance[j]);
            out.voxel_index.push_back(voxel_index[j]);
        }
        return out;
    }

    FeatureMatrix select_rows(const std::vector<std::size_t>& keep) const {
        FeatureMatrix out = *this;
        out.values.resize(static_cast<Eigen::Index>(keep.size()),
                          values.cols());
        for (std::size_t k = 0; k < keep.size(); ++k) {
            if (keep[k] >= rows())
                throw IndexError("FeatureMatrix::select_rows: bad row");
            out.values.row(static_cast<Eigen::Index>(k)) =
                values.row(static_cast<Eigen::Index>(keep[k]));
        }
        return out;
    }
};

// ----------------------------------------------------------- standardizer ---

struct Standardizer {
    Eigen::VectorXd mean;
    Eigen::VectorXd sd; // population sd; zeros replaced by 1
};

inline Standardizer standardizer_fit(const Eigen::MatrixXd& x_train) {
    if (x_train.rows() < 1)
        throw ValidationError("standardizer_fit: no rows");
    Standardizer s;
    s.mean = x_train.colwise().mean();
    const auto n = static_cast<double>(x_train.rows());
    s.sd.resize(x_train.cols());
    for (Eigen::Index j = 0; j < x_train.cols(); ++j) {
        const double var =
            (x_train.col(j).array() - s.mean(j)).square().sum() / n;
        const double sd = std::sqrt(var);
        s.sd(j) = sd == 0.0 ? 1.0 : sd;
    }
    return s;
}

inline Eigen::MatrixXd standardizer_apply(const Eigen::MatrixXd& x,
                                          const Standardizer& s) {
    if (x.cols() != s.mean.size())
        throw DimsError("standardizer_apply: column count mismatch");
    return (x.rowwise() - s.mean.transpose()).array().rowwise() /
           s.sd.transpose().array();
}

// ---------------------------------------------------------- pearson filter ---

struct PearsonFilterResult {
    std::vector<std::size_t> selected;
    std::vector<double> r; // per input column; 0 for degenerate columns
    std::vector<double> p; // 1 for degenerate columns
};

/// Keeps columns whose Pearson correlation with the scores has two-sided
/// p < alpha. Constant columns never pass.
inline PearsonFilterResult pearson_filter(const Eigen::MatrixXd& x,
                                          const std::vector<double>& scores,
                                          double alpha = 0.01) {
    const auto n = static_cast<std::size_t>(x.rows());
    if (scores.size() != n)
        throw DimsError("pearson_filter: score count != row count");
    if (n < 4)
        throw ValidationError("pearson_filter: needs at least 4 rows");
    PearsonFilterResult out;
    out.r.assign(static_cast<std::size_t>(x.cols()), 0.0);
    out.p.assign(static_cast<std::size_t>(x.cols()), 1.0);
    std::vector<double> col(n);
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
        for (std::size_t i = 0; i < n; ++i)
            col[i] = x(static_cast<Eigen::Index>(i), j);
        const auto pr = stats::pearson(col, scores);
        if (pr.degenerate)
            continue;
        out.r[static_cast<std::size_t>(j)] = pr.r;
        out.p[static_cast<std::size_t>(j)] = pr.p;
        if (pr.p < alpha)
            out.selected.push_back(static_cast<std::size_t>(j));
    }
    return out;
}

// ------------------------------------------------- L1 linear SVC selection ---

struct L1SvcModel {
    Eigen::VectorXd w;
    double bias = 0.0;
    std::size_t n_iter = 0;
    bool converged = true;
};

/// L1-regularized squared-hinge linear SVM,
///   min_w ||w||_1 + C * sum_i max(0, 1 - y_i x_i'w)^2,
/// solved by cyclic coordinate descent with a Newton step and Armijo
/// backtracking. The bias enters as an appended all-ones column and is
/// regularized like any other weight.
inline L1SvcModel l1svc_fit(const Eigen::MatrixXd& x, const Labels& y,
                            double c = 1.0, double tol = 1e-4,
                            std::size_t max_iter = 4000) {
    check_binary(y);
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw DimsError("l1svc_fit: label count != row count");
    const Eigen::Index p = x.cols() + 1; // appended bias column
    Eigen::MatrixXd xa(n, p);
    xa << x, Eigen::VectorXd::Ones(n);
    Eigen::VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ys(i) = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    Eigen::VectorXd w = Eigen::VectorXd::Zero(p);
    Eigen::VectorXd b = Eigen::VectorXd::Ones(n); // b_i = 1 - y_i x_i'w
    const double sigma = 0.01, beta = 0.5;

    auto loss = [&]() {
        double s = 0.0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (b(i) > 0.0)
                s += b(i) * b(i);
        return c * s;
    };
    auto subgrad_norm = [&]() {
        double g1 = 0.0;
        for (Eigen::Index j = 0; j < p; ++j) {
            double g = 0.0;
            for (Eigen::Index i = 0; i < n; ++i)
                if (b(i) > 0.0)
                    g -= 2.0 * c * b(i) * ys(i) * xa(i, j);
            double v;
            if (w(j) > 0.0)
                v = g + 1.0;
            else if (w(j) < 0.0)
                v = g - 1.0;
            else
                v = std::max(std::fabs(g) - 1.0, 0.0);
            g1 += std::fabs(v);
        }
        return g1;
    };

    const double g1_init = subgrad_norm();
    L1SvcModel model;
    if (g1_init == 0.0) {
        model.w = w.head(p - 1);
        model.bias = w(p - 1);
        return model;
    }
    std::size_t iter = 0;
    for (; iter < max_iter; ++iter) {
        for (Eigen::Index j = 0; j < p; ++j) {
            double g = 0.0, h = 0.0;
            for (Eigen::Index i = 0; i < n; ++i) {
                if (b(i) > 0.0) {
                    g -= 2.0 * c * b(i) * ys(i) * xa(i, j);
                    h += 2.0 * c * xa(i, j) * xa(i, j);
                }
            }
            h = std::max(h, 1e-12);
            double d;
            if (g + 1.0 <= h * w(j))
                d = -(g + 1.0) / h;
            else if (g - 1.0 >= h * w(j))
                d = -(g - 1.0) / h;
            else
                d = -w(j);
            if (d == 0.0)
                continue;
            const double delta_lin =
                g * d + std::fabs(w(j) + d) - std::fabs(w(j));
            const double loss_old = loss();
            double lambda = 1.0;
            for (int ls = 0; ls < 40; ++ls) {
                const double wj_new = w(j) + lambda * d;
                Eigen::VectorXd b_new =
                    b - lambda * d * (ys.array() * xa.col(j).array()).matrix();
                double loss_new = 0.0;
                for (Eigen::Index i = 0; i < n; ++i)
                    if (b_new(i) > 0.0)
                        loss_new += b_new(i) * b_new(i);
                loss_new *= c;
                const double penalty_delta =
                    std::fabs(wj_new) - std::fabs(w(j));
                if (loss_new - loss_old + penalty_delta <=
                    sigma * lambda * delta_lin) {
                    w(j) = wj_new;
                    b = std::move(b_new);
                    break;
                }
                lambda *= beta;
            }
        }
        if (subgrad_norm() <= tol * g1_init)
            break;
    }
    model.n_iter = iter + 1;
    if (iter == max_iter) {
        model.converged = false;
        log::warn("l1svc_fit: stopped at iteration cap");
    }
    model.w = w.head(p - 1);
    model.bias = w(p - 1);
    return model;
}

struct L1SelectResult {
    std::vector<std::size_t> selected;
    Eigen::VectorXd weights;
    bool fallback_used = false;
};

/// Keeps columns with |w| >= threshold from the L1 model. An empty result
/// falls back to the single column with the largest |r|; pass the Pearson
/// |r| values via abs_r, otherwise the column's own correlation with the
/// labels is used.
inline L1SelectResult l1svc_select(const Eigen::MatrixXd& x, const Labels& y,
                                   double c_sel = 1.0,
                                   double threshold = 1e-5,
                                   const std::vector<double>& abs_r = {}) {
    if (x.cols() == 0)
        throw ValidationError("l1svc_select: no columns to select from");
    const L1SvcModel model = l1svc_fit(x, y, c_sel);
    L1SelectResult out;
    out.weights = model.w;
    for (Eigen::Index j = 0; j < model.w.size(); ++j)
        if (std::fabs(model.w(j)) >= threshold)
            out.selected.push_back(static_cast<std::size_t>(j));
    if (!out.selected.empty())
        return out;
    out.fallback_used = true;
    std::size_t best = 0;
    double best_r = -1.0;
    if (!abs_r.empty()) {
        if (abs_r.size() != static_cast<std::size_t>(x.cols()))
            throw DimsError("l1svc_select: abs_r length != column count");
        for (std::size_t j = 0; j < abs_r.size(); ++j)
            if (std::fabs(abs_r[j]) > best_r) {
                best_r = std::fabs(abs_r[j]);
                best = j;
            }
    } else {
        std::vector<double> yv(y.size()), col(y.size());
        for (std::size_t i = 0; i < y.size(); ++i)
            yv[i] = y[i];
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            for (std::size_t i = 0; i < y.size(); ++i)
                col[i] = x(static_cast<Eigen::Index>(i), j);
            const auto pr = stats::pearson(col, yv);
            const double r = pr.degenerate ? 0.0 : std::fabs(pr.r);
            if (r > best_r) {
                best_r = r;
                best = static_cast<std::size_t>(j);
            }
        }
    }
    out.selected.push_back(best);
    return out;
}

// --------------------------------------------------------------- SVC (SMO) ---

enum class Kernel { linear, rbf };

struct SvcModel {
    Kernel kernel = Kernel::linear;
    double c = 1.0;
    double gamma = 0.0; // rbf only
    Eigen::MatrixXd support_x;
    Eigen::VectorXd alpha_y; // alpha_i * y_i for support vectors
    double bias = 0.0;
    Eigen::VectorXd w; // linear kernel only
    double dual_objective = 0.0;
    std::size_t n_iter = 0;
};

namespace detail {

inline double kernel_value(Kernel k, double gamma, const Eigen::VectorXd& a,
                           const Eigen::VectorXd& b) {
    if (k == Kernel::linear)
        return a.dot(b);
    return std::exp(-gamma * (a - b).squaredNorm());
}

} // namespace detail

/// sklearn-style default gamma for rbf: 1 / (n_features * var(X)), with
/// var the population variance over all matrix entries.
inline double rbf_gamma_scale(const Eigen::MatrixXd& x) {
    const double mean = x.mean();
    const double var =
        (x.array() - mean).square().sum() /
        static_cast<double>(x.rows() * x.cols());
    const double denom = static_cast<double>(x.cols()) * var;
    return denom > 0.0 ? 1.0 / denom : 1.0;
}

/// Soft-margin SVM dual solved by SMO with maximal-violating-pair working
/// set selection. Stops when the KKT violation m - M drops below tol.
inline SvcModel svc_fit(const Eigen::MatrixXd& x, const Labels& y,
                        double c = 1.0, Kernel kernel = Kernel::linear,
                        double gamma = 0.0, double tol = 1e-4) {
    check_binary(y);
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw DimsError("svc_fit: label count != row count");
    if (!(c > 0.0))
        throw ValidationError("svc_fit: C must be positive");
    if (kernel == Kernel::rbf && gamma == 0.0)
        gamma = rbf_gamma_scale(x);

    Eigen::VectorXd ys(n);
    for (Eigen::Index i = 0; i < n; ++i)
        ys(i) = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;

    Eigen::MatrixXd kmat(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j <= i; ++j) {
            const double v =
                detail::kernel_value(kernel, gamma, x.row(i).transpose(),
                                     x.row(j).transpose());
            kmat(i, j) = v;
            kmat(j, i) = v;
        }

    Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);
    const double tau = 1e-12;
    const std::size_t max_iter =
        std::max<std::size_t>(100000, 100 * static_cast<std::size_t>(n));

    auto in_up = [&](Eigen::Index t) {
        return (ys(t) > 0 && alpha(t) < c) || (ys(t) < 0 && alpha(t) > 0);
    };
    auto in_lo = [&](Eigen::Index t) {
        return (ys(t) > 0 && alpha(t) > 0) || (ys(t) < 0 && alpha(t) < c);
    };

    std::size_t iter = 0;
    double gap = std::numeric_limits<double>::infinity();
    for (; iter < max_iter; ++iter) {
        // second-order working-set selection: i is the worst violator, j
        // maximizes the guaranteed objective decrease. First-order pairs
        // zigzag on near-duplicate kernel columns and stall short of tol.
        Eigen::Index i = -1, j = -1;
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -ys(t) * grad(t);
            if (in_up(t) && v > m) {
                m = v;
                i = t;
            }
            if (in_lo(t) && v < big_m)
                big_m = v;
        }
        gap = m - big_m;
        if (gap < tol || i < 0)
            break;
        double best = 0.0;
        for (Eigen::Index t = 0; t < n; ++t) {
            if (!in_lo(t))
                continue;
            const double diff = m + ys(t) * grad(t); // m - (-y_t grad_t)
            if (diff <= 0.0)
                continue;
            double quad = kmat(i, i) + kmat(t, t) - 2.0 * kmat(i, t);
            if (quad <= 0.0)
                quad = tau;
            const double dec = diff * diff / quad;
            if (dec > best) {
                best = dec;
                j = t;
            }
        }
        if (j < 0)
            break;

        const double old_ai = alpha(i), old_aj = alpha(j);
        if (ys(i) != ys(j)) {
            double quad = kmat(i, i) + kmat(j, j) - 2.0 * kmat(i, j);
            if (quad <= 0.0)
                quad = tau;
            const double d = (-grad(i) - grad(j)) / quad;
            const double diff = alpha(i) - alpha(j);
            alpha(i) += d;
            alpha(j) += d;
            if (diff > 0.0) {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = diff;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = -diff;
                }
            }
            if (diff > 0.0) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = c - diff;
                }
            } else {
                if (alpha(j) > c) {
                    alpha(j) = c;
                    alpha(i) = c + diff;
                }
            }
        } else {
            double quad = kmat(i, i) + kmat(j, j) - 2.0 * kmat(i, j);
            if (quad <= 0.0)
                quad = tau;
            const double d = (grad(i) - grad(j)) / quad;
            const double sum = alpha(i) + alpha(j);
            alpha(i) -= d;
            alpha(j) += d;
            if (sum > c) {
                if (alpha(i) > c) {
                    alpha(i) = c;
                    alpha(j) = sum - c;
                }
            } else {
                if (alpha(j) < 0.0) {
                    alpha(j) = 0.0;
                    alpha(i) = sum;
                }
            }
            if (sum > c) {
                if (alpha(j) > c) {
                    alpha(j) = c;
                    alpha(i) = sum - c;
                }
            } else {
                if (alpha(i) < 0.0) {
                    alpha(i) = 0.0;
                    alpha(j) = sum;
                }
            }
        }
        const double dai = alpha(i) - old_ai;
        const double daj = alpha(j) - old_aj;
        for (Eigen::Index t = 0; t < n; ++t)
            grad(t) += ys(t) * ys(i) * kmat(t, i) * dai +
                       ys(t) * ys(j) * kmat(t, j) * daj;
    }
    if (iter == max_iter)
        throw ConvergenceError("svc_fit: SMO hit the iteration cap", gap);

    SvcModel model;
    model.kernel = kernel;
    model.c = c;
    model.gamma = gamma;
    model.n_iter = iter;
    model.dual_objective = 0.5 * alpha.dot(grad - Eigen::VectorXd::Ones(n));

    double bias_sum = 0.0;
    std::size_t n_free = 0;
    for (Eigen::Index t = 0; t < n; ++t) {
        if (alpha(t) > 0.0 && alpha(t) < c) {
            bias_sum += -ys(t) * grad(t);
            ++n_free;
        }
    }
    if (n_free > 0) {
        model.bias = bias_sum / static_cast<double>(n_free);
    } else {
        double m = -std::numeric_limits<double>::infinity();
        double big_m = std::numeric_limits<double>::infinity();
        for (Eigen::Index t = 0; t < n; ++t) {
            const double v = -ys(t) * grad(t);
            if (in_up(t))
                m = std::max(m, v);
            if (in_lo(t))
                big_m = std::min(big_m, v);
        }
        model.bias = (m + big_m) / 2.0;
    }

    std::vector<Eigen::Index> sv;
    for (Eigen::Index t = 0; t < n; ++t)
        if (alpha(t) > 0.0)
            sv.push_back(t);
    model.support_x.resize(static_cast<Eigen::Index>(sv.size()), x.cols());
    model.alpha_y.resize(static_cast<Eigen::Index>(sv.size()));
    for (std::size_t k = 0; k < sv.size(); ++k) {
        model.support_x.row(static_cast<Eigen::Index>(k)) = x.row(sv[k]);
        model.alpha_y(static_cast<Eigen::Index>(k)) =
            alpha(sv[k]) * ys(sv[k]);
    }
    if (kernel == Kernel::linear)
        model.w = model.support_x.transpose() * model.alpha_y;
    return model;
}

inline Eigen::VectorXd svc_decision(const SvcModel& model,
                                    const Eigen::MatrixXd& x) {
    Eigen::VectorXd out(x.rows());
    if (model.kernel == Kernel::linear) {
        if (x.cols() != model.w.size())
            throw DimsError("svc_decision: feature count mismatch");
        out = x * model.w;
        out.array() += model.bias;
        return out;
    }
    if (x.cols() != model.support_x.cols())
        throw DimsError("svc_decision: feature count mismatch");
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double s = model.bias;
        for (Eigen::Index k = 0; k < model.support_x.rows(); ++k)
            s += model.alpha_y(k) *
                 detail::kernel_value(model.kernel, model.gamma,
                                      model.support_x.row(k).transpose(),
                                      x.row(i).transpose());
        out(i) = s;
    }
    return out;
}

/// Training hinge loss sum_i max(0, 1 - y_i f(x_i)).
inline double svc_hinge_loss(const SvcModel& model, const Eigen::MatrixXd& x,
                             const Labels& y) {
    const Eigen::VectorXd f = svc_decision(model, x);
    double s = 0.0;
    for (Eigen::Index i = 0; i < f.size(); ++i) {
        const double ys = y[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
        s += std::max(0.0, 1.0 - ys * f(i));
    }
    return s;
}

// -------------------------------------------------------------------- GNB ---

struct GnbModel {
    double log_prior0 = 0.0, log_prior1 = 0.0;
    Eigen::VectorXd mean0, mean1;
    Eigen::VectorXd var0, var1; // population variances + smoothing
    double epsilon = 0.0; // smoothing actually added
};

inline GnbModel gnb_fit(const Eigen::MatrixXd& x, const Labels& y,
                        double var_smoothing = 1e-9) {
    check_binary(y);
    const auto n = x.rows();
    if (static_cast<std::size_t>(n) != y.size())
        throw DimsError("gnb_fit: label count != row count");
    const Eigen::Index p = x.cols();
    GnbModel m;
    m.mean0 = Eigen::VectorXd::Zero(p);
    m.mean1 = Eigen::VectorXd::Zero(p);
    m.var0 = Eigen::VectorXd::Zero(p);
    m.var1 = Eigen::VectorXd::Zero(p);
    std::size_t n0 = 0, n1 = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        if (y[static_cast<std::size_t>(i)] == 1) {
            m.mean1 += x.row(i).transpose();
            ++n1;
        } else {
            m.mean0 += x.row(i).transpose();
            ++n0;
        }
    }
    m.mean0 /= static_cast<double>(n0);
    m.mean1 /= static_cast<double>(n1);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::VectorXd xi = x.row(i).transpose();
        if (y[static_cast<std::size_t>(i)] == 1)
            m.var1 += (xi - m.mean1).array().square().matrix();
        else
            m.var0 += (xi - m.mean0).array().square().matrix();
    }
    m.var0 /= static_cast<double>(n0);
    m.var1 /= static_cast<double>(n1);

    // Smoothing scale: the largest per-feature variance over all rows.
    double max_var = 0.0;
    const Eigen::VectorXd allmean = x.colwise().mean();
    for (Eigen::Index j = 0; j < p; ++j) {
        const double v = (x.col(j).array() - allmean(j)).square().sum() /
                         static_cast<double>(n);
        max_var = std::max(max_var, v);
    }
    m.epsilon = var_smoothing * max_var;
    if (m.epsilon <= 0.0)
        m.epsilon = var_smoothing;
    m.var0.array() += m.epsilon;
    m.var1.array() += m.epsilon;

    m.log_prior0 = std::log(static_cast<double>(n0) / static_cast<double>(n));
    m.log_prior1 = std::log(static_cast<double>(n1) / static_cast<double>(n));
    return m;
}

/// Posterior probability of class 1 per row, normalized with log-sum-exp.
inline Eigen::VectorXd gnb_scores(const GnbModel& m, const Eigen::MatrixXd& x) {
    if (x.cols() != m.mean0.size())
        throw DimsError("gnb_scores: feature count mismatch");
    Eigen::VectorXd out(x.rows());
    constexpr double log2pi = 1.8378770664093453;
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double l0 = m.log_prior0, l1 = m.log_prior1;
        for (Eigen::Index j = 0; j < x.cols(); ++j) {
            const double v = x(i, j);
            const double d0 = v - m.mean0(j);
            const double d1 = v - m.mean1(j);
            l0 -= 0.5 * (log2pi + std::log(m.var0(j)) + d0 * d0 / m.var0(j));
            l1 -= 0.5 * (log2pi + std::log(m.var1(j)) + d1 * d1 / m.var1(j));
        }
        const double hi = std::max(l0, l1);
        const double lse = hi + std::log(std::exp(l0 - hi) + std::exp(l1 - hi));
        out(i) = std::exp(l1 - lse);
    }
    return out;
}

} // namespace neuroglm::ml
