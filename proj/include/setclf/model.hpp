// model.hpp - Gaussian class populations, discriminant coefficients, and the
// three set-level decision rules: the optimal weighted-vote rule, QDA applied
// to the set mean, and per-observation majority vote.

#ifndef SETCLF_MODEL_HPP
#define SETCLF_MODEL_HPP

#include <cmath>
#include <cstddef>
#include <vector>

#include "setclf/errors.hpp"
#include "setclf/linalg.hpp"

namespace setclf {

// One class's population: prior, mean, covariance, with the Cholesky factor,
// precision and log-determinant cached at construction.
class GaussianClassModel {
public:
    GaussianClassModel(double prior, Vector mean, Matrix covariance)
        : prior_(prior), mean_(std::move(mean)), covariance_(std::move(covariance)) {
        if (prior_ <= 0.0 || prior_ >= 1.0) {
            throw DimensionMismatchError("GaussianClassModel: prior must lie in (0,1)");
        }
        if (covariance_.rows() != mean_.size() || covariance_.cols() != mean_.size()) {
            throw DimensionMismatchError("GaussianClassModel: covariance/mean dimension mismatch");
        }
        chol_ = cholesky(covariance_);
        precision_ = chol_.inverse();
        log_det_ = chol_.log_det();
        // Cached precision must invert the covariance to 1e-8 in sup norm.
        const std::size_t p = mean_.size();
        Matrix prod = mat_mul(covariance_, precision_);
        for (std::size_t i = 0; i < p; ++i) prod(i, i) -= 1.0;
        if (max_abs(prod) > 1e-8) {
            throw NotPositiveDefiniteError(
                "GaussianClassModel: covariance too ill-conditioned to invert reliably");
        }
    }

    double prior() const { return prior_; }
    const Vector& mean() const { return mean_; }
    const Matrix& covariance() const { return covariance_; }
    const CholeskyFactor& chol() const { return chol_; }
    const Matrix& precision() const { return precision_; }
    double log_det() const { return log_det_; }
    std::size_t dimension() const { return mean_.size(); }

private:
    double prior_;
    Vector mean_;
    Matrix covariance_;
    CholeskyFactor chol_;
    Matrix precision_;
    double log_det_ = 0.0;
};

// The coefficient triple (beta0, beta, nabla) plus the prior log-ratio: the
// object every set classifier evaluates.
struct DiscriminantCoefficients {
    double prior_log_ratio = 0.0;  // log(pi_1 / pi_2)
    double constant = 0.0;         // beta_0
    Vector linear;                 // beta
    Matrix quadratic;              // nabla, symmetric

    std::size_t dimension() const { return linear.size(); }

    void validate() const {
        if (quadratic.rows() != linear.size() || quadratic.cols() != linear.size()) {
            throw DimensionMismatchError("DiscriminantCoefficients: dimension mismatch");
        }
        if (max_asymmetry(quadratic) > 1e-10) {
            throw DimensionMismatchError("DiscriminantCoefficients: quadratic not symmetric");
        }
        if (!std::isfinite(prior_log_ratio) || !std::isfinite(constant)) {
            throw DimensionMismatchError("DiscriminantCoefficients: non-finite entry");
        }
        for (double v : linear) {
            if (!std::isfinite(v)) throw DimensionMismatchError("DiscriminantCoefficients: non-finite entry");
        }
        for (double v : quadratic.data()) {
            if (!std::isfinite(v)) throw DimensionMismatchError("DiscriminantCoefficients: non-finite entry");
        }
    }
};

// A set of p-dimensional observations classified as a whole.
struct SetSample {
    std::vector<Vector> observations;

    std::size_t size() const { return observations.size(); }
    std::size_t dimension() const {
        return observations.empty() ? 0 : observations.front().size();
    }

    void validate() const {
        if (observations.empty()) throw EmptySetError("SetSample: empty set");
        const std::size_t p = observations.front().size();
        for (const auto& x : observations) {
            if (x.size() != p) throw DimensionMismatchError("SetSample: mixed dimensions");
        }
    }
};

struct LabeledSet {
    SetSample sample;
    int label = 0;  // 1 or 2

    void validate() const {
        sample.validate();
        if (label != 1 && label != 2) {
            throw DimensionMismatchError("LabeledSet: label must be 1 or 2");
        }
    }
};

// Population-optimal coefficients for a pair of Gaussian classes:
//   beta0 = {-log(|S1|/|S2|) - mu1' S1^-1 mu1 + mu2' S2^-1 mu2} / 2
//   beta  = S1^-1 mu1 - S2^-1 mu2
//   nabla = S2^-1 - S1^-1
inline DiscriminantCoefficients oracle_coefficients(const GaussianClassModel& class1,
                                                    const GaussianClassModel& class2) {
    const std::size_t p = class1.dimension();
    if (class2.dimension() != p) {
        throw DimensionMismatchError("oracle_coefficients: class dimensions differ");
    }
    const Vector b1 = mat_vec(class1.precision(), class1.mean());
    const Vector b2 = mat_vec(class2.precision(), class2.mean());

    DiscriminantCoefficients c;
    c.prior_log_ratio = std::log(class1.prior() / class2.prior());
    c.constant = 0.5 * (-(class1.log_det() - class2.log_det()) -
                        dot(class1.mean(), b1) + dot(class2.mean(), b2));
    c.linear.resize(p);
    for (std::size_t j = 0; j < p; ++j) c.linear[j] = b1[j] - b2[j];
    c.quadratic = Matrix(p, p);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            c.quadratic(i, j) = class2.precision()(i, j) - class1.precision()(i, j);
        }
    }
    return c;
}

// The set discriminant
//   g = log(pi1/pi2)/m + beta0 + beta' xbar + xbar' nabla xbar / 2
//       + trace(nabla S) / 2,
// evaluated on precomputed set statistics.
inline double discriminant_g(const DiscriminantCoefficients& coeffs, const SetStatistics& stats) {
    if (stats.mean.size() != coeffs.dimension()) {
        throw DimensionMismatchError("discriminant_g: dimension mismatch");
    }
    return coeffs.prior_log_ratio / static_cast<double>(stats.m) + coeffs.constant +
           dot(coeffs.linear, stats.mean) + 0.5 * quadratic_form(coeffs.quadratic, stats.mean) +
           0.5 * trace_product(coeffs.quadratic, stats.scatter);
}

// Optimal set rule: class 1 iff g > 0; a tie (g = 0) goes to class 2,
// matching the indicator convention.
inline int classify_bayes(const DiscriminantCoefficients& coeffs, const SetSample& set) {
    set.validate();
    return discriminant_g(coeffs, set_statistics(set.observations)) > 0.0 ? 1 : 2;
}

// QDA applied to the set mean as a single observation from N(mu_k, Sigma_k/m).
// Takes the population models (not coefficients): its constant term couples m
// with the log-determinant, so coefficients alone are insufficient.
inline int classify_mean_qda(const GaussianClassModel& class1, const GaussianClassModel& class2,
                             const SetSample& set) {
    set.validate();
    if (set.dimension() != class1.dimension() || class1.dimension() != class2.dimension()) {
        throw DimensionMismatchError("classify_mean_qda: dimension mismatch");
    }
    const DiscriminantCoefficients coeffs = oracle_coefficients(class1, class2);
    const SetStatistics stats = set_statistics(set.observations);
    const double m = static_cast<double>(stats.m);
    // beta0' replaces beta0: the log-determinant term is scaled by 1/m.
    const double beta0_prime =
        coeffs.constant + 0.5 * (1.0 - 1.0 / m) * (class1.log_det() - class2.log_det());
    const double g_qda = coeffs.prior_log_ratio / m + beta0_prime + dot(coeffs.linear, stats.mean) +
                         0.5 * quadratic_form(coeffs.quadratic, stats.mean);
    return g_qda > 0.0 ? 1 : 2;
}

// Per-observation QDA score; the full beta0 enters each vote so that the
// average of scores equals discriminant_g exactly.
inline double per_observation_score(const DiscriminantCoefficients& coeffs, const Vector& x,
                                    std::size_t m) {
    return coeffs.prior_log_ratio / static_cast<double>(m) + coeffs.constant +
           dot(coeffs.linear, x) + 0.5 * quadratic_form(coeffs.quadratic, x);
}

// Majority vote over per-observation QDA decisions: class 1 iff the mean of
// sign(score_j) is positive.
inline int classify_majority_vote(const DiscriminantCoefficients& coeffs, const SetSample& set) {
    set.validate();
    if (set.dimension() != coeffs.dimension()) {
        throw DimensionMismatchError("classify_majority_vote: dimension mismatch");
    }
    double vote = 0.0;
    for (const auto& x : set.observations) {
        const double s = per_observation_score(coeffs, x, set.size());
        vote += s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
    }
    return vote > 0.0 ? 1 : 2;
}

}  // namespace setclf

#endif  // SETCLF_MODEL_HPP
