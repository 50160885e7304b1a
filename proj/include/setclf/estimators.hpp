// estimators.hpp - training procedures: pooled moment estimation, plug-in
// classifiers (full / diagonalized / enriched covariance), the CLIME
// precision estimator, the thresholded symmetrized precision difference, the
// direct l1 estimator of the linear coefficient, the scalar logistic fit of
// the constant, sample splitting, CLIPS assembly, and grid tuning.

#ifndef SETCLF_ESTIMATORS_HPP
#define SETCLF_ESTIMATORS_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "setclf/errors.hpp"
#include "setclf/linalg.hpp"
#include "setclf/lp.hpp"
#include "setclf/model.hpp"
#include "setclf/random.hpp"

namespace setclf {

// Class-wise maximum likelihood moments pooled across sets; set membership
// is ignored at the training stage.
struct ClassMoments {
    std::size_t set_count = 0;          // N_k
    std::size_t observation_count = 0;  // n_k
    double prior_estimate = 0.0;        // N_k / N
    Vector mean_estimate;
    Matrix covariance_estimate;         // divisor n_k
};

struct PooledMoments {
    std::array<ClassMoments, 2> per_class;  // index 0 = class 1, 1 = class 2

    std::size_t dimension() const { return per_class[0].mean_estimate.size(); }
    const ClassMoments& cls(int label) const { return per_class[label - 1]; }
};

inline PooledMoments pooled_moments(const std::vector<LabeledSet>& training) {
    PooledMoments m;
    std::size_t p = 0;
    for (const auto& set : training) {
        set.validate();
        if (p == 0) p = set.sample.dimension();
        if (set.sample.dimension() != p) {
            throw DimensionMismatchError("pooled_moments: sets of unequal dimension");
        }
        auto& c = m.per_class[set.label - 1];
        ++c.set_count;
        c.observation_count += set.sample.size();
    }
    if (m.per_class[0].set_count == 0 || m.per_class[1].set_count == 0) {
        throw MissingClassError("pooled_moments: both classes required in training data");
    }
    const double total_sets =
        static_cast<double>(m.per_class[0].set_count + m.per_class[1].set_count);
    for (auto& c : m.per_class) {
        c.prior_estimate = static_cast<double>(c.set_count) / total_sets;
        c.mean_estimate.assign(p, 0.0);
        c.covariance_estimate = Matrix(p, p, 0.0);
    }
    for (const auto& set : training) {
        auto& c = m.per_class[set.label - 1];
        for (const auto& x : set.sample.observations) {
            for (std::size_t j = 0; j < p; ++j) c.mean_estimate[j] += x[j];
        }
    }
    for (auto& c : m.per_class) {
        for (double& v : c.mean_estimate) v /= static_cast<double>(c.observation_count);
    }
    for (const auto& set : training) {
        auto& c = m.per_class[set.label - 1];
        for (const auto& x : set.sample.observations) {
            for (std::size_t i = 0; i < p; ++i) {
                const double di = x[i] - c.mean_estimate[i];
                double* row = c.covariance_estimate.row_ptr(i);
                for (std::size_t j = 0; j < p; ++j) row[j] += di * (x[j] - c.mean_estimate[j]);
            }
        }
    }
    for (auto& c : m.per_class) {
        for (double& v : c.covariance_estimate.data()) {
            v /= static_cast<double>(c.observation_count);
        }
    }
    return m;
}

enum class MethodTag { PluginFull, PluginDiagonal, PluginEnriched, Clips, QdaMajorityVote };

inline const char* method_tag_name(MethodTag tag) {
    switch (tag) {
        case MethodTag::PluginFull: return "plugin-full";
        case MethodTag::PluginDiagonal: return "plugin-diag";
        case MethodTag::PluginEnriched: return "plugin-enriched";
        case MethodTag::Clips: return "clips";
        case MethodTag::QdaMajorityVote: return "qda-mv";
    }
    return "?";
}

struct ClipsHyperparameters {
    double clime_lambda = 0.0;      // lambda_1
    double threshold_lambda = 0.0;  // lambda_1'
    double beta_lambda = 0.0;       // lambda_2
    std::optional<double> l1_cap;   // absent by default; the solution is unchanged
    std::uint64_t split_seed = 0;

    void validate() const {
        if (clime_lambda <= 0.0 || threshold_lambda <= 0.0 || beta_lambda <= 0.0) {
            throw Error("ClipsHyperparameters: all lambdas must be strictly positive");
        }
        if (l1_cap && *l1_cap <= 0.0) {
            throw Error("ClipsHyperparameters: l1_cap must be positive when present");
        }
    }
};

struct FittedSetClassifier {
    DiscriminantCoefficients coefficients;
    MethodTag method_tag = MethodTag::Clips;
    std::optional<ClipsHyperparameters> hyperparameters;
    double enrich_delta = 0.0;  // meaningful for PluginEnriched only

    int classify(const SetSample& set) const {
        if (method_tag == MethodTag::QdaMajorityVote) {
            return classify_majority_vote(coefficients, set);
        }
        return classify_bayes(coefficients, set);
    }

    // The decision statistic whose sign determines the label: the set
    // discriminant for weighted-vote methods, the mean vote for qda-mv.
    double decision_value(const SetSample& set) const {
        if (method_tag == MethodTag::QdaMajorityVote) {
            double vote = 0.0;
            for (const auto& x : set.observations) {
                const double s = per_observation_score(coefficients, x, set.size());
                vote += s > 0.0 ? 1.0 : (s < 0.0 ? -1.0 : 0.0);
            }
            return vote / static_cast<double>(set.size());
        }
        return discriminant_g(coefficients, set_statistics(set.observations));
    }
};

// -------------------------------------------------------------------------
// Plug-in classifiers
// -------------------------------------------------------------------------

enum class PluginVariant { Full, Diagonal, Enriched };

// Estimated Bayes rule with the pooled moments plugged in; the covariance is
// used as-is, diagonalized, or ridged by delta * I depending on the variant.
inline FittedSetClassifier plugin_classifier(const PooledMoments& moments, PluginVariant variant,
                                             double enrich_delta = 1.0) {
    const std::size_t p = moments.dimension();
    std::array<Matrix, 2> sigma;
    for (int k = 0; k < 2; ++k) {
        const Matrix& s = moments.per_class[k].covariance_estimate;
        switch (variant) {
            case PluginVariant::Full:
                sigma[k] = s;
                break;
            case PluginVariant::Diagonal: {
                sigma[k] = Matrix(p, p, 0.0);
                for (std::size_t i = 0; i < p; ++i) {
                    if (s(i, i) <= 0.0) {
                        throw NotPositiveDefiniteError(
                            "plugin_classifier: nonpositive variance on the diagonal");
                    }
                    sigma[k](i, i) = s(i, i);
                }
                break;
            }
            case PluginVariant::Enriched: {
                if (enrich_delta <= 0.0) {
                    throw Error("plugin_classifier: enrich delta must be positive");
                }
                sigma[k] = s;
                for (std::size_t i = 0; i < p; ++i) sigma[k](i, i) += enrich_delta;
                break;
            }
        }
    }
    const GaussianClassModel m1(moments.per_class[0].prior_estimate,
                                moments.per_class[0].mean_estimate, sigma[0]);
    const GaussianClassModel m2(moments.per_class[1].prior_estimate,
                                moments.per_class[1].mean_estimate, sigma[1]);
    FittedSetClassifier fit;
    fit.coefficients = oracle_coefficients(m1, m2);
    fit.method_tag = variant == PluginVariant::Full       ? MethodTag::PluginFull
                     : variant == PluginVariant::Diagonal ? MethodTag::PluginDiagonal
                                                          : MethodTag::PluginEnriched;
    if (variant == PluginVariant::Enriched) fit.enrich_delta = enrich_delta;
    return fit;
}

// -------------------------------------------------------------------------
// CLIME
// -------------------------------------------------------------------------

// Column j of the result minimizes ||omega||_1 subject to
// ||Sigma omega - e_j||_inf <= lambda1, cast as a linear program over the
// split omega = u - v with u, v >= 0 and 2p inequality rows. Columns are
// independent problems and are solved in index order.
inline Matrix clime(const Matrix& covariance_estimate, double lambda1) {
    if (lambda1 <= 0.0) throw Error("clime: lambda1 must be strictly positive");
    const std::size_t p = covariance_estimate.rows();
    if (covariance_estimate.cols() != p || p == 0) {
        throw DimensionMismatchError("clime: covariance must be square");
    }

    LpProblem lp;
    lp.objective.assign(2 * p, 1.0);
    lp.variable_lower_bounds.assign(2 * p, 0.0);
    lp.constraint_matrix = Matrix(2 * p, 2 * p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            const double s = covariance_estimate(i, j);
            lp.constraint_matrix(i, j) = s;
            lp.constraint_matrix(i, p + j) = -s;
            lp.constraint_matrix(p + i, j) = -s;
            lp.constraint_matrix(p + i, p + j) = s;
        }
    }
    lp.constraint_rhs.assign(2 * p, lambda1);

    Matrix omega(p, p, 0.0);
    for (std::size_t col = 0; col < p; ++col) {
        lp.constraint_rhs[col] += 1.0;      // lambda1 + e_j
        lp.constraint_rhs[p + col] -= 1.0;  // lambda1 - e_j
        const LpSolution sol = solve(lp);
        lp.constraint_rhs[col] -= 1.0;
        lp.constraint_rhs[p + col] += 1.0;
        if (sol.status == LpStatus::Infeasible) {
            throw InfeasibleColumnError(
                col, "clime: column " + std::to_string(col) + " infeasible at lambda1=" +
                         std::to_string(lambda1));
        }
        if (sol.status != LpStatus::Optimal) {
            throw Error("clime: unexpected unbounded column " + std::to_string(col));
        }
        for (std::size_t i = 0; i < p; ++i) {
            omega(i, col) = sol.solution[i] - sol.solution[p + i];
        }
    }
    return omega;
}

// -------------------------------------------------------------------------
// Thresholded symmetrized precision difference
// -------------------------------------------------------------------------

// Entrywise hard threshold of Omega2 - Omega1 at threshold_lambda, then a
// symmetrization keeping the smaller-magnitude member of each (ij, ji) pair.
// Every surviving entry exceeds threshold_lambda in magnitude by
// construction.
inline Matrix threshold_difference(const Matrix& omega1, const Matrix& omega2,
                                   double threshold_lambda) {
    if (threshold_lambda <= 0.0) {
        throw Error("threshold_difference: threshold must be strictly positive");
    }
    const std::size_t p = omega1.rows();
    if (omega1.cols() != p || omega2.rows() != p || omega2.cols() != p) {
        throw DimensionMismatchError("threshold_difference: dimension mismatch");
    }
    auto thresholded = [&](std::size_t i, std::size_t j) {
        const double d = omega2(i, j) - omega1(i, j);
        return std::abs(d) > threshold_lambda ? d : 0.0;
    };
    Matrix nabla(p, p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        nabla(i, i) = thresholded(i, i);
        for (std::size_t j = i + 1; j < p; ++j) {
            const double upper = thresholded(i, j);
            const double lower = thresholded(j, i);
            const double v = std::abs(upper) <= std::abs(lower) ? upper : lower;
            nabla(i, j) = v;
            nabla(j, i) = v;
        }
    }
    return nabla;
}

// -------------------------------------------------------------------------
// Direct estimation of the linear coefficient
// -------------------------------------------------------------------------

struct DirectBetaFit {
    Vector beta;    // theta1 - theta2
    Vector theta1;
    Vector theta2;
};

// Minimizes ||theta1 - theta2||_1 subject to
// ||Sigma_k theta_k - mu_k||_inf <= beta_lambda for k = 1, 2. Variables are
// the positive/negative parts of each theta plus elementwise slack t bounding
// |theta1 - theta2|. The l1 cap rows are added only when a cap is supplied.
inline DirectBetaFit direct_beta_fit(const PooledMoments& moments, double beta_lambda,
                                     std::optional<double> l1_cap = std::nullopt) {
    if (beta_lambda <= 0.0) throw Error("direct_beta: beta_lambda must be strictly positive");
    const std::size_t p = moments.dimension();
    const std::size_t n = 5 * p;                    // a, b, c, d, t blocks
    const std::size_t k = 6 * p + (l1_cap ? 2 : 0);

    LpProblem lp;
    lp.objective.assign(n, 0.0);
    for (std::size_t j = 0; j < p; ++j) lp.objective[4 * p + j] = 1.0;
    lp.variable_lower_bounds.assign(n, 0.0);
    lp.constraint_matrix = Matrix(k, n, 0.0);
    lp.constraint_rhs.assign(k, 0.0);

    for (int cls = 0; cls < 2; ++cls) {
        const Matrix& sigma = moments.per_class[cls].covariance_estimate;
        const Vector& mu = moments.per_class[cls].mean_estimate;
        const std::size_t row0 = 2 * p * cls;       // + rows, then - rows
        const std::size_t colp = 2 * p * cls;       // positive part block
        const std::size_t coln = colp + p;          // negative part block
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) {
                const double s = sigma(i, j);
                lp.constraint_matrix(row0 + i, colp + j) = s;
                lp.constraint_matrix(row0 + i, coln + j) = -s;
                lp.constraint_matrix(row0 + p + i, colp + j) = -s;
                lp.constraint_matrix(row0 + p + i, coln + j) = s;
            }
            lp.constraint_rhs[row0 + i] = mu[i] + beta_lambda;
            lp.constraint_rhs[row0 + p + i] = -mu[i] + beta_lambda;
        }
    }
    // t >= +-(theta1 - theta2), i.e. (a-b) - (c-d) - t <= 0 and its negation.
    for (std::size_t i = 0; i < p; ++i) {
        const std::size_t rp = 4 * p + i;
        const std::size_t rm = 5 * p + i;
        lp.constraint_matrix(rp, i) = 1.0;
        lp.constraint_matrix(rp, p + i) = -1.0;
        lp.constraint_matrix(rp, 2 * p + i) = -1.0;
        lp.constraint_matrix(rp, 3 * p + i) = 1.0;
        lp.constraint_matrix(rp, 4 * p + i) = -1.0;
        lp.constraint_matrix(rm, i) = -1.0;
        lp.constraint_matrix(rm, p + i) = 1.0;
        lp.constraint_matrix(rm, 2 * p + i) = 1.0;
        lp.constraint_matrix(rm, 3 * p + i) = -1.0;
        lp.constraint_matrix(rm, 4 * p + i) = -1.0;
    }
    if (l1_cap) {
        for (std::size_t j = 0; j < 2 * p; ++j) lp.constraint_matrix(6 * p, j) = 1.0;
        for (std::size_t j = 2 * p; j < 4 * p; ++j) lp.constraint_matrix(6 * p + 1, j) = 1.0;
        lp.constraint_rhs[6 * p] = *l1_cap;
        lp.constraint_rhs[6 * p + 1] = *l1_cap;
    }

    const LpSolution sol = solve(lp);
    if (sol.status == LpStatus::Infeasible) {
        throw InfeasibleError("direct_beta: infeasible at beta_lambda=" +
                              std::to_string(beta_lambda));
    }
    if (sol.status != LpStatus::Optimal) {
        throw Error("direct_beta: unexpected unbounded program");
    }
    DirectBetaFit fit;
    fit.theta1.resize(p);
    fit.theta2.resize(p);
    fit.beta.resize(p);
    for (std::size_t i = 0; i < p; ++i) {
        fit.theta1[i] = sol.solution[i] - sol.solution[p + i];
        fit.theta2[i] = sol.solution[2 * p + i] - sol.solution[3 * p + i];
        fit.beta[i] = fit.theta1[i] - fit.theta2[i];
    }
    return fit;
}

inline Vector direct_beta(const PooledMoments& moments, double beta_lambda,
                          std::optional<double> l1_cap = std::nullopt) {
    return direct_beta_fit(moments, beta_lambda, l1_cap).beta;
}

// -------------------------------------------------------------------------
// Constant coefficient via a one-dimensional logistic fit
// -------------------------------------------------------------------------

// The scalar negative log-likelihood with per-set offset
//   log(pi1/pi2) + M_i (xbar_i' beta + xbar_i' nabla xbar_i / 2
//                       + trace(nabla S_i) / 2)
// and slope M_i on the unknown theta0. Exposed as a small object so tests
// can probe the objective and its derivatives directly.
class Beta0Problem {
public:
    struct Term {
        double slope = 0.0;   // M_i
        double offset = 0.0;  // c_i, so the logit is slope * (theta0 + offset)
        bool is_class1 = false;
    };

    explicit Beta0Problem(std::vector<Term> terms) : terms_(std::move(terms)) {}

    double value(double theta0) const {
        double acc = 0.0;
        for (const auto& t : terms_) {
            const double eta = t.slope * (theta0 + t.offset);
            acc += softplus(eta) - (t.is_class1 ? eta : 0.0);
        }
        return acc / static_cast<double>(terms_.size());
    }

    double derivative(double theta0) const {
        double acc = 0.0;
        for (const auto& t : terms_) {
            const double eta = t.slope * (theta0 + t.offset);
            acc += t.slope * (logistic(eta) - (t.is_class1 ? 1.0 : 0.0));
        }
        return acc / static_cast<double>(terms_.size());
    }

    double second_derivative(double theta0) const {
        double acc = 0.0;
        for (const auto& t : terms_) {
            const double eta = t.slope * (theta0 + t.offset);
            const double s = logistic(eta);
            acc += t.slope * t.slope * s * (1.0 - s);
        }
        return acc / static_cast<double>(terms_.size());
    }

    static double logistic(double eta) {
        if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
        const double e = std::exp(eta);
        return e / (1.0 + e);
    }

    static double softplus(double eta) {
        if (eta > 35.0) return eta;
        return std::log1p(std::exp(eta));
    }

private:
    std::vector<Term> terms_;
};

inline Beta0Problem make_beta0_problem(const std::vector<LabeledSet>& batch, const Vector& beta,
                                       const Matrix& nabla,
                                       std::pair<double, double> prior_estimates) {
    if (batch.empty()) throw MissingClassError("fit_beta0: empty batch");
    if (max_asymmetry(nabla) > 1e-10) {
        throw DimensionMismatchError("fit_beta0: nabla must be symmetric");
    }
    const double prior_log_ratio = std::log(prior_estimates.first / prior_estimates.second);
    bool seen[2] = {false, false};
    std::vector<Beta0Problem::Term> terms;
    terms.reserve(batch.size());
    for (const auto& set : batch) {
        set.validate();
        seen[set.label - 1] = true;
        const SetStatistics stats = set_statistics(set.sample.observations);
        Beta0Problem::Term t;
        t.slope = static_cast<double>(stats.m);
        t.offset = prior_log_ratio / t.slope + dot(beta, stats.mean) +
                   0.5 * quadratic_form(nabla, stats.mean) +
                   0.5 * trace_product(nabla, stats.scatter);
        t.is_class1 = set.label == 1;
        terms.push_back(t);
    }
    if (!seen[0] || !seen[1]) {
        throw MissingClassError("fit_beta0: batch must contain both classes");
    }
    return Beta0Problem(std::move(terms));
}

// Unique minimizer of the convex scalar likelihood: safeguarded Newton with
// bisection fallback, started at 0, gradient tolerance 1e-10. A bracket that
// cannot be closed within |theta0| <= 50 indicates separation and raises
// NoConvergenceError.
inline double fit_beta0(const std::vector<LabeledSet>& batch, const Vector& beta,
                        const Matrix& nabla, std::pair<double, double> prior_estimates) {
    const Beta0Problem problem = make_beta0_problem(batch, beta, nabla, prior_estimates);
    constexpr double kGradTol = 1e-10;
    constexpr double kBracketLimit = 50.0;
    constexpr int kMaxIterations = 100;

    const double g0 = problem.derivative(0.0);
    if (std::abs(g0) <= kGradTol) return 0.0;

    // Expand a sign-changing bracket for the monotone gradient. No sign
    // change within |theta0| <= 50 signals separation.
    double lo = 0.0, hi = 0.0;
    for (double step = 1.0;; step *= 2.0) {
        const double cand = g0 > 0.0 ? -std::min(step, kBracketLimit)
                                     : std::min(step, kBracketLimit);
        const double gc = problem.derivative(cand);
        if (g0 > 0.0 ? gc < 0.0 : gc > 0.0) {
            lo = std::min(0.0, cand);
            hi = std::max(0.0, cand);
            break;
        }
        if (std::abs(cand) >= kBracketLimit) {
            throw NoConvergenceError(
                "fit_beta0: gradient does not change sign within |theta0| <= 50 "
                "(separated batch)");
        }
    }

    double theta = 0.0;
    for (int it = 0; it < kMaxIterations; ++it) {
        const double g = problem.derivative(theta);
        if (std::abs(g) <= kGradTol) return theta;
        (g > 0.0 ? hi : lo) = theta;
        const double h = problem.second_derivative(theta);
        double next = h > 1e-14 ? theta - g / h : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);  // Newton left the bracket
        if (next == theta) break;                               // bracket exhausted in doubles
        theta = next;
    }
    throw NoConvergenceError("fit_beta0: no convergence within 100 iterations");
}

// -------------------------------------------------------------------------
// CLIPS: sample splitting, assembly, and tuning
// -------------------------------------------------------------------------

namespace clips_detail {

struct Split {
    std::vector<LabeledSet> batch1;  // moments, clime, direct beta
    std::vector<LabeledSet> batch2;  // scalar logistic fit
    std::pair<double, double> priors;  // from the full training data
};

// Random half of each class's sets, floor(N_k / 2), drawn with split_seed;
// the remainder estimates the constant. Priors come from the full data.
inline Split make_split(const std::vector<LabeledSet>& training, std::uint64_t split_seed) {
    std::array<std::vector<std::size_t>, 2> by_class;
    for (std::size_t i = 0; i < training.size(); ++i) {
        training[i].validate();
        by_class[training[i].label - 1].push_back(i);
    }
    if (by_class[0].size() < 2 || by_class[1].size() < 2) {
        throw MissingClassError("fit_clips: at least two sets per class required");
    }
    Split split;
    split.priors = {
        static_cast<double>(by_class[0].size()) / static_cast<double>(training.size()),
        static_cast<double>(by_class[1].size()) / static_cast<double>(training.size())};
    for (int k = 0; k < 2; ++k) {
        Rng rng(derive_seed(split_seed, static_cast<std::uint64_t>(k + 1)));
        auto idx = by_class[k];
        rng.shuffle(idx);
        const std::size_t half = idx.size() / 2;
        // Deterministic order within each batch: sort the drawn indices.
        std::sort(idx.begin(), idx.begin() + half);
        std::sort(idx.begin() + half, idx.end());
        for (std::size_t i = 0; i < idx.size(); ++i) {
            (i < half ? split.batch1 : split.batch2).push_back(training[idx[i]]);
        }
    }
    return split;
}

}  // namespace clips_detail

// Full CLIPS fit: priors from all sets, (nabla, beta) from batch 1 via
// CLIME + thresholding and the direct l1 program, the constant from batch 2
// via the scalar logistic fit.
inline FittedSetClassifier fit_clips(const std::vector<LabeledSet>& training,
                                     const ClipsHyperparameters& hyper) {
    hyper.validate();
    const clips_detail::Split split = clips_detail::make_split(training, hyper.split_seed);
    const PooledMoments moments = pooled_moments(split.batch1);
    const Matrix omega1 = clime(moments.per_class[0].covariance_estimate, hyper.clime_lambda);
    const Matrix omega2 = clime(moments.per_class[1].covariance_estimate, hyper.clime_lambda);
    const Matrix nabla = threshold_difference(omega1, omega2, hyper.threshold_lambda);
    const Vector beta = direct_beta(moments, hyper.beta_lambda, hyper.l1_cap);
    const double beta0 = fit_beta0(split.batch2, beta, nabla, split.priors);

    FittedSetClassifier fit;
    fit.method_tag = MethodTag::Clips;
    fit.hyperparameters = hyper;
    fit.coefficients.prior_log_ratio = std::log(split.priors.first / split.priors.second);
    fit.coefficients.constant = beta0;
    fit.coefficients.linear = beta;
    fit.coefficients.quadratic = nabla;
    fit.coefficients.validate();
    return fit;
}

inline double misclassification_rate(const FittedSetClassifier& fit,
                                     const std::vector<LabeledSet>& sets) {
    if (sets.empty()) throw EmptySetError("misclassification_rate: no sets");
    std::size_t wrong = 0;
    for (const auto& s : sets) {
        if (fit.classify(s.sample) != s.label) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(sets.size());
}

struct LambdaGrid {
    std::vector<double> clime_lambdas;
    std::vector<double> threshold_lambdas;
    std::vector<double> beta_lambdas;
};

// Logarithmic grid of 7 points spanning x[0.1, 10] around the rate
// sqrt(log p / (N m0)), where N counts training sets and m0 is the mean set
// size. This is where the signal/noise boundary sits for sparse estimation.
inline std::vector<double> default_lambda_values(std::size_t p, std::size_t total_sets,
                                                 double mean_set_size) {
    const double center =
        std::sqrt(std::log(static_cast<double>(std::max<std::size_t>(p, 2))) /
                  (static_cast<double>(total_sets) * mean_set_size));
    std::vector<double> values;
    for (int i = -3; i <= 3; ++i) {
        values.push_back(center * std::pow(10.0, static_cast<double>(i) / 3.0));
    }
    return values;
}

inline LambdaGrid default_lambda_grid(std::size_t p, std::size_t total_sets,
                                      double mean_set_size) {
    const auto values = default_lambda_values(p, total_sets, mean_set_size);
    return LambdaGrid{values, values, values};
}

inline LambdaGrid default_lambda_grid(const std::vector<LabeledSet>& training) {
    std::size_t obs = 0;
    std::size_t p = 0;
    for (const auto& s : training) {
        obs += s.sample.size();
        p = s.sample.dimension();
    }
    const double mean_size = static_cast<double>(obs) / static_cast<double>(training.size());
    return default_lambda_grid(p, training.size(), mean_size);
}

struct TuneResult {
    ClipsHyperparameters hyperparameters;
    double validation_error = 1.0;
};

// Exhaustive grid search minimizing validation misclassification. The split
// and batch-1 moments do not depend on the lambdas, CLIME depends only on
// clime_lambda and the beta program only on beta_lambda, so those pieces are
// computed once per grid value; the result is identical to running fit_clips
// per cell with the same split_seed. Cells whose estimation fails (an
// infeasible CLIME column, an infeasible beta program, a separated logistic
// fit) score error 1.0 instead of aborting the search. Ties go to larger
// lambdas, i.e. sparser models.
inline TuneResult tune(const std::vector<LabeledSet>& training,
                       const std::vector<LabeledSet>& validation, const LambdaGrid& grid,
                       std::uint64_t split_seed = 0,
                       std::optional<double> l1_cap = std::nullopt) {
    if (grid.clime_lambdas.empty() || grid.threshold_lambdas.empty() ||
        grid.beta_lambdas.empty()) {
        throw Error("tune: empty lambda grid");
    }
    if (validation.empty()) throw MissingClassError("tune: empty validation split");
    {
        bool seen[2] = {false, false};
        for (const auto& s : validation) seen[s.label - 1] = true;
        if (!seen[0] || !seen[1]) {
            throw MissingClassError("tune: validation split must contain both classes");
        }
    }

    const clips_detail::Split split = clips_detail::make_split(training, split_seed);
    const PooledMoments moments = pooled_moments(split.batch1);
    const double prior_log_ratio = std::log(split.priors.first / split.priors.second);

    auto sorted = [](std::vector<double> v) {
        std::sort(v.begin(), v.end());
        return v;
    };
    const auto clime_lambdas = sorted(grid.clime_lambdas);
    const auto threshold_lambdas = sorted(grid.threshold_lambdas);
    const auto beta_lambdas = sorted(grid.beta_lambdas);

    std::vector<std::optional<std::pair<Matrix, Matrix>>> omegas(clime_lambdas.size());
    for (std::size_t a = 0; a < clime_lambdas.size(); ++a) {
        try {
            Matrix o1 = clime(moments.per_class[0].covariance_estimate, clime_lambdas[a]);
            Matrix o2 = clime(moments.per_class[1].covariance_estimate, clime_lambdas[a]);
            omegas[a] = std::make_pair(std::move(o1), std::move(o2));
        } catch (const InfeasibleError&) {
            omegas[a] = std::nullopt;
        }
    }
    std::vector<std::optional<Vector>> betas(beta_lambdas.size());
    for (std::size_t c = 0; c < beta_lambdas.size(); ++c) {
        try {
            betas[c] = direct_beta(moments, beta_lambdas[c], l1_cap);
        } catch (const InfeasibleError&) {
            betas[c] = std::nullopt;
        }
    }

    TuneResult best;
    bool have_best = false;
    // Ascending iteration with replace-on-ties drives the winner toward the
    // largest lambdas on the optimal plateau.
    for (std::size_t a = 0; a < clime_lambdas.size(); ++a) {
        for (std::size_t b = 0; b < threshold_lambdas.size(); ++b) {
            std::optional<Matrix> nabla;
            if (omegas[a]) {
                nabla = threshold_difference(omegas[a]->first, omegas[a]->second,
                                             threshold_lambdas[b]);
            }
            for (std::size_t c = 0; c < beta_lambdas.size(); ++c) {
                double error = 1.0;
                if (nabla && betas[c]) {
                    try {
                        FittedSetClassifier fit;
                        fit.method_tag = MethodTag::Clips;
                        fit.coefficients.prior_log_ratio = prior_log_ratio;
                        fit.coefficients.linear = *betas[c];
                        fit.coefficients.quadratic = *nabla;
                        fit.coefficients.constant =
                            fit_beta0(split.batch2, *betas[c], *nabla, split.priors);
                        error = misclassification_rate(fit, validation);
                    } catch (const NoConvergenceError&) {
                        error = 1.0;
                    }
                }
                if (!have_best || error <= best.validation_error) {
                    have_best = true;
                    best.validation_error = error;
                    best.hyperparameters.clime_lambda = clime_lambdas[a];
                    best.hyperparameters.threshold_lambda = threshold_lambdas[b];
                    best.hyperparameters.beta_lambda = beta_lambdas[c];
                    best.hyperparameters.l1_cap = l1_cap;
                    best.hyperparameters.split_seed = split_seed;
                }
            }
        }
    }
    return best;
}

}  // namespace setclf

#endif  // SETCLF_ESTIMATORS_HPP
