// simulate.hpp - synthetic data generation for the three benchmark
// scenarios, Monte Carlo risk estimation, and the sweep/replicate experiment
// harness with fully seeded substreams.

#ifndef SETCLF_SIMULATE_HPP
#define SETCLF_SIMULATE_HPP

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "setclf/errors.hpp"
#include "setclf/estimators.hpp"
#include "setclf/linalg.hpp"
#include "setclf/model.hpp"
#include "setclf/random.hpp"

namespace setclf {

// Population layout for one synthetic scenario.
//   1: spiked precision difference - prec1 = (1+sqrt(p)) I, prec2 adds
//      `sparse_entry_count` random off-diagonal entries of size zeta.
//   2: identity covariances except a leading 5x5 equicorrelation block of
//      strength rho in class 1.
//   3: AR(1) Toeplitz covariance for class 1, its diagonal for class 2.
// In all scenarios mu1 = Sigma1 (u, u, 0, ..., 0)' and mu2 = 0, so the true
// linear coefficient is (u, u, 0, ..., 0)'. Priors are 1/2.
struct ScenarioConfig {
    int scenario = 1;
    std::size_t dimension = 0;             // p
    double covariance_signal = 0.0;        // zeta (scenario 1) or rho (2-3)
    double mean_signal = 0.0;              // u
    std::size_t sparse_entry_count = 10;   // scenario 1 only
    std::uint64_t structure_seed = 0;      // scenario-1 support draw

    void validate() const {
        if (scenario < 1 || scenario > 3) throw Error("ScenarioConfig: scenario must be 1, 2 or 3");
        if (dimension == 0) throw Error("ScenarioConfig: dimension must be positive");
        if (scenario == 1) {
            const std::size_t pairs = dimension * (dimension - 1) / 2;
            if (sparse_entry_count == 0 || sparse_entry_count > pairs) {
                throw Error("ScenarioConfig: sparse_entry_count out of range");
            }
        }
        if (scenario == 2 && dimension < 5) {
            throw Error("ScenarioConfig: scenario 2 needs dimension >= 5");
        }
        if (scenario == 3 && std::abs(covariance_signal) >= 1.0) {
            throw Error("ScenarioConfig: scenario 3 needs |rho| < 1");
        }
    }
};

// The random strictly-upper support of scenario 1's precision perturbation,
// drawn uniformly without replacement. Exposed so tests can compare an
// estimated support against the truth.
inline std::vector<std::pair<std::size_t, std::size_t>> scenario1_support_draw(
    std::size_t p, std::size_t count, Rng& rng) {
    std::set<std::pair<std::size_t, std::size_t>> chosen;
    const std::uint64_t pairs = static_cast<std::uint64_t>(p) * (p - 1) / 2;
    while (chosen.size() < count) {
        std::uint64_t r = rng.below(pairs);
        // Lexicographic rank -> (i, j) with i < j.
        std::size_t i = 0;
        std::uint64_t row_len = p - 1;
        while (r >= row_len) {
            r -= row_len;
            --row_len;
            ++i;
        }
        chosen.emplace(i, i + 1 + static_cast<std::size_t>(r));
    }
    return {chosen.begin(), chosen.end()};
}

struct ScenarioModels {
    GaussianClassModel class1;
    GaussianClassModel class2;
    // Strictly-upper support of the scenario-1 perturbation; empty otherwise.
    std::vector<std::pair<std::size_t, std::size_t>> precision_support;
};

inline ScenarioModels scenario_models(const ScenarioConfig& config) {
    config.validate();
    const std::size_t p = config.dimension;
    Vector mean_seed(p, 0.0);
    mean_seed[0] = config.mean_signal;
    if (p > 1) mean_seed[1] = config.mean_signal;

    if (config.scenario == 1) {
        const double diag = 1.0 + std::sqrt(static_cast<double>(p));
        Matrix prec1(p, p, 0.0);
        for (std::size_t i = 0; i < p; ++i) prec1(i, i) = diag;
        Rng rng(config.structure_seed);
        // Reject support draws that break positive definiteness; the
        // experiment must fail loudly rather than sample a non-distribution.
        for (int attempt = 0; attempt < 100; ++attempt) {
            auto support = scenario1_support_draw(p, config.sparse_entry_count, rng);
            Matrix prec2 = prec1;
            for (auto [i, j] : support) {
                prec2(i, j) = config.covariance_signal;
                prec2(j, i) = config.covariance_signal;
            }
            CholeskyFactor f2;
            try {
                f2 = cholesky(prec2);
            } catch (const NotPositiveDefiniteError&) {
                continue;
            }
            Matrix sigma1(p, p, 0.0);
            for (std::size_t i = 0; i < p; ++i) sigma1(i, i) = 1.0 / diag;
            const Matrix sigma2 = f2.inverse();
            Vector mu1 = mat_vec(sigma1, mean_seed);
            return ScenarioModels{GaussianClassModel(0.5, std::move(mu1), std::move(sigma1)),
                                  GaussianClassModel(0.5, Vector(p, 0.0), sigma2),
                                  std::move(support)};
        }
        throw NotPositiveDefiniteError(
            "scenario_models: no positive-definite support draw in 100 attempts");
    }

    if (config.scenario == 2) {
        const double rho = config.covariance_signal;
        Matrix sigma1 = Matrix::identity(p);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                if (i != j) sigma1(i, j) = rho;
            }
        }
        Vector mu1 = mat_vec(sigma1, mean_seed);
        return ScenarioModels{GaussianClassModel(0.5, std::move(mu1), std::move(sigma1)),
                              GaussianClassModel(0.5, Vector(p, 0.0), Matrix::identity(p)),
                              {}};
    }

    const double rho = config.covariance_signal;
    const double scale = 1.0 / (1.0 - rho * rho);
    Matrix sigma1(p, p, 0.0);
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = 0; j < p; ++j) {
            sigma1(i, j) = scale * std::pow(rho, static_cast<double>(i > j ? i - j : j - i));
        }
    }
    Matrix sigma2(p, p, 0.0);
    for (std::size_t i = 0; i < p; ++i) sigma2(i, i) = sigma1(i, i);
    Vector mu1 = mat_vec(sigma1, mean_seed);
    return ScenarioModels{GaussianClassModel(0.5, std::move(mu1), std::move(sigma1)),
                          GaussianClassModel(0.5, Vector(p, 0.0), std::move(sigma2)),
                          {}};
}

// m independent draws of mu + L z with z standard normal and L the cached
// Cholesky factor of the class covariance.
inline SetSample sample_set(const GaussianClassModel& model, std::size_t m, Rng& rng) {
    if (m == 0) throw EmptySetError("sample_set: set size must be >= 1");
    const std::size_t p = model.dimension();
    SetSample set;
    set.observations.reserve(m);
    Vector z(p);
    for (std::size_t obs = 0; obs < m; ++obs) {
        for (double& v : z) v = rng.normal();
        Vector x = model.mean();
        const Matrix& l = model.chol().lower;
        for (std::size_t i = 0; i < p; ++i) {
            const double* row = l.row_ptr(i);
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += row[j] * z[j];
            x[i] += acc;
        }
        set.observations.push_back(std::move(x));
    }
    return set;
}

struct SetSizeDistribution {
    enum class Kind { Fixed, UniformRange };
    Kind kind = Kind::Fixed;
    std::size_t fixed_m = 1;
    std::size_t low = 1, high = 1;

    static SetSizeDistribution fixed(std::size_t m) {
        SetSizeDistribution d;
        d.kind = Kind::Fixed;
        d.fixed_m = m;
        return d;
    }
    static SetSizeDistribution uniform_range(std::size_t low, std::size_t high) {
        SetSizeDistribution d;
        d.kind = Kind::UniformRange;
        d.low = low;
        d.high = high;
        return d;
    }

    void validate() const {
        if (kind == Kind::Fixed ? fixed_m < 1 : (low < 1 || high < low)) {
            throw Error("SetSizeDistribution: support must be bounded below by 1");
        }
    }

    std::size_t draw(Rng& rng) const {
        if (kind == Kind::Fixed) return fixed_m;
        return low + static_cast<std::size_t>(rng.below(high - low + 1));
    }

    double mean() const {
        return kind == Kind::Fixed ? static_cast<double>(fixed_m)
                                   : 0.5 * static_cast<double>(low + high);
    }
};

// N_per_class labeled sets per class; sizes are drawn from size_dist
// independently of the label.
inline std::vector<LabeledSet> generate_training(const GaussianClassModel& class1,
                                                 const GaussianClassModel& class2,
                                                 std::size_t n_per_class,
                                                 const SetSizeDistribution& size_dist, Rng& rng) {
    size_dist.validate();
    if (n_per_class == 0) throw Error("generate_training: N_per_class must be >= 1");
    std::vector<LabeledSet> sets;
    sets.reserve(2 * n_per_class);
    for (int label = 1; label <= 2; ++label) {
        const GaussianClassModel& model = label == 1 ? class1 : class2;
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t m = size_dist.draw(rng);
            sets.push_back(LabeledSet{sample_set(model, m, rng), label});
        }
    }
    return sets;
}

struct RiskEstimate {
    double risk = 0.0;
    double standard_error = 0.0;
};

// Misclassification frequency of `classifier` over `reps` labeled test sets
// drawn from the two-class mixture, with the binomial standard error.
inline RiskEstimate monte_carlo_risk(const std::function<int(const SetSample&)>& classifier,
                                     const GaussianClassModel& class1,
                                     const GaussianClassModel& class2,
                                     const SetSizeDistribution& size_dist, std::size_t reps,
                                     Rng& rng) {
    size_dist.validate();
    if (reps < 100) throw Error("monte_carlo_risk: at least 100 repetitions required");
    if (std::abs(class1.prior() + class2.prior() - 1.0) > 1e-8) {
        throw Error("monte_carlo_risk: class priors must sum to 1");
    }
    std::size_t wrong = 0;
    for (std::size_t r = 0; r < reps; ++r) {
        const int label = rng.uniform01() < class1.prior() ? 1 : 2;
        const std::size_t m = size_dist.draw(rng);
        const SetSample set = sample_set(label == 1 ? class1 : class2, m, rng);
        if (classifier(set) != label) ++wrong;
    }
    RiskEstimate est;
    est.risk = static_cast<double>(wrong) / static_cast<double>(reps);
    est.standard_error =
        std::sqrt(est.risk * (1.0 - est.risk) / static_cast<double>(reps));
    return est;
}

// -------------------------------------------------------------------------
// Experiment harness
// -------------------------------------------------------------------------

enum class Method {
    Clips,
    PluginDiagonal,
    PluginEnriched,
    QdaMajorityVote,
    OracleBayes,
    OracleMeanQda,
};

inline const char* method_name(Method m) {
    switch (m) {
        case Method::Clips: return "clips";
        case Method::PluginDiagonal: return "plugin-diag";
        case Method::PluginEnriched: return "plugin-enriched";
        case Method::QdaMajorityVote: return "qda-mv";
        case Method::OracleBayes: return "oracle-bayes";
        case Method::OracleMeanQda: return "oracle-mean-qda";
    }
    return "?";
}

inline bool method_from_name(const std::string& name, Method& out) {
    for (Method m : {Method::Clips, Method::PluginDiagonal, Method::PluginEnriched,
                     Method::QdaMajorityVote, Method::OracleBayes, Method::OracleMeanQda}) {
        if (name == method_name(m)) {
            out = m;
            return true;
        }
    }
    return false;
}

enum class SweepAxis { CovarianceSignal, MeanSignal, Dimension };

inline const char* sweep_axis_name(SweepAxis a) {
    switch (a) {
        case SweepAxis::CovarianceSignal: return "covariance_signal";
        case SweepAxis::MeanSignal: return "mean_signal";
        case SweepAxis::Dimension: return "dimension";
    }
    return "?";
}

// One sweep over a single scenario axis, replicated with derived substreams.
struct ExperimentConfig {
    ScenarioConfig scenario_config;
    SweepAxis sweep_axis = SweepAxis::CovarianceSignal;
    std::vector<double> sweep_values;
    std::size_t sets_per_class = 0;       // N (also the tuning-split size)
    SetSizeDistribution set_size;
    std::size_t replicate_count = 0;
    std::size_t test_sets_per_class = 50;
    std::uint64_t master_seed = 0;
    std::vector<Method> methods;
    double enrich_delta = 1.0;

    void validate() const {
        set_size.validate();
        if (sweep_values.empty()) throw Error("ExperimentConfig: sweep_values is empty");
        if (sweep_axis == SweepAxis::Dimension) {
            for (double v : sweep_values) {
                if (v < 1.0 || v != std::floor(v)) {
                    throw Error("ExperimentConfig: dimension sweep values must be positive integers");
                }
            }
        }
        for (double v : sweep_values) scenario_at(v).validate();
        if (sets_per_class == 0) throw Error("ExperimentConfig: sets_per_class must be >= 1");
        if (replicate_count == 0) throw Error("ExperimentConfig: replicate_count must be >= 1");
        if (test_sets_per_class == 0) {
            throw Error("ExperimentConfig: test_sets_per_class must be >= 1");
        }
        if (methods.empty()) throw Error("ExperimentConfig: methods is empty");
    }

    ScenarioConfig scenario_at(double swept) const {
        ScenarioConfig c = scenario_config;
        switch (sweep_axis) {
            case SweepAxis::CovarianceSignal: c.covariance_signal = swept; break;
            case SweepAxis::MeanSignal: c.mean_signal = swept; break;
            case SweepAxis::Dimension: c.dimension = static_cast<std::size_t>(swept); break;
        }
        return c;
    }
};

struct ResultRow {
    double swept_value = 0.0;
    Method method = Method::OracleBayes;
    double mean_test_error = 0.0;      // NaN when every replicate failed
    double standard_error = 0.0;
    std::size_t replicate_count = 0;   // successful replicates
};

struct ResultTable {
    std::vector<ResultRow> rows;

    // Header and formatting are part of the interface; output is
    // byte-deterministic for a given table.
    std::string to_csv() const {
        std::string out = "swept_value,method,mean_error,std_error,replicates\n";
        char buf[160];
        for (const auto& r : rows) {
            std::snprintf(buf, sizeof(buf), "%.10g,%s,%.10g,%.10g,%zu\n", r.swept_value,
                          method_name(r.method), r.mean_test_error, r.standard_error,
                          r.replicate_count);
            out += buf;
        }
        return out;
    }
};

// Per-sweep-value, per-replicate evaluation of every requested method on
// shared train/tune/test draws. Replicate substreams are derived by hashing
// (master_seed, sweep_index, replicate_index); a fitting failure records a
// missing value for that (method, replicate) and never aborts the sweep.
inline ResultTable run_experiment(const ExperimentConfig& config) {
    config.validate();
    ResultTable table;
    for (std::size_t si = 0; si < config.sweep_values.size(); ++si) {
        const double swept = config.sweep_values[si];
        const ScenarioModels models = scenario_models(config.scenario_at(swept));
        const DiscriminantCoefficients oracle = oracle_coefficients(models.class1, models.class2);

        std::vector<std::vector<double>> errors(config.methods.size());
        for (std::size_t rep = 0; rep < config.replicate_count; ++rep) {
            Rng rng(derive_seed(config.master_seed, si, rep));
            const auto training = generate_training(models.class1, models.class2,
                                                    config.sets_per_class, config.set_size, rng);
            const auto tuning = generate_training(models.class1, models.class2,
                                                  config.sets_per_class, config.set_size, rng);
            const auto test = generate_training(models.class1, models.class2,
                                                config.test_sets_per_class, config.set_size, rng);

            // CLIPS is fitted once per replicate and shared with qda-mv,
            // which reuses its coefficients under a majority vote.
            bool want_clips = false;
            for (Method m : config.methods) {
                want_clips |= m == Method::Clips || m == Method::QdaMajorityVote;
            }
            std::optional<FittedSetClassifier> clips_fit;
            if (want_clips) {
                try {
                    const auto grid = default_lambda_grid(training);
                    const auto tuned =
                        tune(training, tuning, grid, derive_seed(config.master_seed, si, rep) ^ 1);
                    clips_fit = fit_clips(training, tuned.hyperparameters);
                } catch (const Error&) {
                    clips_fit = std::nullopt;
                }
            }
            std::optional<PooledMoments> moments;
            auto lazy_moments = [&]() -> const PooledMoments& {
                if (!moments) moments = pooled_moments(training);
                return *moments;
            };

            auto test_error = [&](const std::function<int(const SetSample&)>& rule) {
                std::size_t wrong = 0;
                for (const auto& s : test) {
                    if (rule(s.sample) != s.label) ++wrong;
                }
                return static_cast<double>(wrong) / static_cast<double>(test.size());
            };

            for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
                try {
                    switch (config.methods[mi]) {
                        case Method::Clips: {
                            if (!clips_fit) throw Error("clips fit failed");
                            errors[mi].push_back(test_error(
                                [&](const SetSample& s) { return clips_fit->classify(s); }));
                            break;
                        }
                        case Method::QdaMajorityVote: {
                            if (!clips_fit) throw Error("clips fit failed");
                            const DiscriminantCoefficients& c = clips_fit->coefficients;
                            errors[mi].push_back(test_error([&](const SetSample& s) {
                                return classify_majority_vote(c, s);
                            }));
                            break;
                        }
                        case Method::PluginDiagonal: {
                            const auto fit =
                                plugin_classifier(lazy_moments(), PluginVariant::Diagonal);
                            errors[mi].push_back(test_error(
                                [&](const SetSample& s) { return fit.classify(s); }));
                            break;
                        }
                        case Method::PluginEnriched: {
                            const auto fit = plugin_classifier(
                                lazy_moments(), PluginVariant::Enriched, config.enrich_delta);
                            errors[mi].push_back(test_error(
                                [&](const SetSample& s) { return fit.classify(s); }));
                            break;
                        }
                        case Method::OracleBayes: {
                            errors[mi].push_back(test_error([&](const SetSample& s) {
                                return classify_bayes(oracle, s);
                            }));
                            break;
                        }
                        case Method::OracleMeanQda: {
                            errors[mi].push_back(test_error([&](const SetSample& s) {
                                return classify_mean_qda(models.class1, models.class2, s);
                            }));
                            break;
                        }
                    }
                } catch (const Error&) {
                    // missing value for this (method, replicate)
                }
            }
        }

        for (std::size_t mi = 0; mi < config.methods.size(); ++mi) {
            ResultRow row;
            row.swept_value = swept;
            row.method = config.methods[mi];
            row.replicate_count = errors[mi].size();
            if (errors[mi].empty()) {
                row.mean_test_error = std::numeric_limits<double>::quiet_NaN();
                row.standard_error = std::numeric_limits<double>::quiet_NaN();
            } else {
                double mean = 0.0;
                for (double e : errors[mi]) mean += e;
                mean /= static_cast<double>(errors[mi].size());
                double var = 0.0;
                for (double e : errors[mi]) var += (e - mean) * (e - mean);
                row.mean_test_error = mean;
                row.standard_error =
                    errors[mi].size() > 1
                        ? std::sqrt(var / (static_cast<double>(errors[mi].size()) *
                                           static_cast<double>(errors[mi].size() - 1)))
                        : 0.0;
            }
            table.rows.push_back(row);
        }
    }
    return table;
}

}  // namespace setclf

#endif  // SETCLF_SIMULATE_HPP
