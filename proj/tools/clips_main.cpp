// clips - command-line harness for covariance-engaged set classification:
// training (plug-in and CLIPS estimators), prediction, Monte Carlo risk
// tables for the oracle rules, and experiment sweeps emitting CSV.
//
// Exit codes: 0 success, 2 input error, 3 numerical/estimation failure.

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "setclf/setclf.hpp"

namespace {

constexpr int kExitInput = 2;
constexpr int kExitEstimation = 3;

struct StageFailure {
    int code;
    std::string message;
};

[[noreturn]] void fail(int code, const std::string& message) {
    throw StageFailure{code, message};
}

int classify_exit_code(const setclf::Error& e) {
    if (dynamic_cast<const setclf::NotPositiveDefiniteError*>(&e) ||
        dynamic_cast<const setclf::InfeasibleError*>(&e) ||
        dynamic_cast<const setclf::NoConvergenceError*>(&e) ||
        dynamic_cast<const setclf::IterationLimitError*>(&e)) {
        return kExitEstimation;
    }
    return kExitInput;
}

std::size_t count_nonzero(const setclf::Vector& v) {
    std::size_t n = 0;
    for (double x : v) {
        if (x != 0.0) ++n;
    }
    return n;
}

std::size_t count_nonzero(const setclf::Matrix& m) {
    std::size_t n = 0;
    for (double x : m.data()) {
        if (x != 0.0) ++n;
    }
    return n;
}

struct TrainArgs {
    std::string data_path;
    std::string method;
    std::string out_path;
    std::optional<double> clime_lambda, threshold_lambda, beta_lambda;
    std::optional<double> l1_cap;
    std::optional<double> tune_split;
    double enrich_delta = 1.0;
    std::optional<std::uint64_t> seed;
    std::uint64_t split_seed = 0;
};

int run_train(const TrainArgs& args) {
    setclf::Dataset data;
    std::vector<setclf::LabeledSet> sets;
    try {
        data = setclf::read_set_data(args.data_path);
        sets = data.labeled();
        bool seen[2] = {false, false};
        for (const auto& s : sets) seen[s.label - 1] = true;
        if (!seen[0] || !seen[1]) {
            fail(kExitInput, "train: data file must contain both classes");
        }
    } catch (const setclf::Error& e) {
        fail(kExitInput, std::string("train: ") + e.what());
    }

    setclf::FittedSetClassifier fit;
    if (args.method == "plugin-full" || args.method == "plugin-diag" ||
        args.method == "plugin-enriched") {
        const auto variant = args.method == "plugin-full" ? setclf::PluginVariant::Full
                             : args.method == "plugin-diag"
                                 ? setclf::PluginVariant::Diagonal
                                 : setclf::PluginVariant::Enriched;
        try {
            const auto moments = setclf::pooled_moments(sets);
            fit = setclf::plugin_classifier(moments, variant, args.enrich_delta);
        } catch (const setclf::Error& e) {
            fail(classify_exit_code(e),
                 std::string("train: estimation failed during plug-in fit: ") + e.what());
        }
    } else {  // clips or qda-mv
        setclf::ClipsHyperparameters hyper;
        hyper.split_seed = args.split_seed;
        hyper.l1_cap = args.l1_cap;
        const bool explicit_lambdas =
            args.clime_lambda && args.threshold_lambda && args.beta_lambda;
        if (explicit_lambdas) {
            hyper.clime_lambda = *args.clime_lambda;
            hyper.threshold_lambda = *args.threshold_lambda;
            hyper.beta_lambda = *args.beta_lambda;
        } else if (args.clime_lambda || args.threshold_lambda || args.beta_lambda) {
            fail(kExitInput,
                 "train: give all of --clime-lambda/--threshold-lambda/--beta-lambda or none");
        } else {
            if (!args.tune_split || !args.seed) {
                fail(kExitInput,
                     "train: without explicit lambdas, --tune-split and --seed are required");
            }
            const double frac = *args.tune_split;
            if (frac <= 0.0 || frac >= 1.0) {
                fail(kExitInput, "train: --tune-split must lie strictly between 0 and 1");
            }
            // Hold out a seeded fraction of each class's sets for validation.
            std::vector<setclf::LabeledSet> tr, val;
            for (int k = 0; k < 2; ++k) {
                std::vector<std::size_t> idx;
                for (std::size_t i = 0; i < sets.size(); ++i) {
                    if (sets[i].label == k + 1) idx.push_back(i);
                }
                setclf::Rng rng(setclf::derive_seed(*args.seed, static_cast<std::uint64_t>(k)));
                rng.shuffle(idx);
                std::size_t v = static_cast<std::size_t>(frac * static_cast<double>(idx.size()));
                v = std::max<std::size_t>(v, 1);
                if (idx.size() < v + 2) {
                    fail(kExitInput,
                         "train: too few sets in class " + std::to_string(k + 1) +
                             " for --tune-split " + std::to_string(frac));
                }
                for (std::size_t i = 0; i < idx.size(); ++i) {
                    (i < v ? val : tr).push_back(sets[idx[i]]);
                }
            }
            try {
                const auto grid = setclf::default_lambda_grid(tr);
                const auto tuned = setclf::tune(tr, val, grid, args.split_seed, args.l1_cap);
                hyper = tuned.hyperparameters;
            } catch (const setclf::Error& e) {
                fail(classify_exit_code(e),
                     std::string("train: estimation failed during tuning: ") + e.what());
            }
        }
        try {
            fit = setclf::fit_clips(sets, hyper);
        } catch (const setclf::Error& e) {
            fail(classify_exit_code(e),
                 std::string("train: estimation failed during clips fit: ") + e.what());
        }
        if (args.method == "qda-mv") fit.method_tag = setclf::MethodTag::QdaMajorityVote;
    }

    try {
        setclf::save_model(args.out_path, fit);
    } catch (const setclf::Error& e) {
        fail(kExitInput, std::string("train: ") + e.what());
    }
    std::printf("method=%s beta_nnz=%zu nabla_support=%zu beta0=%.6g\n",
                setclf::method_tag_name(fit.method_tag), count_nonzero(fit.coefficients.linear),
                count_nonzero(fit.coefficients.quadratic), fit.coefficients.constant);
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data_path,
                const std::string& out_path) {
    setclf::FittedSetClassifier fit;
    setclf::Dataset data;
    try {
        fit = setclf::load_model(model_path);
        data = setclf::read_set_data(data_path);
    } catch (const setclf::Error& e) {
        fail(kExitInput, std::string("predict: ") + e.what());
    }
    if (data.dimension != fit.coefficients.dimension()) {
        fail(kExitInput, "predict: model dimension " +
                             std::to_string(fit.coefficients.dimension()) +
                             " does not match data dimension " + std::to_string(data.dimension));
    }
    std::string out = "set_id,predicted_label,g_value\n";
    try {
        for (const auto& s : data.sets) {
            const int label = fit.classify(s.sample);
            const double g = fit.decision_value(s.sample);
            out += s.set_id + "," + std::to_string(label) + "," + setclf::format_double(g) + "\n";
        }
        setclf::atomic_write(out_path, out);
    } catch (const setclf::Error& e) {
        fail(classify_exit_code(e), std::string("predict: ") + e.what());
    }
    return 0;
}

int run_simulate(const std::string& config_path, const std::string& out_path) {
    setclf::ExperimentConfig config;
    try {
        config = setclf::parse_experiment_config(setclf::read_file(config_path));
    } catch (const setclf::Error& e) {
        fail(kExitInput, std::string("simulate: ") + e.what());
    }
    try {
        const setclf::ResultTable table = setclf::run_experiment(config);
        setclf::atomic_write(out_path, table.to_csv());
    } catch (const setclf::Error& e) {
        fail(classify_exit_code(e), std::string("simulate: ") + e.what());
    }
    return 0;
}

struct RiskArgs {
    std::string spec_path;
    std::optional<int> scenario;
    std::size_t dimension = 0;
    double covariance_signal = 0.0;
    double mean_signal = 0.0;
    std::size_t sparse_entry_count = 10;
    std::uint64_t structure_seed = 0;
    std::vector<std::size_t> m_values;
    std::size_t reps = 10000;
    std::uint64_t seed = 0;
};

int run_risk(const RiskArgs& args) {
    std::optional<std::pair<setclf::GaussianClassModel, setclf::GaussianClassModel>> models;
    try {
        if (!args.spec_path.empty()) {
            models = setclf::parse_population_spec(setclf::read_file(args.spec_path));
        } else if (args.scenario) {
            setclf::ScenarioConfig sc;
            sc.scenario = *args.scenario;
            sc.dimension = args.dimension;
            sc.covariance_signal = args.covariance_signal;
            sc.mean_signal = args.mean_signal;
            sc.sparse_entry_count = args.sparse_entry_count;
            sc.structure_seed = args.structure_seed;
            auto built = setclf::scenario_models(sc);
            models.emplace(std::move(built.class1), std::move(built.class2));
        } else {
            fail(kExitInput, "risk: provide --spec FILE or --scenario with its parameters");
        }
    } catch (const setclf::Error& e) {
        fail(kExitInput, std::string("risk: ") + e.what());
    }
    if (args.m_values.empty()) fail(kExitInput, "risk: --m requires at least one set size");
    if (args.reps < 100) fail(kExitInput, "risk: --reps must be at least 100");

    const auto& class1 = models->first;
    const auto& class2 = models->second;
    const auto coeffs = setclf::oracle_coefficients(class1, class2);

    std::printf("m,method,risk,std_error\n");
    for (std::size_t mi = 0; mi < args.m_values.size(); ++mi) {
        const std::size_t m = args.m_values[mi];
        if (m == 0) fail(kExitInput, "risk: set sizes must be >= 1");
        // The three oracle rules are evaluated on shared draws.
        setclf::Rng rng(setclf::derive_seed(args.seed, mi));
        std::size_t wrong_bayes = 0, wrong_mean = 0, wrong_mv = 0;
        for (std::size_t r = 0; r < args.reps; ++r) {
            const int label = rng.uniform01() < class1.prior() ? 1 : 2;
            const auto set = setclf::sample_set(label == 1 ? class1 : class2, m, rng);
            if (setclf::classify_bayes(coeffs, set) != label) ++wrong_bayes;
            if (setclf::classify_mean_qda(class1, class2, set) != label) ++wrong_mean;
            if (setclf::classify_majority_vote(coeffs, set) != label) ++wrong_mv;
        }
        auto print_row = [&](const char* name, std::size_t wrong) {
            const double risk = static_cast<double>(wrong) / static_cast<double>(args.reps);
            const double se = std::sqrt(risk * (1.0 - risk) / static_cast<double>(args.reps));
            std::printf("%zu,%s,%.10g,%.10g\n", m, name, risk, se);
        };
        print_row("oracle-bayes", wrong_bayes);
        print_row("oracle-mean-qda", wrong_mean);
        print_row("oracle-majority-vote", wrong_mv);
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariance-engaged set classification"};
    app.require_subcommand(1);

    TrainArgs train_args;
    auto* train = app.add_subcommand("train", "fit a set classifier and write a model file");
    train->add_option("--data", train_args.data_path, "training data CSV")->required();
    train->add_option("--method", train_args.method, "classifier to fit")
        ->required()
        ->check(CLI::IsMember(
            {"clips", "plugin-full", "plugin-diag", "plugin-enriched", "qda-mv"}));
    train->add_option("--out", train_args.out_path, "output model file")->required();
    double cl = 0.0, tl = 0.0, bl = 0.0, cap = 0.0, ts = 0.0;
    std::uint64_t seed = 0;
    auto* cl_opt = train->add_option("--clime-lambda", cl, "CLIME sup-norm level");
    auto* tl_opt = train->add_option("--threshold-lambda", tl, "difference threshold");
    auto* bl_opt = train->add_option("--beta-lambda", bl, "beta sup-norm level");
    auto* cap_opt = train->add_option("--l1-cap", cap, "optional l1 bound on each theta_k");
    auto* ts_opt = train->add_option("--tune-split", ts,
                                     "fraction of each class's sets held out for lambda tuning");
    auto* seed_opt = train->add_option("--seed", seed, "seed for the tuning holdout draw");
    train->add_option("--split-seed", train_args.split_seed,
                      "seed for the clips batch split (default 0)");
    train->add_option("--enrich-delta", train_args.enrich_delta,
                      "ridge added to the covariance for plugin-enriched (default 1)");

    std::string predict_model, predict_data, predict_out;
    auto* predict = app.add_subcommand("predict", "label sets with a trained model");
    predict->add_option("--model", predict_model, "model file")->required();
    predict->add_option("--data", predict_data, "data CSV to classify")->required();
    predict->add_option("--out", predict_out, "output predictions CSV")->required();

    std::string sim_config, sim_out;
    auto* simulate = app.add_subcommand("simulate", "run an experiment sweep to CSV");
    simulate->add_option("--config", sim_config, "experiment config file")->required();
    simulate->add_option("--out", sim_out, "output CSV")->required();

    RiskArgs risk_args;
    auto* risk = app.add_subcommand("risk", "Monte Carlo risk of the oracle rules");
    risk->add_option("--spec", risk_args.spec_path, "population spec file");
    int scenario_flag = 0;
    auto* scen_opt = risk->add_option("--scenario", scenario_flag, "built-in scenario 1|2|3");
    risk->add_option("--dimension", risk_args.dimension, "p for the built-in scenario");
    risk->add_option("--covariance-signal", risk_args.covariance_signal, "zeta or rho");
    risk->add_option("--mean-signal", risk_args.mean_signal, "u");
    risk->add_option("--sparse-entry-count", risk_args.sparse_entry_count,
                     "scenario-1 support size (default 10)");
    risk->add_option("--structure-seed", risk_args.structure_seed, "scenario-1 support seed");
    risk->add_option("--m", risk_args.m_values, "set sizes to evaluate")
        ->required()
        ->delimiter(',');
    risk->add_option("--reps", risk_args.reps, "Monte Carlo repetitions (default 10000)");
    auto* risk_seed = risk->add_option("--seed", risk_args.seed, "Monte Carlo seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitInput;
    }

    try {
        if (train->parsed()) {
            if (*cl_opt) train_args.clime_lambda = cl;
            if (*tl_opt) train_args.threshold_lambda = tl;
            if (*bl_opt) train_args.beta_lambda = bl;
            if (*cap_opt) train_args.l1_cap = cap;
            if (*ts_opt) train_args.tune_split = ts;
            if (*seed_opt) train_args.seed = seed;
            return run_train(train_args);
        }
        if (predict->parsed()) return run_predict(predict_model, predict_data, predict_out);
        if (simulate->parsed()) return run_simulate(sim_config, sim_out);
        if (risk->parsed()) {
            if (*scen_opt) risk_args.scenario = scenario_flag;
            if (!*risk_seed) fail(kExitInput, "risk: --seed is required");
            return run_risk(risk_args);
        }
    } catch (const StageFailure& f) {
        std::fprintf(stderr, "%s\n", f.message.c_str());
        return f.code;
    } catch (const setclf::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return classify_exit_code(e);
    }
    return kExitInput;
}
