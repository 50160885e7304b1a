// io.hpp - file formats behind the command-line tools: the set data CSV,
// the versioned model file, the experiment config, and the population spec
// used by risk estimation. Writers emit doubles with 17 significant digits
// so that save/load round-trips reproduce values bit-exactly; all output
// files are written atomically (temp file + rename).

#ifndef SETCLF_IO_HPP
#define SETCLF_IO_HPP

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "setclf/errors.hpp"
#include "setclf/estimators.hpp"
#include "setclf/model.hpp"
#include "setclf/simulate.hpp"

namespace setclf {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const std::string& what) {
    const char* begin = s.c_str();
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(begin, &end);
    if (end == begin || errno == ERANGE) {
        throw ParseError(what + ": cannot parse number '" + s + "'");
    }
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') throw ParseError(what + ": trailing characters in number '" + s + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& s, const std::string& what) {
    char* end = nullptr;
    errno = 0;
    const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
    if (end == s.c_str() || errno == ERANGE) {
        throw ParseError(what + ": cannot parse integer '" + s + "'");
    }
    while (*end == ' ' || *end == '\t' || *end == '\r') ++end;
    if (*end != '\0') throw ParseError(what + ": trailing characters in integer '" + s + "'");
    return v;
}

inline std::vector<std::string> split_fields(const std::string& line, char sep) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == sep) {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline std::vector<std::string> split_whitespace(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream iss(s);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

// Write `content` to `path` through a temp file and rename, so a failure
// never leaves a partial output behind.
inline void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            out.close();
            std::filesystem::remove(tmp);
            throw IoError("failed while writing '" + tmp + "'");
        }
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp);
        throw IoError("cannot rename '" + tmp + "' to '" + path + "': " + ec.message());
    }
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (!in.good() && !in.eof()) throw IoError("failed while reading '" + path + "'");
    return ss.str();
}

// -------------------------------------------------------------------------
// Set data CSV: header `set_id,label,f1,...,fp`; one row per observation;
// an empty label field marks an unlabeled set.
// -------------------------------------------------------------------------

struct NamedSet {
    std::string set_id;
    SetSample sample;
    std::optional<int> label;  // 1 or 2 when present
};

struct Dataset {
    std::size_t dimension = 0;
    std::vector<NamedSet> sets;  // in first-appearance order

    std::vector<LabeledSet> labeled() const {
        std::vector<LabeledSet> out;
        for (const auto& s : sets) {
            if (!s.label) {
                throw ParseError("set '" + s.set_id + "' has no label");
            }
            out.push_back(LabeledSet{s.sample, *s.label});
        }
        return out;
    }
};

inline Dataset parse_set_data(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw ParseError("data file: empty file");
    const auto header = split_fields(line, ',');
    if (header.size() < 3 || header[0] != "set_id" || header[1] != "label") {
        throw ParseError("data file: header must be 'set_id,label,f1,...,fp'");
    }
    Dataset data;
    data.dimension = header.size() - 2;

    std::vector<std::size_t> index_of;  // parallel lookup: set_id -> position
    std::vector<std::string> ids;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto fields = split_fields(line, ',');
        if (fields.size() != header.size()) {
            throw ParseError("data file line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(fields.size()));
        }
        const std::string& id = fields[0];
        std::optional<int> label;
        if (!fields[1].empty()) {
            if (fields[1] == "1") label = 1;
            else if (fields[1] == "2") label = 2;
            else {
                throw ParseError("data file line " + std::to_string(line_no) +
                                 ": label must be 1, 2 or empty");
            }
        }
        Vector x(data.dimension);
        for (std::size_t j = 0; j < data.dimension; ++j) {
            x[j] = parse_double(fields[2 + j],
                                "data file line " + std::to_string(line_no));
        }
        std::size_t pos = SIZE_MAX;
        for (std::size_t i = 0; i < ids.size(); ++i) {
            if (ids[i] == id) {
                pos = index_of[i];
                break;
            }
        }
        if (pos == SIZE_MAX) {
            pos = data.sets.size();
            ids.push_back(id);
            index_of.push_back(pos);
            data.sets.push_back(NamedSet{id, {}, label});
        } else if (data.sets[pos].label != label) {
            throw ParseError("data file line " + std::to_string(line_no) + ": set '" + id +
                             "' has inconsistent labels");
        }
        data.sets[pos].sample.observations.push_back(std::move(x));
    }
    if (data.sets.empty()) throw ParseError("data file: no observation rows");
    return data;
}

inline Dataset read_set_data(const std::string& path) { return parse_set_data(read_file(path)); }

inline std::string format_set_data(const Dataset& data) {
    std::string out = "set_id,label";
    for (std::size_t j = 1; j <= data.dimension; ++j) out += ",f" + std::to_string(j);
    out += "\n";
    for (const auto& s : data.sets) {
        const std::string label = s.label ? std::to_string(*s.label) : "";
        for (const auto& x : s.sample.observations) {
            out += s.set_id + "," + label;
            for (double v : x) out += "," + format_double(v);
            out += "\n";
        }
    }
    return out;
}

// -------------------------------------------------------------------------
// Model file: versioned structured text. The quadratic coefficient is kept
// as sparse upper-triangle triplets; CLIPS models are sparse by construction
// and dense p x p storage wastes space at realistic p.
// -------------------------------------------------------------------------

inline std::string format_model(const FittedSetClassifier& fit) {
    const std::size_t p = fit.coefficients.dimension();
    std::string out;
    out += "format_version: 1\n";
    out += std::string("method: ") + method_tag_name(fit.method_tag) + "\n";
    out += "dimension: " + std::to_string(p) + "\n";
    out += "prior_log_ratio: " + format_double(fit.coefficients.prior_log_ratio) + "\n";
    out += "beta0: " + format_double(fit.coefficients.constant) + "\n";
    out += "beta:";
    for (double v : fit.coefficients.linear) out += " " + format_double(v);
    out += "\n";
    std::size_t nnz = 0;
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            if (fit.coefficients.quadratic(i, j) != 0.0) ++nnz;
        }
    }
    out += "nabla_entries: " + std::to_string(nnz) + "\n";
    for (std::size_t i = 0; i < p; ++i) {
        for (std::size_t j = i; j < p; ++j) {
            const double v = fit.coefficients.quadratic(i, j);
            if (v != 0.0) {
                out += "nabla: " + std::to_string(i) + " " + std::to_string(j) + " " +
                       format_double(v) + "\n";
            }
        }
    }
    if (fit.hyperparameters) {
        const auto& h = *fit.hyperparameters;
        out += "clime_lambda: " + format_double(h.clime_lambda) + "\n";
        out += "threshold_lambda: " + format_double(h.threshold_lambda) + "\n";
        out += "beta_lambda: " + format_double(h.beta_lambda) + "\n";
        if (h.l1_cap) out += "l1_cap: " + format_double(*h.l1_cap) + "\n";
        out += "split_seed: " + std::to_string(h.split_seed) + "\n";
    }
    if (fit.method_tag == MethodTag::PluginEnriched) {
        out += "enrich_delta: " + format_double(fit.enrich_delta) + "\n";
    }
    return out;
}

inline void save_model(const std::string& path, const FittedSetClassifier& fit) {
    atomic_write(path, format_model(fit));
}

inline FittedSetClassifier parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> entries;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) throw ParseError("model file: missing ':' in '" + line + "'");
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        entries.emplace_back(std::move(key), std::move(value));
    }
    auto find_one = [&](const std::string& key) -> const std::string& {
        for (const auto& [k, v] : entries) {
            if (k == key) return v;
        }
        throw ParseError("model file: missing field '" + key + "'");
    };
    auto find_opt = [&](const std::string& key) -> const std::string* {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    };

    if (parse_u64(find_one("format_version"), "model file format_version") != 1) {
        throw ParseError("model file: unsupported format_version");
    }
    FittedSetClassifier fit;
    {
        const std::string& m = find_one("method");
        bool found = false;
        for (MethodTag tag : {MethodTag::PluginFull, MethodTag::PluginDiagonal,
                              MethodTag::PluginEnriched, MethodTag::Clips,
                              MethodTag::QdaMajorityVote}) {
            if (m == method_tag_name(tag)) {
                fit.method_tag = tag;
                found = true;
            }
        }
        if (!found) throw ParseError("model file: unknown method '" + m + "'");
    }
    const std::size_t p =
        static_cast<std::size_t>(parse_u64(find_one("dimension"), "model file dimension"));
    fit.coefficients.prior_log_ratio =
        parse_double(find_one("prior_log_ratio"), "model file prior_log_ratio");
    fit.coefficients.constant = parse_double(find_one("beta0"), "model file beta0");
    {
        const auto toks = split_whitespace(find_one("beta"));
        if (toks.size() != p) throw ParseError("model file: beta length != dimension");
        fit.coefficients.linear.resize(p);
        for (std::size_t j = 0; j < p; ++j) {
            fit.coefficients.linear[j] = parse_double(toks[j], "model file beta");
        }
    }
    fit.coefficients.quadratic = Matrix(p, p, 0.0);
    std::size_t declared = parse_u64(find_one("nabla_entries"), "model file nabla_entries");
    std::size_t seen = 0;
    for (const auto& [k, v] : entries) {
        if (k != "nabla") continue;
        const auto toks = split_whitespace(v);
        if (toks.size() != 3) throw ParseError("model file: nabla entry needs 'i j value'");
        const std::size_t i = static_cast<std::size_t>(parse_u64(toks[0], "model file nabla"));
        const std::size_t j = static_cast<std::size_t>(parse_u64(toks[1], "model file nabla"));
        if (i >= p || j >= p || j < i) {
            throw ParseError("model file: nabla index out of the upper triangle");
        }
        const double val = parse_double(toks[2], "model file nabla");
        fit.coefficients.quadratic(i, j) = val;
        fit.coefficients.quadratic(j, i) = val;
        ++seen;
    }
    if (seen != declared) throw ParseError("model file: nabla_entries does not match entry count");

    if (find_opt("clime_lambda")) {
        ClipsHyperparameters h;
        h.clime_lambda = parse_double(find_one("clime_lambda"), "model file clime_lambda");
        h.threshold_lambda =
            parse_double(find_one("threshold_lambda"), "model file threshold_lambda");
        h.beta_lambda = parse_double(find_one("beta_lambda"), "model file beta_lambda");
        if (const auto* cap = find_opt("l1_cap")) {
            h.l1_cap = parse_double(*cap, "model file l1_cap");
        }
        h.split_seed = parse_u64(find_one("split_seed"), "model file split_seed");
        fit.hyperparameters = h;
    }
    if (const auto* d = find_opt("enrich_delta")) {
        fit.enrich_delta = parse_double(*d, "model file enrich_delta");
    }
    fit.coefficients.validate();
    return fit;
}

inline FittedSetClassifier load_model(const std::string& path) {
    return parse_model(read_file(path));
}

// -------------------------------------------------------------------------
// Experiment config: flat key/value text mirroring ExperimentConfig fields.
// -------------------------------------------------------------------------

inline ExperimentConfig parse_experiment_config(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<std::string, std::string>> entries;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError("experiment config: missing ':' in '" + line + "'");
        }
        std::string key = line.substr(0, colon);
        std::string value = line.substr(colon + 1);
        while (!value.empty() && value.front() == ' ') value.erase(value.begin());
        while (!value.empty() && (value.back() == ' ' || value.back() == '\t')) value.pop_back();
        entries.emplace_back(std::move(key), std::move(value));
    }
    auto find_opt = [&](const std::string& key) -> const std::string* {
        for (const auto& [k, v] : entries) {
            if (k == key) return &v;
        }
        return nullptr;
    };
    auto find_one = [&](const std::string& key) -> const std::string& {
        const auto* v = find_opt(key);
        if (!v) throw ParseError("experiment config: missing field '" + key + "'");
        return *v;
    };

    ExperimentConfig config;
    config.scenario_config.scenario =
        static_cast<int>(parse_u64(find_one("scenario"), "field 'scenario'"));
    if (const auto* v = find_opt("dimension")) {
        config.scenario_config.dimension =
            static_cast<std::size_t>(parse_u64(*v, "field 'dimension'"));
    }
    if (const auto* v = find_opt("covariance_signal")) {
        config.scenario_config.covariance_signal = parse_double(*v, "field 'covariance_signal'");
    }
    if (const auto* v = find_opt("mean_signal")) {
        config.scenario_config.mean_signal = parse_double(*v, "field 'mean_signal'");
    }
    if (const auto* v = find_opt("sparse_entry_count")) {
        config.scenario_config.sparse_entry_count =
            static_cast<std::size_t>(parse_u64(*v, "field 'sparse_entry_count'"));
    }
    if (const auto* v = find_opt("structure_seed")) {
        config.scenario_config.structure_seed = parse_u64(*v, "field 'structure_seed'");
    }
    {
        const std::string& axis = find_one("sweep_axis");
        if (axis == "covariance_signal") config.sweep_axis = SweepAxis::CovarianceSignal;
        else if (axis == "mean_signal") config.sweep_axis = SweepAxis::MeanSignal;
        else if (axis == "dimension") config.sweep_axis = SweepAxis::Dimension;
        else throw ParseError("field 'sweep_axis': must be covariance_signal, mean_signal or dimension");
    }
    for (const auto& tok : split_whitespace(find_one("sweep_values"))) {
        config.sweep_values.push_back(parse_double(tok, "field 'sweep_values'"));
    }
    config.sets_per_class =
        static_cast<std::size_t>(parse_u64(find_one("sets_per_class"), "field 'sets_per_class'"));
    {
        const auto toks = split_whitespace(find_one("set_size"));
        if (toks.size() == 2 && toks[0] == "fixed") {
            config.set_size = SetSizeDistribution::fixed(
                static_cast<std::size_t>(parse_u64(toks[1], "field 'set_size'")));
        } else if (toks.size() == 3 && toks[0] == "uniform") {
            config.set_size = SetSizeDistribution::uniform_range(
                static_cast<std::size_t>(parse_u64(toks[1], "field 'set_size'")),
                static_cast<std::size_t>(parse_u64(toks[2], "field 'set_size'")));
        } else {
            throw ParseError("field 'set_size': expected 'fixed M' or 'uniform LOW HIGH'");
        }
    }
    config.replicate_count = static_cast<std::size_t>(
        parse_u64(find_one("replicate_count"), "field 'replicate_count'"));
    if (const auto* v = find_opt("test_sets_per_class")) {
        config.test_sets_per_class =
            static_cast<std::size_t>(parse_u64(*v, "field 'test_sets_per_class'"));
    }
    config.master_seed = parse_u64(find_one("master_seed"), "field 'master_seed'");
    for (const auto& tok : split_whitespace(find_one("methods"))) {
        Method m;
        if (!method_from_name(tok, m)) {
            throw ParseError("field 'methods': unknown method '" + tok + "'");
        }
        config.methods.push_back(m);
    }
    if (const auto* v = find_opt("enrich_delta")) {
        config.enrich_delta = parse_double(*v, "field 'enrich_delta'");
    }
    try {
        config.validate();
    } catch (const Error& e) {
        throw ParseError(std::string("experiment config: ") + e.what());
    }
    return config;
}

// -------------------------------------------------------------------------
// Population spec for risk estimation: two explicit Gaussian classes.
// -------------------------------------------------------------------------

inline std::pair<GaussianClassModel, GaussianClassModel> parse_population_spec(
    const std::string& text) {
    std::istringstream in(text);
    std::string line;
    double prior1 = 0.5, prior2 = 0.5;
    std::size_t p = 0;
    Vector mean1, mean2;
    std::vector<Vector> cov1_rows, cov2_rows;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line[0] == '#') continue;
        const auto colon = line.find(':');
        if (colon == std::string::npos) {
            throw ParseError("population spec: missing ':' in '" + line + "'");
        }
        const std::string key = line.substr(0, colon);
        const std::string value = line.substr(colon + 1);
        const auto toks = split_whitespace(value);
        auto to_vector = [&](const std::string& what) {
            Vector v;
            for (const auto& t : toks) v.push_back(parse_double(t, what));
            return v;
        };
        if (key == "dimension") p = static_cast<std::size_t>(parse_u64(toks.at(0), "dimension"));
        else if (key == "prior1") prior1 = parse_double(toks.at(0), "prior1");
        else if (key == "prior2") prior2 = parse_double(toks.at(0), "prior2");
        else if (key == "mean1") mean1 = to_vector("mean1");
        else if (key == "mean2") mean2 = to_vector("mean2");
        else if (key == "cov1") cov1_rows.push_back(to_vector("cov1"));
        else if (key == "cov2") cov2_rows.push_back(to_vector("cov2"));
        else throw ParseError("population spec: unknown field '" + key + "'");
    }
    if (p == 0) throw ParseError("population spec: missing field 'dimension'");
    auto build = [&](const Vector& mean, const std::vector<Vector>& rows, double prior,
                     const std::string& which) {
        if (mean.size() != p) throw ParseError("population spec: mean" + which + " length != dimension");
        if (rows.size() != p) throw ParseError("population spec: cov" + which + " needs p rows");
        Matrix cov(p, p);
        for (std::size_t i = 0; i < p; ++i) {
            if (rows[i].size() != p) {
                throw ParseError("population spec: cov" + which + " row length != dimension");
            }
            for (std::size_t j = 0; j < p; ++j) cov(i, j) = rows[i][j];
        }
        return GaussianClassModel(prior, mean, cov);
    };
    return {build(mean1, cov1_rows, prior1, "1"), build(mean2, cov2_rows, prior2, "2")};
}

}  // namespace setclf

#endif  // SETCLF_IO_HPP
