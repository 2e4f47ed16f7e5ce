// Strict JSON configuration for the experiment runner: every key is
// checked against the schema so a typo fails fast instead of silently
// running with a default.
#include "mvfbm/harness.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

#include "mvfbm/errors.hpp"

namespace mvfbm::harness {

namespace {

using json = nlohmann::ordered_json;

void require_keys(const json& obj, const char* where,
                  std::initializer_list<const char*> allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (const char* key : allowed) {
            if (it.key() == key) {
                known = true;
                break;
            }
        }
        if (!known) {
            throw ConfigError(std::string("config: unknown key \"") +
                              it.key() + "\" in " + where);
        }
    }
}

double number_field(const json& obj, const char* key, double fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number()) {
        throw ConfigError(std::string("config: \"") + key +
                          "\" must be a number");
    }
    return v.get<double>();
}

std::size_t count_field(const json& obj, const char* key,
                        std::size_t fallback) {
    if (!obj.contains(key)) {
        return fallback;
    }
    const json& v = obj.at(key);
    if (!v.is_number_unsigned() || v.get<std::uint64_t>() == 0) {
        throw ConfigError(std::string("config: \"") + key +
                          "\" must be a positive integer");
    }
    return v.get<std::size_t>();
}

void validate(const ExperimentConfig& cfg) {
    if (cfg.h_values.empty()) {
        throw ConfigError("config: h_values must be non-empty");
    }
    for (double h : cfg.h_values) {
        if (!(h > 0.5) || !(h < 1.0) || !std::isfinite(h)) {
            throw ConfigError(
                "config: every entry of h_values must lie in (0.5, 1)");
        }
    }
    if (cfg.epsilons.empty()) {
        throw ConfigError("config: epsilons must be non-empty");
    }
    for (std::size_t i = 0; i < cfg.epsilons.size(); ++i) {
        const double e = cfg.epsilons[i];
        if (!(e > 0.0) || !(e < 1.0) || !std::isfinite(e)) {
            throw ConfigError(
                "config: every entry of epsilons must lie in (0, 1)");
        }
        if (i > 0 && !(e < cfg.epsilons[i - 1])) {
            throw ConfigError(
                "config: epsilons must be strictly decreasing");
        }
    }
    if (!(cfg.t_end > 0.0) || !std::isfinite(cfg.t_end)) {
        throw ConfigError("config: t_end must be positive");
    }
    if (!(cfg.target_time > 0.0) || !(cfg.target_time <= cfg.t_end)) {
        throw ConfigError(
            "config: target_time must lie in (0, t_end]");
    }
    if (cfg.n_steps < 2) {
        throw ConfigError("config: n_steps must be at least 2");
    }
    if (cfg.n_particles < 100) {
        throw ConfigError(
            "config: n_particles must be at least 100 (the distance "
            "estimators refuse smaller sample sets)");
    }
    if (cfg.n_samples < 100) {
        throw ConfigError("config: n_samples must be at least 100");
    }
    if (cfg.seeds.empty()) {
        throw ConfigError("config: seeds must be non-empty");
    }
    if (!(cfg.estimator.fisher_bandwidth >= 0.0) ||
        !std::isfinite(cfg.estimator.fisher_bandwidth)) {
        throw ConfigError(
            "config: estimator.fisher_bandwidth must be >= 0");
    }
    if (!(cfg.estimator.floor_multiplier > 0.0) ||
        !std::isfinite(cfg.estimator.floor_multiplier)) {
        throw ConfigError(
            "config: estimator.floor_multiplier must be positive");
    }
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) {
        throw ConfigError("config: top level must be a JSON object");
    }

    ExperimentConfig cfg;
    try {
        require_keys(doc, "the top level",
                     {"model", "h_values", "epsilons", "t_end", "n_steps",
                      "n_particles", "n_samples", "seeds", "target_time",
                      "out_dir", "estimator"});

        if (doc.contains("model")) {
            const json& m = doc.at("model");
            if (!m.is_object()) {
                throw ConfigError("config: \"model\" must be an object");
            }
            if (m.contains("id")) {
                if (!m.at("id").is_string()) {
                    throw ConfigError("config: model.id must be a string");
                }
                cfg.model_id = m.at("id").get<std::string>();
            }
            if (cfg.model_id == "pure_noise") {
                require_keys(m, "model (pure_noise)", {"id"});
            } else if (cfg.model_id == "mf_ou") {
                require_keys(m, "model (mf_ou)",
                             {"id", "alpha", "beta", "gamma", "sigma0",
                              "kappa", "gamma_w", "x0"});
                cfg.params.alpha = number_field(m, "alpha", cfg.params.alpha);
                cfg.params.beta = number_field(m, "beta", cfg.params.beta);
                cfg.params.gamma = number_field(m, "gamma", cfg.params.gamma);
                cfg.params.sigma0 =
                    number_field(m, "sigma0", cfg.params.sigma0);
                cfg.params.kappa = number_field(m, "kappa", cfg.params.kappa);
                cfg.params.gamma_w =
                    number_field(m, "gamma_w", cfg.params.gamma_w);
                cfg.params.x0 = number_field(m, "x0", cfg.params.x0);
            } else {
                throw ConfigError(
                    "config: model.id must be \"mf_ou\" or \"pure_noise\"");
            }
        }

        if (doc.contains("h_values")) {
            if (!doc.at("h_values").is_array()) {
                throw ConfigError("config: \"h_values\" must be an array");
            }
            cfg.h_values = doc.at("h_values").get<std::vector<double>>();
        }
        if (doc.contains("epsilons")) {
            if (!doc.at("epsilons").is_array()) {
                throw ConfigError("config: \"epsilons\" must be an array");
            }
            cfg.epsilons = doc.at("epsilons").get<std::vector<double>>();
        }
        cfg.t_end = number_field(doc, "t_end", cfg.t_end);
        cfg.n_steps = count_field(doc, "n_steps", cfg.n_steps);
        cfg.n_particles = count_field(doc, "n_particles", cfg.n_particles);
        cfg.n_samples = count_field(doc, "n_samples", cfg.n_samples);
        if (doc.contains("seeds")) {
            if (!doc.at("seeds").is_array()) {
                throw ConfigError("config: \"seeds\" must be an array");
            }
            cfg.seeds.clear();
            for (const json& s : doc.at("seeds")) {
                if (!s.is_number_unsigned()) {
                    throw ConfigError(
                        "config: seeds must be unsigned integers");
                }
                cfg.seeds.push_back(s.get<std::uint64_t>());
            }
        }
        cfg.target_time = number_field(doc, "target_time", cfg.target_time);
        if (doc.contains("out_dir")) {
            if (!doc.at("out_dir").is_string()) {
                throw ConfigError("config: \"out_dir\" must be a string");
            }
            cfg.out_dir = doc.at("out_dir").get<std::string>();
        }
        if (doc.contains("estimator")) {
            const json& est = doc.at("estimator");
            if (!est.is_object()) {
                throw ConfigError("config: \"estimator\" must be an object");
            }
            require_keys(est, "estimator",
                         {"fisher_bandwidth", "floor_multiplier"});
            cfg.estimator.fisher_bandwidth = number_field(
                est, "fisher_bandwidth", cfg.estimator.fisher_bandwidth);
            cfg.estimator.floor_multiplier = number_field(
                est, "floor_multiplier", cfg.estimator.floor_multiplier);
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }

    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("config: cannot open file " + path);
    }
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

std::string config_json(const ExperimentConfig& cfg) {
    json model;
    model["id"] = cfg.model_id;
    if (cfg.model_id == "mf_ou") {
        model["alpha"] = cfg.params.alpha;
        model["beta"] = cfg.params.beta;
        model["gamma"] = cfg.params.gamma;
        model["sigma0"] = cfg.params.sigma0;
        model["kappa"] = cfg.params.kappa;
        model["gamma_w"] = cfg.params.gamma_w;
        model["x0"] = cfg.params.x0;
    }
    json doc;
    doc["model"] = model;
    doc["h_values"] = cfg.h_values;
    doc["epsilons"] = cfg.epsilons;
    doc["t_end"] = cfg.t_end;
    doc["n_steps"] = cfg.n_steps;
    doc["n_particles"] = cfg.n_particles;
    doc["n_samples"] = cfg.n_samples;
    doc["seeds"] = cfg.seeds;
    doc["target_time"] = cfg.target_time;
    doc["out_dir"] = cfg.out_dir;
    doc["estimator"] = {
        {"fisher_bandwidth", cfg.estimator.fisher_bandwidth},
        {"floor_multiplier", cfg.estimator.floor_multiplier},
    };
    return doc.dump(2);
}

}  // namespace mvfbm::harness
