/*
 * Copyright (c) 2026 The steincv Authors
 *
 * Licensed under the Apache License, Version 2.0;
 * You may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an 'AS IS' BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#include "config.hpp"

#include "errors.hpp"
#include "fsutil.hpp"
#include "mlp.hpp"
#include "specvar.hpp"

namespace steincv {

namespace {

using nlohmann::json;

template <typename T>
T field(const json& j, const std::string& section, const std::string& key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + section + "." + key + "' has the wrong type");
    }
}

template <typename T>
T required_field(const json& j, const std::string& section, const std::string& key) {
    if (!j.contains(key)) {
        throw ConfigError("config is missing required field '" + section + "." + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config field '" + section + "." + key + "' has the wrong type");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (target_name != "gaussian" && target_name != "funnel" && target_name != "banana" &&
        target_name != "logreg") {
        throw ConfigError("unknown target '" + target_name + "'");
    }
    if (dim < 1) throw ConfigError("target.dim must be positive");
    if ((target_name == "funnel" || target_name == "banana") && dim < 2) {
        throw ConfigError("target '" + target_name + "' needs dim >= 2");
    }
    sampler.validate();
    if (b_n < 1) throw ConfigError("estimator.b_n must be positive");
    if (static_cast<std::int64_t>(b_n) > sampler.n_train) {
        throw ConfigError("estimator.b_n exceeds sampler.n_train");
    }
    if (static_cast<std::int64_t>(b_n) > sampler.n_test) {
        throw ConfigError("estimator.b_n exceeds sampler.n_test");
    }
    LagWindow::from_name(window);
    if (model_family == "mlp") {
        if (widths.empty()) throw ConfigError("model.widths must name at least one hidden layer");
        for (int w : widths) {
            if (w < 1) throw ConfigError("model.widths entries must be positive");
        }
        activation_from_name(activation);
    } else if (model_family == "polynomial") {
        if (degree < 0 || degree > 4) throw ConfigError("model.degree must lie in 0..4");
        if (poly_fit != "exact" && poly_fit != "gd") {
            throw ConfigError("model.fit must be 'exact' or 'gd'");
        }
    } else {
        throw ConfigError("model.family must be 'mlp' or 'polynomial'");
    }
    adam.validate();
    if (epochs < 0) throw ConfigError("optimizer.epochs must be nonnegative");
    if (minibatch_window < 0) throw ConfigError("optimizer.window must be nonnegative");
    if (functional_kind != "coordinate_square" && functional_kind != "coordinate" &&
        functional_kind != "average_test_likelihood") {
        throw ConfigError("unknown functional '" + functional_kind + "'");
    }
    if (functional_kind == "average_test_likelihood" && target_name != "logreg") {
        throw ConfigError("functional average_test_likelihood requires the logreg target");
    }
    if (functional_kind != "average_test_likelihood" && coordinate > dim) {
        throw ConfigError("functional.coordinate exceeds target.dim");
    }
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

ExperimentConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config parse error: ") + e.what());
    }
    ExperimentConfig cfg;

    const json target = j.value("target", json::object());
    cfg.target_name = required_field<std::string>(target, "target", "name");
    cfg.dim = field<int>(target, "target", "dim", cfg.dim);
    const json params = target.value("params", json::object());
    if (cfg.target_name == "funnel") {
        cfg.funnel_a = field<double>(params, "target.params", "a", cfg.funnel_a);
        cfg.funnel_b = field<double>(params, "target.params", "b", cfg.funnel_b);
    } else if (cfg.target_name == "banana") {
        cfg.banana_p = field<double>(params, "target.params", "p", cfg.banana_p);
        cfg.banana_b = field<double>(params, "target.params", "b", cfg.banana_b);
    } else if (cfg.target_name == "logreg") {
        cfg.logreg_g = field<double>(params, "target.params", "g", cfg.logreg_g);
        cfg.dataset_file = field<std::string>(params, "target.params", "dataset", cfg.dataset_file);
    }

    const json sampler = j.value("sampler", json::object());
    cfg.sampler.step_size = field<double>(sampler, "sampler", "gamma", cfg.sampler.step_size);
    cfg.sampler.n_burn = field<std::int64_t>(sampler, "sampler", "n_burn", cfg.sampler.n_burn);
    cfg.sampler.n_train = field<std::int64_t>(sampler, "sampler", "n_train", cfg.sampler.n_train);
    cfg.sampler.n_test = field<std::int64_t>(sampler, "sampler", "n_test", cfg.sampler.n_test);
    cfg.sampler.n_test_chains = field<std::int64_t>(sampler, "sampler", "T", 1);
    cfg.sampler.seed = field<std::uint64_t>(sampler, "sampler", "seed", 0);
    cfg.pregenerated_chain_path =
        field<std::string>(sampler, "sampler", "pregenerated_chain_path", "");

    const json est = j.value("estimator", json::object());
    cfg.window = field<std::string>(est, "estimator", "window", cfg.window);
    cfg.b_n = field<std::size_t>(est, "estimator", "b_n", cfg.b_n);

    const json model = j.value("model", json::object());
    cfg.model_family = field<std::string>(model, "model", "family", cfg.model_family);
    if (cfg.model_family == "mlp") {
        cfg.widths = field<std::vector<int>>(model, "model", "widths", cfg.widths);
        cfg.activation = field<std::string>(model, "model", "activation", cfg.activation);
        cfg.bias = field<bool>(model, "model", "bias", cfg.bias);
    } else {
        cfg.degree = field<int>(model, "model", "degree", cfg.degree);
        cfg.poly_fit = field<std::string>(model, "model", "fit", cfg.poly_fit);
    }

    const json opt = j.value("optimizer", json::object());
    cfg.adam.learning_rate = field<double>(opt, "optimizer", "lr", cfg.adam.learning_rate);
    cfg.adam.beta1 = field<double>(opt, "optimizer", "beta1", cfg.adam.beta1);
    cfg.adam.beta2 = field<double>(opt, "optimizer", "beta2", cfg.adam.beta2);
    cfg.adam.epsilon = field<double>(opt, "optimizer", "eps", cfg.adam.epsilon);
    cfg.adam.weight_decay = field<double>(opt, "optimizer", "weight_decay", cfg.adam.weight_decay);
    cfg.epochs = field<int>(opt, "optimizer", "epochs", cfg.epochs);
    cfg.minibatch_window = field<std::int64_t>(opt, "optimizer", "window", cfg.minibatch_window);
    cfg.parallel_gradients = field<bool>(opt, "optimizer", "parallel", cfg.parallel_gradients);

    const json functional = j.value("functional", json::object());
    cfg.functional_kind = field<std::string>(functional, "functional", "kind", cfg.functional_kind);
    cfg.coordinate = field<int>(functional, "functional", "coordinate", cfg.coordinate);

    cfg.output_dir = field<std::string>(j, "", "output_dir", cfg.output_dir);
    cfg.metadata = j.value("metadata", json::object());

    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::string& path) { return parse_config(read_file(path)); }

nlohmann::json config_to_json(const ExperimentConfig& cfg) {
    json j;
    json target;
    target["name"] = cfg.target_name;
    target["dim"] = cfg.dim;
    json params = json::object();
    if (cfg.target_name == "funnel") {
        params["a"] = cfg.funnel_a;
        params["b"] = cfg.funnel_b;
    } else if (cfg.target_name == "banana") {
        params["p"] = cfg.banana_p;
        params["b"] = cfg.banana_b;
    } else if (cfg.target_name == "logreg") {
        params["g"] = cfg.logreg_g;
        params["dataset"] = cfg.dataset_file;
    }
    target["params"] = params;
    j["target"] = target;

    json sampler;
    sampler["gamma"] = cfg.sampler.step_size;
    sampler["n_burn"] = cfg.sampler.n_burn;
    sampler["n_train"] = cfg.sampler.n_train;
    sampler["n_test"] = cfg.sampler.n_test;
    sampler["T"] = cfg.sampler.n_test_chains;
    sampler["seed"] = cfg.sampler.seed;
    if (!cfg.pregenerated_chain_path.empty()) {
        sampler["pregenerated_chain_path"] = cfg.pregenerated_chain_path;
    }
    j["sampler"] = sampler;

    json est;
    est["window"] = cfg.window;
    est["b_n"] = cfg.b_n;
    j["estimator"] = est;

    json model;
    model["family"] = cfg.model_family;
    if (cfg.model_family == "mlp") {
        model["widths"] = cfg.widths;
        model["activation"] = cfg.activation;
        model["bias"] = cfg.bias;
    } else {
        model["degree"] = cfg.degree;
        model["fit"] = cfg.poly_fit;
    }
    j["model"] = model;

    json opt;
    opt["lr"] = cfg.adam.learning_rate;
    opt["beta1"] = cfg.adam.beta1;
    opt["beta2"] = cfg.adam.beta2;
    opt["eps"] = cfg.adam.epsilon;
    opt["weight_decay"] = cfg.adam.weight_decay;
    opt["epochs"] = cfg.epochs;
    opt["window"] = cfg.minibatch_window;
    opt["parallel"] = cfg.parallel_gradients;
    j["optimizer"] = opt;

    json functional;
    functional["kind"] = cfg.functional_kind;
    if (cfg.functional_kind != "average_test_likelihood") {
        functional["coordinate"] = cfg.coordinate;
    }
    j["functional"] = functional;

    j["output_dir"] = cfg.output_dir;
    if (!cfg.metadata.empty()) j["metadata"] = cfg.metadata;
    return j;
}

std::string serialize_config(const ExperimentConfig& cfg) { return config_to_json(cfg).dump(2); }

}  // namespace steincv
