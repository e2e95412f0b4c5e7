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

// Command-line front end. Everything goes through the C API in
// steincv/steincv.h; this translation unit does argument handling and
// output formatting only.

#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <json.hpp>
#include <string>
#include <vector>

#include "steincv/steincv.h"

namespace {

int status_to_exit_code(steincv_status status) {
    switch (status) {
        case STEINCV_OK: return 0;
        case STEINCV_ERR_CONFIG:
        case STEINCV_ERR_UNSUPPORTED: return 2;
        default: return 1;
    }
}

int fail(steincv_status status) {
    std::fprintf(stderr, "error: %s\n", steincv_last_error());
    return status_to_exit_code(status);
}

void print_run_summary(const char* report_json) {
    try {
        const nlohmann::json report = nlohmann::json::parse(report_json);
        const auto& eval = report.at("evaluation");
        const auto& training = report.at("training");
        auto num = [](const nlohmann::json& v) {
            return v.is_null() ? std::string("inf") : nlohmann::json(v).dump();
        };
        std::printf("training loss: %s -> %s\n", num(training.at("initial_loss")).c_str(),
                    num(training.at("best_loss")).c_str());
        std::printf("ESVRR median: %s  mean: %s  pooled: %s\n",
                    num(eval.at("esvrr_median")).c_str(), num(eval.at("esvrr_mean")).c_str(),
                    num(eval.at("esvrr_pooled")).c_str());
    } catch (const nlohmann::json::exception&) {
        std::printf("report written (summary unavailable)\n");
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"steincv: variance reduction for MCMC estimators with Stein control variates"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand

    std::string data_dir;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool has_seed = false;
    app.add_option("--data-dir", data_dir,
                   "directory with dataset files (fallback: STEINCV_DATA_DIR)");
    app.add_option("--out-dir", out_dir, "output directory override");
    app.add_option("--seed", seed, "seed override")->each([&](const std::string&) {
        has_seed = true;
    });

    std::string run_config;
    CLI::App* run = app.add_subcommand("run", "run an experiment from a JSON config");
    run->add_option("config", run_config, "config file")->required();

    std::string sample_config;
    std::string sample_out = "chain.stcv";
    CLI::App* sample = app.add_subcommand("sample", "generate a training chain file");
    sample->add_option("config", sample_config, "config file")->required();
    sample->add_option("--out", sample_out, "output chain file");

    std::string activation = "recu";
    int dims = 4;
    std::vector<std::int32_t> widths = {16};
    bool laplacian = false;
    std::uint64_t gc_seed = 1;
    CLI::App* gradcheck = app.add_subcommand("gradcheck", "finite-difference derivative checks");
    gradcheck->add_option("--activation", activation, "recu|requ|relu|tanh");
    gradcheck->add_option("--dims", dims, "input dimension");
    gradcheck->add_option("--widths", widths, "hidden layer widths")->delimiter(',');
    gradcheck->add_flag("--laplacian", laplacian, "also check the Laplacian");
    gradcheck->add_option("--gc-seed", gc_seed, "network seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    if (run->parsed()) {
        char* report_json = nullptr;
        const steincv_status status = steincv_run_experiment(
            run_config.c_str(), data_dir.empty() ? nullptr : data_dir.c_str(),
            out_dir.empty() ? nullptr : out_dir.c_str(), seed, has_seed ? 1 : 0, &report_json);
        if (status != STEINCV_OK) return fail(status);
        print_run_summary(report_json);
        steincv_string_free(report_json);
        return 0;
    }

    if (sample->parsed()) {
        const steincv_status status = steincv_sample_chain(
            sample_config.c_str(), data_dir.empty() ? nullptr : data_dir.c_str(), seed,
            has_seed ? 1 : 0, sample_out.c_str());
        if (status != STEINCV_OK) return fail(status);
        std::printf("chain written to %s\n", sample_out.c_str());
        return 0;
    }

    if (gradcheck->parsed()) {
        steincv_gradcheck_result result{};
        const steincv_status status =
            steincv_gradcheck(activation.c_str(), dims, widths.data(),
                              static_cast<std::int32_t>(widths.size()), gc_seed,
                              laplacian ? 1 : 0, &result);
        if (status != STEINCV_OK) return fail(status);
        std::printf("max rel err: gradient %.3e", result.max_gradient_rel_err);
        if (result.laplacian_checked != 0) {
            std::printf(", laplacian %.3e", result.max_laplacian_rel_err);
        }
        std::printf(", parameter %.3e\n", result.max_parameter_rel_err);
        std::printf("%s\n", result.passed != 0 ? "PASS" : "FAIL");
        return result.passed != 0 ? 0 : 1;
    }

    return 2;
}
