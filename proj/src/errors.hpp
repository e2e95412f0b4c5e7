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
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace steincv {

/// Bad configuration: dimension mismatches, invalid parameters, schema errors.
struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Data ingestion failure (missing file, malformed row, bad labels).
struct IngestionError : std::runtime_error {
    explicit IngestionError(const std::string& what) : std::runtime_error(what) {}
};

/// A Markov chain left the representable range; carries the offending state.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& what, std::vector<double> state)
        : std::runtime_error(what), offending_state(std::move(state)) {}
    std::vector<double> offending_state;
};

/// Non-finite values encountered in a numeric kernel.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

/// Requested an operation the chosen variant cannot provide (e.g. ReLU Laplacian).
struct UnsupportedError : std::runtime_error {
    explicit UnsupportedError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace steincv
