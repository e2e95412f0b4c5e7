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
#include "targets.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include "errors.hpp"
#include "rng.hpp"

namespace steincv {

void Target::check_dim(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    if (x.size() != dim_) {
        throw ConfigError("target '" + name_ + "' expects dimension " + std::to_string(dim_) +
                          ", got " + std::to_string(x.size()));
    }
}

GaussianTarget::GaussianTarget(int dim) : Target("gaussian", dim) {
    if (dim < 1) throw ConfigError("gaussian target needs dim >= 1");
}

double GaussianTarget::potential(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x);
    return 0.5 * x.squaredNorm();
}

void GaussianTarget::grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                                    Eigen::Ref<Eigen::VectorXd> out) const {
    check_dim(x);
    out = x;
}

FunnelTarget::FunnelTarget(int dim, double a, double b) : Target("funnel", dim), a_(a), b_(b) {
    if (dim < 2) throw ConfigError("funnel target needs dim >= 2");
    if (!(a > 0.0) || !(b > 0.0)) throw ConfigError("funnel parameters a, b must be positive");
}

double FunnelTarget::potential(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x);
    const double x1 = x[0];
    const double tail = 0.5 * x.tail(x.size() - 1).squaredNorm();
    return x1 * x1 / (2.0 * a_) + static_cast<double>(dim() - 1) * b_ * x1 +
           std::exp(-2.0 * b_ * x1) * tail;
}

void FunnelTarget::grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
    check_dim(x);
    const double x1 = x[0];
    const double e = std::exp(-2.0 * b_ * x1);
    const double tail = 0.5 * x.tail(x.size() - 1).squaredNorm();
    out[0] = x1 / a_ + static_cast<double>(dim() - 1) * b_ - 2.0 * b_ * e * tail;
    out.tail(x.size() - 1) = e * x.tail(x.size() - 1);
}

BananaTarget::BananaTarget(int dim, double p, double b) : Target("banana", dim), p_(p), b_(b) {
    if (dim < 2) throw ConfigError("banana target needs dim >= 2");
    if (!(p > 0.0) || !(b > 0.0)) throw ConfigError("banana parameters p, b must be positive");
}

double BananaTarget::potential(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x);
    const double t = x[1] + b_ * x[0] * x[0] - p_ * b_;
    double u = x[0] * x[0] / (2.0 * p_) + 0.5 * t * t;
    if (x.size() > 2) u += 0.5 * x.tail(x.size() - 2).squaredNorm();
    return u;
}

void BananaTarget::grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
    check_dim(x);
    const double t = x[1] + b_ * x[0] * x[0] - p_ * b_;
    out[0] = x[0] / p_ + t * 2.0 * b_ * x[0];
    out[1] = t;
    if (x.size() > 2) out.tail(x.size() - 2) = x.tail(x.size() - 2);
}

double log1p_exp(double t) {
    if (t > 0.0) return t + std::log1p(std::exp(-t));
    return std::log1p(std::exp(t));
}

Eigen::MatrixXd whiten_design(const Eigen::MatrixXd& design) {
    const Eigen::MatrixXd gram = design.transpose() * design;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(gram);
    if (eig.info() != Eigen::Success) throw NumericError("eigendecomposition of Z^T Z failed");
    Eigen::VectorXd inv_sqrt = eig.eigenvalues();
    for (Eigen::Index i = 0; i < inv_sqrt.size(); ++i) {
        const double lambda = std::max(inv_sqrt[i], 1e-12);
        inv_sqrt[i] = 1.0 / std::sqrt(lambda);
    }
    const Eigen::MatrixXd root =
        eig.eigenvectors() * inv_sqrt.asDiagonal() * eig.eigenvectors().transpose();
    return design * root;
}

namespace {

bool parse_double(const std::string& field, double& out) {
    const char* begin = field.c_str();
    char* end = nullptr;
    out = std::strtod(begin, &end);
    if (end == begin) return false;
    while (*end != '\0') {
        if (!std::isspace(static_cast<unsigned char>(*end))) return false;
        ++end;
    }
    return std::isfinite(out);
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    return fields;
}

bool blank_line(const std::string& line) {
    for (char ch : line) {
        if (!std::isspace(static_cast<unsigned char>(ch))) return false;
    }
    return true;
}

}  // namespace

LogRegData load_logreg_csv(const std::string& path, double prior_scale, std::uint64_t seed) {
    if (!(prior_scale > 0.0)) throw ConfigError("prior scale g must be positive");
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open dataset file '" + path + "'");

    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    std::size_t n_cols = 0;
    bool first_content_line = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (blank_line(line)) continue;
        const std::vector<std::string> fields = split_csv_line(line);
        std::vector<double> values(fields.size());
        bool numeric = true;
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (!parse_double(fields[i], values[i])) {
                numeric = false;
                break;
            }
        }
        if (!numeric) {
            if (first_content_line) {  // header row
                first_content_line = false;
                continue;
            }
            throw IngestionError("malformed row " + std::to_string(line_no) + " in '" + path +
                                 "': non-numeric field");
        }
        first_content_line = false;
        if (values.size() < 2) {
            throw IngestionError("malformed row " + std::to_string(line_no) + " in '" + path +
                                 "': need at least one feature and the outcome");
        }
        if (n_cols == 0) {
            n_cols = values.size();
        } else if (values.size() != n_cols) {
            throw IngestionError("malformed row " + std::to_string(line_no) + " in '" + path +
                                 "': expected " + std::to_string(n_cols) + " fields, got " +
                                 std::to_string(values.size()));
        }
        const double y = values.back();
        if (y != 0.0 && y != 1.0) {
            throw IngestionError("row " + std::to_string(line_no) + " in '" + path +
                                 "': outcome must be 0 or 1, got " + std::to_string(y));
        }
        rows.push_back(std::move(values));
    }
    if (rows.empty()) throw IngestionError("dataset '" + path + "' contains no data rows");

    const Eigen::Index n = static_cast<Eigen::Index>(rows.size());
    const Eigen::Index d = static_cast<Eigen::Index>(n_cols);  // features + intercept
    Eigen::MatrixXd design(n, d);
    Eigen::VectorXd labels(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j + 1 < d; ++j) design(i, j) = rows[static_cast<std::size_t>(i)][j];
        design(i, d - 1) = 1.0;  // intercept
        labels[i] = rows[static_cast<std::size_t>(i)].back();
    }

    LogRegData data;
    data.whitened = whiten_design(design);
    data.labels = labels;
    data.prior_scale = prior_scale;

    // Seeded Fisher-Yates shuffle; the last K indices become the test part.
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng(seed, kStreamSplit, 0);
    for (Eigen::Index i = n - 1; i > 0; --i) {
        const auto j = static_cast<Eigen::Index>(rng.next_u64() % static_cast<std::uint64_t>(i + 1));
        std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(j)]);
    }
    const Eigen::Index n_train = (n * 8) / 10;
    const Eigen::Index n_test = n - n_train;
    if (n_train == 0) throw IngestionError("dataset '" + path + "' too small to split");
    data.train_design.resize(n_train, d);
    data.train_labels.resize(n_train);
    data.test_design.resize(n_test, d);
    data.test_labels.resize(n_test);
    for (Eigen::Index i = 0; i < n_train; ++i) {
        data.train_design.row(i) = data.whitened.row(order[static_cast<std::size_t>(i)]);
        data.train_labels[i] = labels[order[static_cast<std::size_t>(i)]];
    }
    for (Eigen::Index i = 0; i < n_test; ++i) {
        data.test_design.row(i) = data.whitened.row(order[static_cast<std::size_t>(n_train + i)]);
        data.test_labels[i] = labels[order[static_cast<std::size_t>(n_train + i)]];
    }
    return data;
}

LogRegData load_pima(const std::string& path, double prior_scale, std::uint64_t seed) {
    return load_logreg_csv(path, prior_scale, seed);
}

LogRegTarget::LogRegTarget(LogRegData data)
    : Target("logreg", data.dim()), data_(std::move(data)) {
    if (data_.train_design.rows() == 0) throw ConfigError("logistic regression dataset is empty");
}

double LogRegTarget::potential(const Eigen::Ref<const Eigen::VectorXd>& x) const {
    check_dim(x);
    const Eigen::VectorXd margins = data_.train_design * x;
    double nll = 0.0;
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        nll -= data_.train_labels[i] * margins[i] - log1p_exp(margins[i]);
    }
    return nll + x.squaredNorm() / (2.0 * data_.prior_scale);
}

void LogRegTarget::grad_potential(const Eigen::Ref<const Eigen::VectorXd>& x,
                                  Eigen::Ref<Eigen::VectorXd> out) const {
    check_dim(x);
    const Eigen::VectorXd margins = data_.train_design * x;
    Eigen::VectorXd residual(margins.size());
    for (Eigen::Index i = 0; i < margins.size(); ++i) {
        const double sigmoid = 1.0 / (1.0 + std::exp(-margins[i]));
        residual[i] = sigmoid - data_.train_labels[i];
    }
    out = data_.train_design.transpose() * residual + x / data_.prior_scale;
}

}  // namespace steincv
