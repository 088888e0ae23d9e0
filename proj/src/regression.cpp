#include "antic/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "antic/error.hpp"
#include "antic/random.hpp"

namespace antic {

namespace {

void check_finite(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    if (x.rows() == 0) throw ValidationError("regression needs at least one row");
    if (x.rows() != y.size()) throw ContractError("design matrix and response differ in length");
    if (!x.allFinite() || !y.allFinite()) throw ValidationError("design matrix or response has non-finite entries");
}

// ln s(eta) without overflow.
double log_sigmoid(double eta) {
    return eta >= 0.0 ? -std::log1p(std::exp(-eta)) : eta - std::log1p(std::exp(eta));
}

double sigmoid(double eta) {
    if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
    const double e = std::exp(eta);
    return e / (1.0 + e);
}

Eigen::MatrixXd take_rows(const Eigen::MatrixXd& m, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), m.cols());
    for (std::size_t i = 0; i < idx.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(idx[i]);
    return out;
}

Eigen::VectorXd take(const Eigen::VectorXd& v, const std::vector<Eigen::Index>& idx) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i) out(static_cast<Eigen::Index>(i)) = v(idx[i]);
    return out;
}

struct NewtonResult {
    Eigen::VectorXd phi;
    unsigned iterations = 0;
    bool converged = false;
};

NewtonResult newton(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LogisticOptions& opt) {
    const double n = static_cast<double>(x.rows());
    const double lambda = opt.ridge;
    auto objective = [&](const Eigen::VectorXd& phi) {
        const Eigen::VectorXd eta = x * phi;
        return (bernoulli_item_llh(y, eta).sum() - 0.5 * lambda * phi.squaredNorm()) / n;
    };

    NewtonResult r;
    r.phi = Eigen::VectorXd::Zero(x.cols());
    double current = objective(r.phi);
    for (unsigned it = 0; it < opt.max_iterations; ++it) {
        r.iterations = it + 1;
        const Eigen::VectorXd eta = x * r.phi;
        Eigen::VectorXd p(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            p(i) = sigmoid(eta(i));
            w(i) = p(i) * (1.0 - p(i));
        }
        const Eigen::VectorXd grad = x.transpose() * (y - p) - lambda * r.phi;
        Eigen::MatrixXd hess = x.transpose() * w.asDiagonal() * x;
        hess.diagonal().array() += lambda;
        const Eigen::VectorXd step = hess.completeOrthogonalDecomposition().solve(grad);

        double t = 1.0;
        Eigen::VectorXd next = r.phi + step;
        double value = objective(next);
        while (!(value >= current) && t > 1e-12) {
            t *= 0.5;
            next = r.phi + t * step;
            value = objective(next);
        }
        if (!(value >= current)) {
            // no ascent direction left
            r.converged = true;
            break;
        }
        const double gain = value - current;
        r.phi = next;
        current = value;
        if (gain < opt.tolerance) {
            r.converged = true;
            break;
        }
    }
    return r;
}

}  // namespace

FoldPlan FoldPlan::make(std::size_t rows, std::uint64_t seed, unsigned k) {
    if (k < 2) throw ConfigError("need at least 2 folds");
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    std::vector<std::uint32_t> order(rows);
    std::iota(order.begin(), order.end(), 0u);
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);
    plan.assignment.resize(rows);
    for (std::size_t pos = 0; pos < rows; ++pos) plan.assignment[order[pos]] = static_cast<std::uint32_t>(pos % k);
    return plan;
}

FoldPlan FoldPlan::grouped(const std::vector<RowId>& rows, std::uint64_t seed, unsigned k) {
    if (k < 2) throw ConfigError("need at least 2 folds");
    std::vector<std::uint32_t> texts;
    std::map<std::uint32_t, std::size_t> sizes;
    for (const auto& r : rows) ++sizes[r.text_id];
    for (const auto& [id, n] : sizes) texts.push_back(id);
    if (texts.size() < k)
        throw ValidationError("grouped folds need at least " + std::to_string(k) + " texts, got " +
                              std::to_string(texts.size()));
    std::mt19937_64 rng(seed);
    std::shuffle(texts.begin(), texts.end(), rng);

    std::vector<std::size_t> load(k, 0);
    std::map<std::uint32_t, std::uint32_t> fold_of;
    for (auto id : texts) {
        auto f = static_cast<std::uint32_t>(std::min_element(load.begin(), load.end()) - load.begin());
        fold_of[id] = f;
        load[f] += sizes[id];
    }
    FoldPlan plan;
    plan.k = k;
    plan.seed = seed;
    plan.assignment.reserve(rows.size());
    for (const auto& r : rows) plan.assignment.push_back(fold_of[r.text_id]);
    return plan;
}

std::vector<std::size_t> FoldPlan::fold_sizes() const {
    std::vector<std::size_t> out(k, 0);
    for (auto f : assignment) ++out.at(f);
    return out;
}

LinearFit fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    check_finite(x, y);
    if (x.rows() < x.cols())
        throw ValidationError("linear fit needs rows >= columns (" + std::to_string(x.rows()) + " < " +
                              std::to_string(x.cols()) + ")");
    LinearFit fit;
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(x);
    fit.coefficients = cod.solve(y);
    fit.rank = cod.rank();
    if (fit.rank < x.cols())
        fit.warnings.push_back("rank-deficient design (rank " + std::to_string(fit.rank) + " of " +
                               std::to_string(x.cols()) + "), using the minimum-norm solution");
    const double ssr = (y - x * fit.coefficients).squaredNorm();
    const double s2 = ssr / static_cast<double>(x.rows());
    if (s2 < kSigma2Floor) fit.warnings.push_back("residual variance below floor, clamped to 1e-12");
    fit.sigma2 = std::max(s2, kSigma2Floor);
    return fit;
}

Eigen::VectorXd gaussian_item_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& predicted, double sigma2) {
    if (!(sigma2 > 0.0)) throw DomainError("sigma2 must be positive");
    if (y.size() != predicted.size()) throw ContractError("response and prediction differ in length");
    const double base = -0.5 * std::log(2.0 * std::numbers::pi * sigma2);
    return (base - (y - predicted).array().square() / (2.0 * sigma2)).matrix();
}

double gaussian_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& predicted, double sigma2) {
    if (y.size() == 0) throw ContractError("no items to score");
    return gaussian_item_llh(y, predicted, sigma2).mean();
}

Eigen::VectorXd bernoulli_item_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    if (y.size() != eta.size()) throw ContractError("response and predictor differ in length");
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        // skip zero-weight terms so 0 * -inf never appears
        double v = 0.0;
        if (y(i) > 0.0) v += y(i) * log_sigmoid(eta(i));
        if (y(i) < 1.0) v += (1.0 - y(i)) * log_sigmoid(-eta(i));
        out(i) = v;
    }
    return out;
}

double bernoulli_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
    if (y.size() == 0) throw ContractError("no items to score");
    return bernoulli_item_llh(y, eta).mean();
}

LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LogisticOptions& options) {
    check_finite(x, y);
    if (x.rows() < x.cols())
        throw ValidationError("logistic fit needs rows >= columns (" + std::to_string(x.rows()) + " < " +
                              std::to_string(x.cols()) + ")");
    if ((y.array() < 0.0).any() || (y.array() > 1.0).any())
        throw ValidationError("logistic responses must lie in [0, 1]");

    LogisticFit fit;
    auto r = newton(x, y, options);
    const double max_eta = r.phi.size() ? (x * r.phi).cwiseAbs().maxCoeff() : 0.0;
    const bool diverging = !r.converged || !r.phi.allFinite() || r.phi.norm() > 1e6 || max_eta > 20.0;
    if (diverging && options.ridge == 0.0) {
        fit.separated = true;
        fit.warnings.push_back("separation detected, refitting with ridge penalty 1e-6");
        LogisticOptions ridge = options;
        ridge.ridge = kSeparationRidge;
        r = newton(x, y, ridge);
    }
    if (!r.converged) fit.warnings.push_back("logistic fit did not converge in " + std::to_string(r.iterations) +
                                             " iterations");
    fit.coefficients = std::move(r.phi);
    fit.iterations = r.iterations;
    fit.converged = r.converged;
    return fit;
}

double FitResult::mean_heldout_llh() const {
    if (per_item_heldout_llh.empty()) return 0.0;
    return std::accumulate(per_item_heldout_llh.begin(), per_item_heldout_llh.end(), 0.0) /
           static_cast<double>(per_item_heldout_llh.size());
}

FitResult cross_validate(const FeatureMatrix& matrix, ModelKind model, const FoldPlan& plan) {
    const auto n = static_cast<std::size_t>(matrix.values.rows());
    if (n < plan.k)
        throw ValidationError("cross-validation needs at least " + std::to_string(plan.k) + " rows, got " +
                              std::to_string(n));
    if (plan.assignment.size() != n) throw ContractError("fold plan does not match the row count");
    check_finite(matrix.values, matrix.response);

    FitResult out;
    out.model = model;
    out.column_names = matrix.column_names();
    out.rows = matrix.rows;
    out.per_item_heldout_llh.assign(n, 0.0);

    auto note = [&](const std::string& prefix, const std::vector<std::string>& warnings) {
        for (const auto& w : warnings) {
            auto msg = prefix + w;
            if (std::find(out.warnings.begin(), out.warnings.end(), msg) == out.warnings.end())
                out.warnings.push_back(std::move(msg));
        }
    };

    for (unsigned f = 0; f < plan.k; ++f) {
        std::vector<Eigen::Index> train, test;
        for (std::size_t i = 0; i < n; ++i) (plan.assignment[i] == f ? test : train).push_back(static_cast<Eigen::Index>(i));
        if (test.empty()) throw ValidationError("fold " + std::to_string(f) + " is empty");
        const auto xt = take_rows(matrix.values, train);
        const auto yt = take(matrix.response, train);
        const auto xs = take_rows(matrix.values, test);
        const auto ys = take(matrix.response, test);

        Eigen::VectorXd scores;
        if (model == ModelKind::linear) {
            auto fit = fit_linear(xt, yt);
            note("", fit.warnings);
            scores = gaussian_item_llh(ys, xs * fit.coefficients, fit.sigma2);
            out.fold_coefficients.push_back(fit.coefficients);
            out.fold_sigma2.push_back(fit.sigma2);
        } else {
            auto fit = fit_logistic(xt, yt);
            note("", fit.warnings);
            scores = bernoulli_item_llh(ys, xs * fit.coefficients);
            out.fold_coefficients.push_back(fit.coefficients);
        }
        for (std::size_t i = 0; i < test.size(); ++i)
            out.per_item_heldout_llh[static_cast<std::size_t>(test[i])] = scores(static_cast<Eigen::Index>(i));
        out.fold_heldout_llh.push_back(scores.mean());
    }

    if (model == ModelKind::linear) {
        auto fit = fit_linear(matrix.values, matrix.response);
        note("", fit.warnings);
        out.coefficients = fit.coefficients;
        out.sigma2 = fit.sigma2;
        out.train_llh = gaussian_llh(matrix.response, matrix.values * fit.coefficients, fit.sigma2);
    } else {
        auto fit = fit_logistic(matrix.values, matrix.response);
        note("", fit.warnings);
        out.coefficients = fit.coefficients;
        out.train_llh = bernoulli_llh(matrix.response, matrix.values * fit.coefficients);
    }
    return out;
}

nlohmann::json to_json(const FitResult& fit) {
    nlohmann::json j;
    j["model"] = fit.model == ModelKind::linear ? "linear" : "logistic";
    j["rows"] = fit.rows.size();
    nlohmann::json coef = nlohmann::json::object();
    nlohmann::json sd = nlohmann::json::object();
    const std::size_t folds = fit.fold_coefficients.size();
    for (std::size_t c = 0; c < fit.column_names.size(); ++c) {
        const auto i = static_cast<Eigen::Index>(c);
        coef[fit.column_names[c]] = fit.coefficients(i);
        double mean = 0.0;
        for (const auto& phi : fit.fold_coefficients) mean += phi(i);
        mean /= static_cast<double>(std::max<std::size_t>(folds, 1));
        double ss = 0.0;
        for (const auto& phi : fit.fold_coefficients) ss += (phi(i) - mean) * (phi(i) - mean);
        sd[fit.column_names[c]] = folds > 1 ? std::sqrt(ss / static_cast<double>(folds - 1)) : 0.0;
    }
    j["coefficients"] = coef;
    j["fold_coefficient_sd"] = sd;
    if (fit.sigma2) j["sigma2"] = *fit.sigma2;
    j["train_llh"] = fit.train_llh;
    j["mean_heldout_llh"] = fit.mean_heldout_llh();
    j["fold_heldout_llh"] = fit.fold_heldout_llh;
    if (!fit.fold_sigma2.empty()) j["fold_sigma2"] = fit.fold_sigma2;
    j["warnings"] = fit.warnings;
    return j;
}

}  // namespace antic
