#pragma once

// Linear (Gaussian) and fractional-response logistic regression with k-fold
// cross-validated held-out log-likelihood. All log-likelihoods are in nats.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "antic/predictors.hpp"

namespace antic {

inline constexpr double kSigma2Floor = 1e-12;
inline constexpr unsigned kDefaultFolds = 10;

struct FoldPlan {
    unsigned k = kDefaultFolds;
    std::uint64_t seed = 0;
    std::vector<std::uint32_t> assignment;  // row -> fold

    // Uniform random partition; fold sizes differ by at most one.
    static FoldPlan make(std::size_t rows, std::uint64_t seed, unsigned k = kDefaultFolds);
    // Whole texts go to one fold; texts are shuffled, then placed greedily on
    // the currently smallest fold.
    static FoldPlan grouped(const std::vector<RowId>& rows, std::uint64_t seed, unsigned k = kDefaultFolds);

    std::vector<std::size_t> fold_sizes() const;
};

struct LinearFit {
    Eigen::VectorXd coefficients;
    double sigma2 = kSigma2Floor;
    Eigen::Index rank = 0;
    std::vector<std::string> warnings;
};

// Least squares through a complete orthogonal decomposition, so a rank
// deficient X gets the minimum-norm solution.
LinearFit fit_linear(const Eigen::MatrixXd& x, const Eigen::VectorXd& y);

// Average Gaussian log-likelihood: -0.5 ln(2 pi sigma2) - sum r^2 / (2 N sigma2).
double gaussian_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& predicted, double sigma2);
Eigen::VectorXd gaussian_item_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& predicted, double sigma2);

struct LogisticOptions {
    unsigned max_iterations = 100;
    double tolerance = 1e-10;  // on the average objective
    double ridge = 0.0;        // penalty lambda/2 |phi|^2 on the summed llh
};

struct LogisticFit {
    Eigen::VectorXd coefficients;
    unsigned iterations = 0;
    bool converged = false;
    bool separated = false;  // true when the ridge fallback was used
    std::vector<std::string> warnings;
};

inline constexpr double kSeparationRidge = 1e-6;

// Maximizes sum y ln s(x'phi) + (1 - y) ln(1 - s(x'phi)) by Newton/IRLS with
// step halving. Falls back to a ridge penalty of 1e-6 on separation.
LogisticFit fit_logistic(const Eigen::MatrixXd& x, const Eigen::VectorXd& y, const LogisticOptions& options = {});

double bernoulli_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);
Eigen::VectorXd bernoulli_item_llh(const Eigen::VectorXd& y, const Eigen::VectorXd& eta);

struct FitResult {
    ModelKind model = ModelKind::linear;
    std::vector<std::string> column_names;
    std::vector<RowId> rows;

    Eigen::VectorXd coefficients;        // full-data fit
    std::optional<double> sigma2;        // linear only
    double train_llh = 0.0;              // average over rows, full-data fit
    std::vector<double> per_item_heldout_llh;

    std::vector<Eigen::VectorXd> fold_coefficients;
    std::vector<double> fold_sigma2;     // linear only
    std::vector<double> fold_heldout_llh;  // average over each test fold
    std::vector<std::string> warnings;

    double mean_heldout_llh() const;
};

FitResult cross_validate(const FeatureMatrix& matrix, ModelKind model, const FoldPlan& plan);

nlohmann::json to_json(const FitResult& fit);

}  // namespace antic
