#pragma once

#include "core.hpp"
#include "generators.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <memory>
#include <vector>

namespace rlmesh {

/// exp(-gamma * ||x - x'||^2). Throws on length mismatch.
double rbf_kernel(const std::vector<double>& x, const std::vector<double>& x2, double gamma);

struct RidgeConfig {
    double lambda = 0.1;
    double gamma = 1.0;
    double jitter = 1e-10;
};

/// Model-space encoding of an input field. Fields are affinely normalized
/// per problem and scaled by input_scale / sqrt(dense size) so that kernel
/// distances resolve the instance family at gamma = 1.
struct EncodingConfig {
    double input_scale = 1.0;

    static double default_scale(ProblemKind kind);
};

std::vector<double> encode_input(const Field& input, const ProblemSpec& spec,
                                 const EncodingConfig& enc);

class SurrogateModel {
public:
    virtual ~SurrogateModel() = default;
    virtual std::vector<double> predict(const std::vector<double>& encoded_input) const = 0;
    virtual int train_size() const = 0;
};

class KernelRidgeModel final : public SurrogateModel {
public:
    /// Solves (K + lambda I) alpha = U by LLT with escalating jitter; one
    /// factorization shared by every output coordinate. Relative residual
    /// above 1e-8 is an error.
    static KernelRidgeModel fit(const std::vector<std::vector<double>>& inputs,
                                const std::vector<std::vector<double>>& targets,
                                const RidgeConfig& cfg);

    std::vector<double> predict(const std::vector<double>& encoded_input) const override;
    int train_size() const override { return static_cast<int>(inputs_.rows()); }
    double fit_residual() const { return fit_residual_; }
    double lambda() const { return lambda_; }
    double gamma() const { return gamma_; }
    const Eigen::MatrixXd& dual_weights() const { return alpha_; }

private:
    Eigen::MatrixXd inputs_;  // N x d
    Eigen::MatrixXd alpha_;   // N x m
    double lambda_ = 0.1;
    double gamma_ = 1.0;
    double fit_residual_ = 0.0;
};

struct FourierRidgeConfig {
    int feature_count = 512;
    double frequency_scale = 4.0;  // Gaussian frequency std
    double lambda = 1e-3;
    std::uint64_t seed = 0;
};

class FourierFeatureRidge final : public SurrogateModel {
public:
    static FourierFeatureRidge fit(const std::vector<std::vector<double>>& inputs,
                                   const std::vector<std::vector<double>>& targets,
                                   const FourierRidgeConfig& cfg);

    std::vector<double> predict(const std::vector<double>& encoded_input) const override;
    int train_size() const override { return train_size_; }

private:
    Eigen::MatrixXd frequencies_;  // D x d
    Eigen::VectorXd phases_;       // D
    Eigen::MatrixXd weights_;      // D x m
    int train_size_ = 0;
};

/// Piecewise-linear interpolation of the observed values onto the grid;
/// constant extrapolation beyond the outermost observed nodes. 1D problems
/// only; needs at least 2 observed points.
Field interpolate_to_uniform(const LabeledSample& sample, const SpatialGrid& grid);

/// Sparse observations completed to a dense field: linear interpolation for
/// Burgers (grid positions) and Lorenz-96 (index coordinate), nearest
/// observed value for the Darcy lattice.
Field sample_to_dense(const LabeledSample& sample, const ProblemSpec& spec);

/// Dense training pairs (encoded input, completed target) from a dataset.
void dataset_to_training(const Dataset& ds, const ProblemSpec& spec, const EncodingConfig& enc,
                         std::vector<std::vector<double>>& inputs,
                         std::vector<std::vector<double>>& targets);

/// core RMSE of model predictions against dense oracle solutions.
double evaluate_model(const SurrogateModel& model, const std::vector<Instance>& test,
                      const ProblemSpec& spec, const EncodingConfig& enc);

/// Optional k-fold cross-validation over a (lambda, gamma) grid.
RidgeConfig grid_search_ridge(const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const std::vector<double>& lambdas,
                              const std::vector<double>& gammas, int folds = 3);

}  // namespace rlmesh
