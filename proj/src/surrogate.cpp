#include "surrogate.hpp"

#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rlmesh {

double rbf_kernel(const std::vector<double>& x, const std::vector<double>& x2, double gamma) {
    if (x.size() != x2.size())
        throw std::invalid_argument("rbf_kernel length mismatch: " + std::to_string(x.size()) +
                                    " vs " + std::to_string(x2.size()));
    double d2 = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double d = x[i] - x2[i];
        d2 += d * d;
    }
    return std::exp(-gamma * d2);
}

double EncodingConfig::default_scale(ProblemKind kind) {
    switch (kind) {
        case ProblemKind::burgers: return 5.656854249492381;  // sqrt(32)
        case ProblemKind::darcy: return 2.0;
        case ProblemKind::lorenz96: return 2.0;
    }
    return 1.0;
}

std::vector<double> encode_input(const Field& input, const ProblemSpec& spec,
                                 const EncodingConfig& enc) {
    std::vector<double> out(input.values.begin(), input.values.end());
    double denom = std::sqrt(double(out.size()));
    switch (spec.kind) {
        case ProblemKind::burgers:
            break;
        case ProblemKind::darcy: {
            double mid = 0.5 * (spec.darcy.level_low + spec.darcy.level_high);
            double half = 0.5 * std::abs(spec.darcy.level_high - spec.darcy.level_low);
            if (half <= 0) half = 1.0;
            for (double& v : out) v = (v - mid) / half;
            break;
        }
        case ProblemKind::lorenz96:
            for (double& v : out) v -= spec.lorenz96.forcing;
            break;
    }
    double s = enc.input_scale / denom;
    for (double& v : out) v *= s;
    return out;
}

// ---------------------------------------------------------------------------
// Kernel ridge
// ---------------------------------------------------------------------------

namespace {

Eigen::MatrixXd to_matrix(const std::vector<std::vector<double>>& rows) {
    if (rows.empty()) throw std::invalid_argument("empty training set");
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows[0].size()));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows[0].size())
            throw std::invalid_argument("ragged training rows");
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    return m;
}

Eigen::MatrixXd rbf_gram(const Eigen::MatrixXd& X, double gamma) {
    Eigen::VectorXd sq = X.rowwise().squaredNorm();
    Eigen::MatrixXd K = -2.0 * (X * X.transpose());
    K.colwise() += sq;
    K.rowwise() += sq.transpose();
    return (-gamma * K.cwiseMax(0.0)).array().exp();
}

}  // namespace

KernelRidgeModel KernelRidgeModel::fit(const std::vector<std::vector<double>>& inputs,
                                       const std::vector<std::vector<double>>& targets,
                                       const RidgeConfig& cfg) {
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("fit_kernel_ridge needs matching nonempty inputs/targets");
    if (!(cfg.lambda > 0) || !(cfg.gamma > 0))
        throw std::invalid_argument("fit_kernel_ridge needs lambda > 0 and gamma > 0");

    KernelRidgeModel model;
    model.inputs_ = to_matrix(inputs);
    model.lambda_ = cfg.lambda;
    model.gamma_ = cfg.gamma;
    Eigen::MatrixXd U = to_matrix(targets);
    Eigen::MatrixXd K = rbf_gram(model.inputs_, cfg.gamma);
    const Eigen::Index n = K.rows();

    double jitter = cfg.jitter;
    Eigen::LLT<Eigen::MatrixXd> llt;
    for (int attempt = 0; attempt < 5; ++attempt) {
        Eigen::MatrixXd A = K;
        A.diagonal().array() += cfg.lambda + jitter;
        llt.compute(A);
        if (llt.info() == Eigen::Success) {
            model.alpha_ = llt.solve(U);
            Eigen::MatrixXd resid = A * model.alpha_ - U;
            double rel = resid.norm() / std::max(U.norm(), 1e-300);
            model.fit_residual_ = rel;
            if (rel <= 1e-8) return model;
        }
        jitter = (jitter == 0.0) ? 1e-10 : jitter * 100.0;
    }
    throw std::runtime_error("fit_kernel_ridge: factorization failed after jitter escalation (n=" +
                             std::to_string(n) + ")");
}

std::vector<double> KernelRidgeModel::predict(const std::vector<double>& encoded_input) const {
    if (static_cast<Eigen::Index>(encoded_input.size()) != inputs_.cols())
        throw std::invalid_argument("predict: input length " +
                                    std::to_string(encoded_input.size()) +
                                    " does not match training dimension " +
                                    std::to_string(inputs_.cols()));
    Eigen::Map<const Eigen::VectorXd> x(encoded_input.data(),
                                        static_cast<Eigen::Index>(encoded_input.size()));
    Eigen::VectorXd d2 = inputs_.rowwise().squaredNorm();
    d2.noalias() -= 2.0 * (inputs_ * x);
    d2.array() += x.squaredNorm();
    Eigen::VectorXd k = (-gamma_ * d2.cwiseMax(0.0)).array().exp();
    Eigen::VectorXd y = alpha_.transpose() * k;
    return std::vector<double>(y.data(), y.data() + y.size());
}

// ---------------------------------------------------------------------------
// Fourier-feature ridge
// ---------------------------------------------------------------------------

FourierFeatureRidge FourierFeatureRidge::fit(const std::vector<std::vector<double>>& inputs,
                                             const std::vector<std::vector<double>>& targets,
                                             const FourierRidgeConfig& cfg) {
    if (cfg.feature_count < 1)
        throw std::invalid_argument("FourierFeatureRidge needs feature_count >= 1");
    if (inputs.size() != targets.size() || inputs.empty())
        throw std::invalid_argument("FourierFeatureRidge needs matching nonempty data");

    FourierFeatureRidge model;
    Eigen::MatrixXd X = to_matrix(inputs);
    Eigen::MatrixXd U = to_matrix(targets);
    const Eigen::Index D = cfg.feature_count;
    const Eigen::Index d = X.cols();

    rng::Stream stream(cfg.seed, 21);
    model.frequencies_.resize(D, d);
    for (Eigen::Index i = 0; i < D; ++i)
        for (Eigen::Index j = 0; j < d; ++j)
            model.frequencies_(i, j) = cfg.frequency_scale * stream.next_normal();
    model.phases_.resize(D);
    constexpr double kTwoPi = 6.283185307179586476925287;
    for (Eigen::Index i = 0; i < D; ++i) model.phases_(i) = kTwoPi * stream.next_unit();

    Eigen::MatrixXd Z = (X * model.frequencies_.transpose()).rowwise() +
                        model.phases_.transpose();
    Z = Z.array().cos() * std::sqrt(2.0 / double(D));

    Eigen::MatrixXd A = Z.transpose() * Z;
    A.diagonal().array() += cfg.lambda;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    if (llt.info() != Eigen::Success)
        throw std::runtime_error("FourierFeatureRidge: normal-equation factorization failed");
    model.weights_ = llt.solve(Z.transpose() * U);
    model.train_size_ = static_cast<int>(X.rows());
    return model;
}

std::vector<double> FourierFeatureRidge::predict(const std::vector<double>& encoded_input) const {
    if (static_cast<Eigen::Index>(encoded_input.size()) != frequencies_.cols())
        throw std::invalid_argument("FourierFeatureRidge predict: input length mismatch");
    Eigen::Map<const Eigen::VectorXd> x(encoded_input.data(),
                                        static_cast<Eigen::Index>(encoded_input.size()));
    Eigen::VectorXd z = (frequencies_ * x + phases_).array().cos() *
                        std::sqrt(2.0 / double(frequencies_.rows()));
    Eigen::VectorXd y = weights_.transpose() * z;
    return std::vector<double>(y.data(), y.data() + y.size());
}

// ---------------------------------------------------------------------------
// Sparse-to-dense completion
// ---------------------------------------------------------------------------

Field interpolate_to_uniform(const LabeledSample& sample, const SpatialGrid& grid) {
    if (sample.observed.size() != sample.mask.indices.size())
        throw std::invalid_argument("interpolate_to_uniform: observed/mask size mismatch");
    if (sample.observed.size() < 2)
        throw std::invalid_argument("interpolate_to_uniform needs at least 2 observed points");

    std::vector<std::pair<double, double>> pts;
    pts.reserve(sample.observed.size());
    for (std::size_t i = 0; i < sample.observed.size(); ++i) {
        int idx = sample.mask.indices[i];
        if (idx < 0 || idx >= grid.size())
            throw std::invalid_argument("interpolate_to_uniform: mask index out of range");
        pts.emplace_back(grid.coords[static_cast<std::size_t>(idx)], sample.observed[i]);
    }
    std::sort(pts.begin(), pts.end());

    Field out;
    out.values.reserve(grid.coords.size());
    std::size_t hi = 0;
    for (double q : grid.coords) {
        if (q <= pts.front().first) {
            out.values.push_back(pts.front().second);
            continue;
        }
        if (q >= pts.back().first) {
            out.values.push_back(pts.back().second);
            continue;
        }
        while (pts[hi].first < q) ++hi;
        const auto& [xr, yr] = pts[hi];
        const auto& [xl, yl] = pts[hi - 1];
        double w = (q - xl) / (xr - xl);
        out.values.push_back(yl + w * (yr - yl));
    }
    return out;
}

namespace {

Field nearest_fill_2d(const LabeledSample& sample, int n) {
    if (sample.observed.empty())
        throw std::invalid_argument("nearest fill needs at least one observed point");
    struct Pt { int i, j; double v; };
    std::vector<Pt> pts;
    pts.reserve(sample.observed.size());
    for (std::size_t k = 0; k < sample.observed.size(); ++k) {
        int idx = sample.mask.indices[k];
        pts.push_back({idx / n, idx % n, sample.observed[k]});
    }
    std::sort(pts.begin(), pts.end(),
              [n](const Pt& a, const Pt& b) { return a.i * n + a.j < b.i * n + b.j; });
    Field out;
    out.values.resize(static_cast<std::size_t>(n) * static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            long best = std::numeric_limits<long>::max();
            double val = 0.0;
            for (const auto& p : pts) {
                long di = i - p.i, dj = j - p.j;
                long d2 = di * di + dj * dj;
                if (d2 < best) { best = d2; val = p.v; }
            }
            out.values[static_cast<std::size_t>(i) * static_cast<std::size_t>(n) +
                       static_cast<std::size_t>(j)] = val;
        }
    }
    return out;
}

Field interp_index_1d(const LabeledSample& sample, int n) {
    if (sample.observed.size() < 2)
        throw std::invalid_argument("index interpolation needs at least 2 observed points");
    std::vector<std::pair<double, double>> pts;
    pts.reserve(sample.observed.size());
    for (std::size_t k = 0; k < sample.observed.size(); ++k)
        pts.emplace_back(double(sample.mask.indices[k]), sample.observed[k]);
    std::sort(pts.begin(), pts.end());
    Field out;
    out.values.reserve(static_cast<std::size_t>(n));
    for (int q = 0; q < n; ++q) {
        double qq = double(q);
        if (qq <= pts.front().first) { out.values.push_back(pts.front().second); continue; }
        if (qq >= pts.back().first) { out.values.push_back(pts.back().second); continue; }
        std::size_t hi = 0;
        while (pts[hi].first < qq) ++hi;
        double w = (qq - pts[hi - 1].first) / (pts[hi].first - pts[hi - 1].first);
        out.values.push_back(pts[hi - 1].second + w * (pts[hi].second - pts[hi - 1].second));
    }
    return out;
}

}  // namespace

Field sample_to_dense(const LabeledSample& sample, const ProblemSpec& spec) {
    switch (spec.kind) {
        case ProblemKind::burgers:
            return interpolate_to_uniform(sample, SpatialGrid::uniform(spec.burgers.grid_n));
        case ProblemKind::darcy:
            return nearest_fill_2d(sample, spec.darcy.grid_n);
        case ProblemKind::lorenz96:
            return interp_index_1d(sample, spec.lorenz96.dim);
    }
    throw std::logic_error("sample_to_dense: unreachable");
}

void dataset_to_training(const Dataset& ds, const ProblemSpec& spec, const EncodingConfig& enc,
                         std::vector<std::vector<double>>& inputs,
                         std::vector<std::vector<double>>& targets) {
    inputs.clear();
    targets.clear();
    inputs.reserve(ds.samples.size());
    targets.reserve(ds.samples.size());
    for (const auto& s : ds.samples) {
        inputs.push_back(encode_input(s.input, spec, enc));
        targets.push_back(sample_to_dense(s, spec).values);
    }
}

double evaluate_model(const SurrogateModel& model, const std::vector<Instance>& test,
                      const ProblemSpec& spec, const EncodingConfig& enc) {
    if (test.empty()) throw std::invalid_argument("evaluate_model: empty test set");
    std::vector<Field> preds, truths;
    preds.reserve(test.size());
    truths.reserve(test.size());
    for (const auto& inst : test) {
        Field p;
        p.values = model.predict(encode_input(inst.input, spec, enc));
        preds.push_back(std::move(p));
        truths.push_back(inst.dense_solution);
    }
    return rmse(preds, truths);
}

RidgeConfig grid_search_ridge(const std::vector<std::vector<double>>& inputs,
                              const std::vector<std::vector<double>>& targets,
                              const std::vector<double>& lambdas,
                              const std::vector<double>& gammas, int folds) {
    if (inputs.size() < 2 || folds < 2)
        throw std::invalid_argument("grid_search_ridge needs >= 2 samples and >= 2 folds");
    folds = std::min<int>(folds, static_cast<int>(inputs.size()));
    RidgeConfig best;
    double best_err = std::numeric_limits<double>::infinity();
    for (double lambda : lambdas) {
        for (double gamma : gammas) {
            double err = 0.0;
            long count = 0;
            for (int f = 0; f < folds; ++f) {
                std::vector<std::vector<double>> xin, yin;
                std::vector<std::size_t> hold;
                for (std::size_t i = 0; i < inputs.size(); ++i) {
                    if (static_cast<int>(i % static_cast<std::size_t>(folds)) == f)
                        hold.push_back(i);
                    else {
                        xin.push_back(inputs[i]);
                        yin.push_back(targets[i]);
                    }
                }
                if (xin.empty() || hold.empty()) continue;
                auto model = KernelRidgeModel::fit(xin, yin, {lambda, gamma, 1e-10});
                for (std::size_t i : hold) {
                    auto p = model.predict(inputs[i]);
                    for (std::size_t j = 0; j < p.size(); ++j) {
                        double d = p[j] - targets[i][j];
                        err += d * d;
                        ++count;
                    }
                }
            }
            err = std::sqrt(err / double(std::max<long>(count, 1)));
            if (err < best_err) {
                best_err = err;
                best = {lambda, gamma, 1e-10};
            }
        }
    }
    return best;
}

}  // namespace rlmesh
