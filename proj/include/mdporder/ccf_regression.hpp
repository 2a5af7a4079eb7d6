#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mdporder/trajectory.hpp"

namespace mdporder {

/// Cross-fitting partition of trajectory indices (0-based). Models are fit on
/// train_ids and the statistic is evaluated on eval_ids. For odd N the
/// training side gets the extra trajectory.
struct SplitAssignment {
    std::vector<std::size_t> eval_ids;
    std::vector<std::size_t> train_ids;
};

SplitAssignment split_sample(std::size_t n_traj, std::uint64_t seed);
SplitAssignment split_sample(const Dataset& dataset, std::uint64_t seed);

/// One random projection pair: mu in R^p, nu in R^{p+1}.
struct Direction {
    std::vector<double> mu;
    std::vector<double> nu;
};

/// B i.i.d. standard normal direction pairs.
std::vector<Direction> draw_directions(std::size_t count, std::size_t state_dim, std::uint64_t seed);

// The six conditional characteristic function components for candidate order
// k and lag offset q, with W = (X_t, ..., X_{t+q+k-1}) and
// V = (X_{t+q}, ..., X_{t+q+k-1}):
//
//   g1 = E[exp(i(mu'S_{t+q+k} + nu'X_{t-1})) | W]
//   g2 = E[exp(i mu'S_{t+q+k}) | V]
//   g3 = E[exp(i nu'X_{t-1}) | W]
//
// each split into a real (cos) and an imaginary (sin) regression. Under
// stationarity g2 depends only on (k, mu), so its rows pool every window of
// length k and ignore q and nu.
enum class CcfComponent { g1, g2, g3 };
enum class CcfPart { real, imag };

struct CcfTask {
    CcfComponent which = CcfComponent::g1;
    CcfPart part = CcfPart::real;
    std::size_t k = 1;
    std::size_t q = 0;
    Direction direction;
};

std::string describe(const CcfTask& task);

/// Dense row-major matrix of regression features.
struct FeatureMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    double operator()(std::size_t i, std::size_t c) const { return values[i * cols + c]; }
};

/// Stacks the windows (X_s, ..., X_{s+width-1}) for every trajectory in `ids`
/// (in order) and every start s in [first_start, last_start] (1-based).
FeatureMatrix stack_windows(const Dataset& dataset, std::span<const std::size_t> ids, std::size_t width,
                            std::size_t first_start, std::size_t last_start);

struct TrainingRows {
    FeatureMatrix features;
    std::vector<double> targets;
};

/// Rows for one task, taken from the training trajectories of `split`.
/// g1/g3 use t in [2, T-q-k]; g2 uses s in [1, T-k].
TrainingRows build_training_rows(const Dataset& dataset, const SplitAssignment& split, const CcfTask& task);

/// A fitted conditional expectation estimate. Implementations are immutable
/// after fitting, so predict is safe to call concurrently.
class Regressor {
public:
    virtual ~Regressor() = default;
    virtual double predict(std::span<const double> features) const = 0;
    virtual std::size_t input_dim() const noexcept = 0;
    std::vector<double> predict_rows(const FeatureMatrix& features) const;
};

/// Dimension-checked prediction.
double predict_ccf(const Regressor& model, std::span<const double> features);

enum class BackendKind { forest, knn, oracle };

std::optional<BackendKind> parse_backend(std::string_view name);
std::string_view to_string(BackendKind kind);

struct ForestParams {
    std::size_t trees = 100;
    std::size_t min_leaf = 5;
    /// Features tried per split; 0 means ceil(d / 3).
    std::size_t max_features = 0;
};

struct KnnParams {
    /// Neighbour count; 0 means ceil(n^(2/3)).
    std::size_t neighbors = 0;
};

using CcfFunction = std::function<double(std::span<const double>)>;
/// Test-only: maps a task to its closed-form conditional expectation.
using OracleFactory = std::function<CcfFunction(const CcfTask&)>;

struct BackendSpec {
    BackendKind kind = BackendKind::forest;
    ForestParams forest;
    KnnParams knn;
    OracleFactory oracle;
};

/// Features after backend-specific preprocessing. The same prepared matrix is
/// reused for every target regressed on it (all b, both parts, g1 and g3).
class PreparedFeatures {
public:
    explicit PreparedFeatures(FeatureMatrix features) : features_(std::move(features)) {}
    virtual ~PreparedFeatures() = default;
    const FeatureMatrix& matrix() const noexcept { return features_; }

private:
    FeatureMatrix features_;
};

class CcfBackend {
public:
    virtual ~CcfBackend() = default;
    virtual std::string_view name() const noexcept = 0;
    virtual std::shared_ptr<const PreparedFeatures> prepare(FeatureMatrix features) const;
    /// `prepared` must come from this backend's prepare().
    virtual std::shared_ptr<const Regressor> fit(const PreparedFeatures& prepared, std::span<const double> targets,
                                                 const CcfTask& task, std::uint64_t seed) const = 0;
};

std::unique_ptr<CcfBackend> make_backend(const BackendSpec& spec);

std::shared_ptr<const Regressor> fit_ccf(const TrainingRows& rows, const BackendSpec& backend, const CcfTask& task,
                                         std::uint64_t seed);

/// The six fitted components for one (k, q, direction) cell.
struct CcfModelSet {
    std::shared_ptr<const Regressor> g1_re, g1_im;
    std::shared_ptr<const Regressor> g2_re, g2_im;
    std::shared_ptr<const Regressor> g3_re, g3_im;
    std::string backend;
    std::size_t training_rows = 0;
};

CcfModelSet fit_ccf_models(const Dataset& dataset, const SplitAssignment& split, std::size_t k, std::size_t q,
                           const Direction& direction, const BackendSpec& backend, std::uint64_t seed);

} // namespace mdporder
