#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "mdporder/ccf_regression.hpp"

namespace mdporder {

/// Feature matrix plus, for every column, the row indices in ascending order
/// of that column (ties by row index). Computed once, shared by every forest
/// fit on the same rows.
class PresortedFeatures final : public PreparedFeatures {
public:
    explicit PresortedFeatures(FeatureMatrix features);
    std::span<const std::uint32_t> order(std::size_t column) const {
        return {order_.data() + column * matrix().rows, matrix().rows};
    }
    /// Column-major copy of the features.
    std::span<const double> column(std::size_t c) const {
        return {columns_.data() + c * matrix().rows, matrix().rows};
    }

private:
    std::vector<std::uint32_t> order_;
    std::vector<double> columns_;
};

/// Bagged regression trees with variance-reduction splits. Leaves predict the
/// bootstrap-weighted mean of their targets, so every prediction is a convex
/// combination of training targets.
class RandomForest final : public Regressor {
public:
    static std::shared_ptr<const RandomForest> fit(const PresortedFeatures& features, std::span<const double> targets,
                                                   const ForestParams& params, std::uint64_t seed);

    double predict(std::span<const double> features) const override;
    std::size_t input_dim() const noexcept override { return dim_; }
    std::size_t tree_count() const noexcept { return roots_.size(); }
    std::size_t node_count() const noexcept { return nodes_.size(); }

private:
    struct Node {
        double value = 0.0; // split threshold, or the leaf mean
        std::uint32_t feature = 0;
        std::int32_t left = -1; // -1 marks a leaf
        std::int32_t right = -1;
    };
    class Builder;

    std::size_t dim_ = 0;
    std::vector<Node> nodes_;
    std::vector<std::uint32_t> roots_;
};

/// k-nearest-neighbour mean on z-scored features (Euclidean metric). Rows
/// tied with the k-th distance are averaged in as well.
class NearestNeighbors final : public Regressor {
public:
    NearestNeighbors(const FeatureMatrix& features, std::span<const double> targets, const KnnParams& params);

    double predict(std::span<const double> features) const override;
    std::size_t input_dim() const noexcept override { return dim_; }
    std::size_t neighbors() const noexcept { return k_; }

private:
    std::size_t dim_ = 0;
    std::size_t k_ = 0;
    std::vector<double> center_;
    std::vector<double> inv_scale_;
    FeatureMatrix standardized_;
    std::vector<double> targets_;
};

/// smallest k with k^3 >= n^2, i.e. ceil(n^(2/3)) without rounding trouble.
std::size_t default_knn_neighbors(std::size_t n);

/// Wraps a closed-form function; used to plug exact conditional expectations
/// into the statistic.
class FunctionRegressor final : public Regressor {
public:
    FunctionRegressor(CcfFunction fn, std::size_t dim) : fn_(std::move(fn)), dim_(dim) {}
    double predict(std::span<const double> features) const override { return fn_(features); }
    std::size_t input_dim() const noexcept override { return dim_; }

private:
    CcfFunction fn_;
    std::size_t dim_;
};

} // namespace mdporder
