#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "mdporder/ccf_regression.hpp"
#include "mdporder/trajectory.hpp"

namespace mdporder {

/// Empirical deviation Gamma^(k,q)(mu_b, nu_b) averaged over the evaluation
/// half. b is 1-based.
struct GammaCell {
    std::size_t k = 0;
    std::size_t q = 0;
    std::size_t b = 0;
    double value = 0.0;
    std::size_t summand_count = 0;
};

/// values[0] = 1 by convention, values[k] = max over the (q, b) grid.
struct PiSequence {
    std::vector<double> values;
    std::size_t max_order() const noexcept { return values.empty() ? 0 : values.size() - 1; }
};

/// Predictions of the six components at one evaluation point.
struct CcfValues {
    double g1_re = 0.0, g1_im = 0.0;
    double g2_re = 0.0, g2_im = 0.0;
    double g3_re = 0.0, g3_im = 0.0;
};

/// Real and imaginary parts of g1 - g2 * g3.
struct ResidualPair {
    double re = 0.0;
    double im = 0.0;
    double squared_modulus() const noexcept { return re * re + im * im; }
};

ResidualPair residual_pair(const CcfValues& g) noexcept;
/// `window` is (X_t, ..., X_{t+q+k-1}); `suffix` is its last k steps.
ResidualPair residual_pair(const CcfModelSet& models, std::span<const double> window, std::span<const double> suffix);

/// Pairwise (cascade) summation.
double pairwise_sum(std::span<const double> values);

/// Gamma over eval trajectories and t in [2, T-q-k], normalised by the number
/// of summands.
GammaCell gamma_hat(const Dataset& dataset, const SplitAssignment& split, const CcfModelSet& models, std::size_t k,
                    std::size_t q, std::size_t b = 1);

/// Max over cells; cells must be non-empty.
double pi_statistic(std::span<const GammaCell> cells);

struct GammaGridOptions {
    std::size_t max_order = 6; // K
    std::size_t max_lag = 5;   // Q
    BackendSpec backend;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// Every cell for k = 1..K, q = 0..Q, b = 1..B, ordered k, then q, then b.
/// g2 is fit once per (k, b) and shared across q; g1 and g3 once per (k, q, b).
/// Results do not depend on the thread count.
std::vector<GammaCell> compute_gamma_grid(const Dataset& dataset, const SplitAssignment& split,
                                          std::span<const Direction> directions, const GammaGridOptions& options);

PiSequence pi_sequence_from_cells(std::span<const GammaCell> cells, std::size_t max_order);

PiSequence compute_pi_sequence(const Dataset& dataset, const SplitAssignment& split,
                               std::span<const Direction> directions, const GammaGridOptions& options);

} // namespace mdporder
