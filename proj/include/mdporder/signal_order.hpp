#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "mdporder/gamma_engine.hpp"

namespace mdporder {

/// c_{N,T} = c0 * ln(x)^(a/2 + 1) * x^(-a/2) with x = N_L * T, the number of
/// evaluation trajectories times the trajectory length. With the default a = 1
/// the ridge vanishes while c * sqrt(x / ln x) still diverges.
struct RidgeSchedule {
    double c0 = 0.1;
    double a = 1.0;
};

double ridge_value(const RidgeSchedule& schedule, std::size_t n_eval, std::size_t length);
double ridge_value(const RidgeSchedule& schedule, double n_eval_times_length);

/// Ridge-ratio curve over k = 1..K; omega[k-1] holds the value for order k.
struct SignalCurve {
    std::vector<double> omega;
    /// c_{N,T} * (max_k Pi^(k))^eta; zero when degenerate.
    double ridge_used = 0.0;
    double eta = 3.0;
    /// Set when every Pi^(k), k >= 1, is zero; the curve is then all ones.
    bool degenerate = false;
};

struct OrderEstimate {
    std::optional<std::size_t> k_hat;
    double tau = 0.5;
    SignalCurve curve;
    bool undetermined = false;
};

/// Omega^(k) = (Pi^(k)^eta + c~) / (Pi^(k-1)^eta + c~) with the
/// semi-data-driven ridge c~ = c_{N,T} * max_k Pi^(k)^eta. Evaluated in the
/// equivalent rescaled form (Pi / max Pi)^eta + c_{N,T}, which is exactly
/// invariant to rescaling Pi^(1..K) for k >= 2. Pi^(0) = 1 stays pinned, so
/// Omega^(1) is not scale-invariant.
SignalCurve signal_curve(const PiSequence& pi, double ridge, double eta);
SignalCurve signal_curve(const PiSequence& pi, const RidgeSchedule& schedule, double eta, std::size_t n_eval,
                         std::size_t length);

/// k_hat = max{k : Omega^(k) <= tau}; undetermined when no k qualifies.
OrderEstimate estimate_order(const SignalCurve& curve, double tau);

} // namespace mdporder
