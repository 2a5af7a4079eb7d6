#include "mdporder/signal_order.hpp"

#include <algorithm>
#include <cmath>

#include "mdporder/error.hpp"

namespace mdporder {

double ridge_value(const RidgeSchedule& schedule, double x) {
    require(schedule.c0 > 0.0 && std::isfinite(schedule.c0), "ridge c0 must be positive");
    require(schedule.a > 0.0 && std::isfinite(schedule.a), "ridge exponent a must be positive");
    require(x >= 2.0 && std::isfinite(x), "ridge needs N_L * T >= 2");
    return schedule.c0 * std::pow(std::log(x), schedule.a / 2.0 + 1.0) * std::pow(x, -schedule.a / 2.0);
}

double ridge_value(const RidgeSchedule& schedule, std::size_t n_eval, std::size_t length) {
    require(n_eval >= 1 && length >= 1, "ridge needs positive N_L and T");
    return ridge_value(schedule, static_cast<double>(n_eval) * static_cast<double>(length));
}

SignalCurve signal_curve(const PiSequence& pi, double ridge, double eta) {
    require(pi.values.size() >= 2, "Pi sequence needs at least K = 1");
    require(pi.values[0] == 1.0, "Pi^(0) must equal 1");
    require(ridge > 0.0 && std::isfinite(ridge), "ridge must be positive");
    require(eta > 0.0 && std::isfinite(eta), "eta must be positive");
    for (double v : pi.values) require(v >= 0.0 && std::isfinite(v), "Pi values must be finite and non-negative");

    const std::size_t K = pi.values.size() - 1;
    SignalCurve curve;
    curve.eta = eta;
    const double peak = *std::max_element(pi.values.begin() + 1, pi.values.end());
    if (peak == 0.0) {
        curve.degenerate = true;
        curve.omega.assign(K, 1.0);
        return curve;
    }
    curve.ridge_used = ridge * std::pow(peak, eta);
    curve.omega.resize(K);
    auto powered = [&](std::size_t k) { return std::pow(pi.values[k] / peak, eta); };
    double previous = powered(0);
    for (std::size_t k = 1; k <= K; ++k) {
        const double current = powered(k);
        curve.omega[k - 1] = (current + ridge) / (previous + ridge);
        previous = current;
    }
    return curve;
}

SignalCurve signal_curve(const PiSequence& pi, const RidgeSchedule& schedule, double eta, std::size_t n_eval,
                         std::size_t length) {
    return signal_curve(pi, ridge_value(schedule, n_eval, length), eta);
}

OrderEstimate estimate_order(const SignalCurve& curve, double tau) {
    require(tau > 0.0 && tau < 1.0, "tau must lie in (0, 1)");
    OrderEstimate est;
    est.tau = tau;
    est.curve = curve;
    for (std::size_t k = curve.omega.size(); k >= 1; --k) {
        if (curve.omega[k - 1] <= tau) {
            est.k_hat = k;
            break;
        }
    }
    est.undetermined = !est.k_hat.has_value();
    return est;
}

} // namespace mdporder
