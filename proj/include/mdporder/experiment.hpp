#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdporder/ccf_regression.hpp"
#include "mdporder/gamma_engine.hpp"
#include "mdporder/signal_order.hpp"
#include "mdporder/simulators.hpp"

namespace mdporder {

struct EstimatorConfig {
    std::size_t max_order = 6; // K
    std::size_t max_lag = 5;   // Q
    /// B; defaults to floor((N T)^(1/4)).
    std::optional<std::size_t> directions;
    double eta = 3.0;
    double tau = 0.5;
    RidgeSchedule ridge;
    BackendSpec backend;
    std::uint64_t seed = 0;
    std::size_t threads = 1;
};

/// floor((N T)^(1/4)), at least 1.
std::size_t default_direction_count(std::size_t n_traj, std::size_t length);

/// Checks K >= 1, Q >= 0, B >= 1, 0 < tau < 1, eta >= 1, ridge > 0 and
/// Q + K <= T - 2 (the last keeps every evaluation range non-empty).
void validate(const EstimatorConfig& config, std::size_t length);

struct EstimateReport {
    OrderEstimate estimate;
    PiSequence pi;
    std::vector<GammaCell> cells;
    SplitAssignment split;
    std::size_t directions = 0;
    /// c_{N,T} before the data-driven rescaling.
    double base_ridge = 0.0;
};

/// split -> directions -> fits -> Pi -> Omega -> k_hat. Every random choice is
/// drawn from a fixed substream of config.seed, so reruns are identical.
/// Stage failures are rethrown with the stage name prefixed.
EstimateReport run_estimate(const Dataset& dataset, const EstimatorConfig& config);

/// {"k_hat", "undetermined", "tau", "eta", "ridge", "pi", "omega"}.
std::string estimate_json(const EstimateReport& report);
/// Columns k,q,b,value,count.
std::string gamma_grid_csv(std::span<const GammaCell> cells);
/// Columns k,omega.
std::string curve_csv(const SignalCurve& curve);
/// Reads the omega array back from estimate_json output.
SignalCurve curve_from_estimate_json(std::string_view text);

struct RepOutcome {
    std::size_t rep = 0;
    std::optional<std::size_t> k_hat;
    bool undetermined = false;
    std::optional<std::string> error;
    std::vector<double> omega;
    double seconds = 0.0;
};

/// Bins of k_hat - k0.
inline constexpr std::array<std::string_view, 9> kMcBinLabels{"-1", "0", "1", "2", "3", "4",
                                                               "other", "undetermined", "error"};

struct McReport {
    Model model = Model::model1;
    std::size_t k0 = 2;
    std::vector<RepOutcome> reps;
    /// Over determined reps only; NaN when there are none.
    double mean = 0.0;
    double mse = 0.0;
    /// Fractions of all reps, aligned with kMcBinLabels; they sum to 1.
    std::array<double, 9> bins{};
    std::size_t determined = 0;
    std::size_t undetermined = 0;
    std::size_t errors = 0;
    /// Mean Omega curve over reps that produced one.
    std::vector<double> mean_omega;
    bool timed = false;
    double total_seconds = 0.0;
    double max_seconds = 0.0;
};

struct McOptions {
    std::size_t reps = 100;
    std::size_t threads = 1;
    /// Wall-clock timing makes the outputs non-reproducible, so it is opt-in.
    bool timing = false;
    /// Defaults to true_order(spec.model).
    std::optional<std::size_t> k0;
};

/// Independent simulate -> estimate reps. Rep r uses seeds derived from
/// (spec.seed, r) only; a failing rep is recorded in the error bin.
McReport run_mc(const SimSpec& spec, const EstimatorConfig& config, const McOptions& options);

/// Header rep,k_hat,undetermined,seconds.
std::string mc_csv(const McReport& report);
std::string mc_summary_json(const McReport& report);

} // namespace mdporder
