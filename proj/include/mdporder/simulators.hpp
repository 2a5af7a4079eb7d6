#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mdporder/trajectory.hpp"

namespace mdporder {

// Synthetic data-generating processes. Models 1, 2 and ohio are order-2
// decision processes; iid is an order-1 null fixture.
//
// Model 1:  S_t = 0.8 M(A_{t-1}) S_{t-2} + e_t
// Model 2:  S_t = sqrt(ln(NT)^3 / NT) M(A_{t-1}) S_{t-2} + 0.4 M(A_{t-1}) S_{t-1} + e_t
//           with M(a) = a * J_p + (1 - a) * I_p, J_p the exchange matrix,
//           e_t ~ N_p(0, (3/p) I_p) and A_t = 1(sum(S_t) > 0).
// ohio:     glucose-like AR(2) driven by sparse intake/exercise and a
//           categorical insulin action (p = 3).
//
// Every random draw comes from a stream keyed by (seed, trajectory, step, tag),
// so a dataset is a pure function of its SimSpec regardless of thread count.
enum class Model { model1, model2, ohio, iid };

std::optional<Model> parse_model(std::string_view name);
std::string_view to_string(Model model);
/// The order of the generating process: 2 for model1/model2/ohio, 1 for iid.
std::size_t true_order(Model model);

struct SimSpec {
    Model model = Model::model1;
    std::size_t n_traj = 6;
    std::size_t length = 450;
    std::size_t state_dim = 3;
    std::uint64_t seed = 0;
    std::size_t burn_in = 100;
    /// Replaces the innovation standard deviation (also used for the random
    /// initial states). Zero gives a noiseless recursion.
    std::optional<double> noise_scale_override;
    /// Overrides the two random initial states S_1, S_2 (models 1 and 2 only).
    /// These are the first two generated steps, before burn-in.
    std::vector<std::vector<double>> initial_states;
};

void validate(const SimSpec& spec);

Dataset simulate_model1(const SimSpec& spec, std::size_t threads = 1);
Dataset simulate_model2(const SimSpec& spec, std::size_t threads = 1);
Dataset simulate_ohio(const SimSpec& spec, std::size_t threads = 1);
Dataset simulate_iid(const SimSpec& spec, std::size_t threads = 1);
Dataset simulate(const SimSpec& spec, std::size_t threads = 1);

/// sqrt(ln(NT)^3 / (NT)), the shrinking lag-2 coefficient of Model 2.
double model2_lag2_coefficient(std::size_t n_traj, std::size_t length);

inline constexpr std::array<double, 5> kOhioActionPmf{0.8, 0.155, 0.03, 0.01, 0.005};
inline constexpr std::array<double, 4> kOhioLag2Coefficients{-0.377, 0.165, 0.329, -5.271};
inline constexpr std::array<double, 4> kOhioLag1Coefficients{1.145, 0.3, -4.388, -1.387};

/// Noise-free part of S_{1,t+2} given X_t and X_{t+1}.
double ohio_glucose_mean(std::span<const double> x_lag2, std::span<const double> x_lag1);

} // namespace mdporder
