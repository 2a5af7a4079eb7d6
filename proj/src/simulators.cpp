#include "mdporder/simulators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mdporder/error.hpp"
#include "mdporder/parallel.hpp"
#include "mdporder/rng.hpp"

namespace mdporder {

namespace {

enum StreamTag : std::uint64_t { kInit = 1, kInnovation = 2, kIntake = 3, kExercise = 4, kAction = 5 };

Rng step_rng(const SimSpec& spec, std::size_t traj, std::size_t step, StreamTag tag) {
    return Rng(derive_key(spec.seed, {static_cast<std::uint64_t>(spec.model), traj, step, tag}));
}

double action_rule(std::span<const double> s) {
    return std::accumulate(s.begin(), s.end(), 0.0) > 0.0 ? 1.0 : 0.0;
}

// out += coef * M(a) * s
void add_switched(std::span<double> out, double coef, double a, std::span<const double> s) {
    const std::size_t p = s.size();
    for (std::size_t i = 0; i < p; ++i) out[i] += coef * (a != 0.0 ? s[p - 1 - i] : s[i]);
}

// R_t = mean(S_{t+1}), R_T = 0.
std::vector<double> rewards_from_chain(std::span<const double> chain, std::size_t p, std::size_t length) {
    std::vector<double> rewards(length, 0.0);
    for (std::size_t t = 0; t + 1 < length; ++t) {
        auto next = chain.subspan((t + 1) * (p + 1), p);
        rewards[t] = std::accumulate(next.begin(), next.end(), 0.0) / static_cast<double>(p);
    }
    return rewards;
}

Trajectory record(const SimSpec& spec, const std::vector<double>& full_chain) {
    const std::size_t d = spec.state_dim + 1;
    std::vector<double> chain(full_chain.begin() + static_cast<std::ptrdiff_t>(spec.burn_in * d), full_chain.end());
    auto rewards = rewards_from_chain(chain, spec.state_dim, spec.length);
    return Trajectory::from_chain(spec.state_dim, std::move(chain), std::move(rewards));
}

template <class Generate>
Dataset generate_all(const SimSpec& spec, std::size_t threads, Generate&& generate) {
    std::vector<std::optional<Trajectory>> slots(spec.n_traj);
    parallel_for(spec.n_traj, threads, [&](std::size_t j) { slots[j].emplace(record(spec, generate(j))); });
    std::vector<Trajectory> trajectories;
    trajectories.reserve(spec.n_traj);
    for (auto& slot : slots) trajectories.push_back(std::move(*slot));
    return Dataset(std::move(trajectories));
}

// Shared recursion of Models 1 and 2:
// S_t = lag2 * M(A_{t-1}) S_{t-2} + lag1 * M(A_{t-1}) S_{t-1} + sigma * e_t.
Dataset simulate_switching_var(const SimSpec& spec, double lag2, double lag1, std::size_t threads) {
    const std::size_t p = spec.state_dim;
    const std::size_t d = p + 1;
    const std::size_t total = spec.burn_in + spec.length;
    const double sigma = spec.noise_scale_override.value_or(std::sqrt(3.0 / static_cast<double>(p)));

    return generate_all(spec, threads, [&](std::size_t j) {
        std::vector<double> chain(total * d, 0.0);
        auto x = [&](std::size_t step) { return std::span<double>(chain).subspan(step * d, d); };
        for (std::size_t step = 0; step < total; ++step) {
            auto cur = x(step);
            auto state = cur.first(p);
            if (step < 2) {
                if (!spec.initial_states.empty()) {
                    std::copy(spec.initial_states[step].begin(), spec.initial_states[step].end(), state.begin());
                } else {
                    Rng rng = step_rng(spec, j, step, kInit);
                    for (auto& s : state) s = sigma * rng.normal();
                }
            } else {
                const auto prev1 = x(step - 1);
                const auto prev2 = x(step - 2);
                const double a = prev1[p];
                Rng rng = step_rng(spec, j, step, kInnovation);
                for (auto& s : state) s = sigma * rng.normal();
                add_switched(state, lag2, a, prev2.first(p));
                if (lag1 != 0.0) add_switched(state, lag1, a, prev1.first(p));
            }
            cur[p] = action_rule(state);
        }
        return chain;
    });
}

} // namespace

std::optional<Model> parse_model(std::string_view name) {
    if (name == "model1") return Model::model1;
    if (name == "model2") return Model::model2;
    if (name == "ohio") return Model::ohio;
    if (name == "iid") return Model::iid;
    return std::nullopt;
}

std::string_view to_string(Model model) {
    switch (model) {
    case Model::model1: return "model1";
    case Model::model2: return "model2";
    case Model::ohio: return "ohio";
    case Model::iid: return "iid";
    }
    return "unknown";
}

std::size_t true_order(Model model) { return model == Model::iid ? 1 : 2; }

void validate(const SimSpec& spec) {
    require(spec.n_traj >= 2, "simulation needs N >= 2 trajectories");
    require(spec.length >= 10, "simulation needs T >= 10");
    require(spec.state_dim >= 1, "simulation needs p >= 1");
    if (spec.model == Model::ohio)
        require(spec.state_dim == 3, "the ohio model has a fixed state dimension p = 3");
    if (spec.noise_scale_override)
        require(std::isfinite(*spec.noise_scale_override) && *spec.noise_scale_override >= 0.0,
                "noise scale override must be a non-negative real");
    if (!spec.initial_states.empty()) {
        require(spec.model == Model::model1 || spec.model == Model::model2,
                "initial states can only be supplied for model1 and model2");
        require(spec.initial_states.size() == 2, "exactly two initial states are required");
        for (const auto& s : spec.initial_states)
            require(s.size() == spec.state_dim, "initial state dimension must equal p");
    }
}

double model2_lag2_coefficient(std::size_t n_traj, std::size_t length) {
    const double nt = static_cast<double>(n_traj) * static_cast<double>(length);
    const double log_nt = std::log(nt);
    return std::sqrt(log_nt * log_nt * log_nt / nt);
}

double ohio_glucose_mean(std::span<const double> x_lag2, std::span<const double> x_lag1) {
    require(x_lag2.size() == 4 && x_lag1.size() == 4, "ohio chain vectors have 4 entries");
    double mean = 0.0;
    for (std::size_t i = 0; i < 4; ++i)
        mean += kOhioLag2Coefficients[i] * x_lag2[i] + kOhioLag1Coefficients[i] * x_lag1[i];
    return mean;
}

Dataset simulate_model1(const SimSpec& spec, std::size_t threads) {
    validate(spec);
    require(spec.model == Model::model1, "simulate_model1 called with a different model");
    return simulate_switching_var(spec, 0.8, 0.0, threads);
}

Dataset simulate_model2(const SimSpec& spec, std::size_t threads) {
    validate(spec);
    require(spec.model == Model::model2, "simulate_model2 called with a different model");
    return simulate_switching_var(spec, model2_lag2_coefficient(spec.n_traj, spec.length), 0.4, threads);
}

Dataset simulate_ohio(const SimSpec& spec, std::size_t threads) {
    validate(spec);
    require(spec.model == Model::ohio, "simulate_ohio called with a different model");
    constexpr std::size_t d = 4;
    const std::size_t total = spec.burn_in + spec.length;
    const double sigma = spec.noise_scale_override.value_or(1.0);

    return generate_all(spec, threads, [&](std::size_t j) {
        std::vector<double> chain(total * d, 0.0);
        for (std::size_t step = 0; step < total; ++step) {
            double* x = chain.data() + step * d;
            Rng intake = step_rng(spec, j, step, kIntake);
            x[1] = intake.bernoulli(0.1) ? intake.chi_squared(10) : 0.0;
            Rng exercise = step_rng(spec, j, step, kExercise);
            x[2] = exercise.bernoulli(0.015) ? static_cast<double>(exercise.poisson(5.0)) : 0.0;
            Rng action = step_rng(spec, j, step, kAction);
            double u = action.uniform();
            std::size_t a = 0;
            while (a + 1 < kOhioActionPmf.size() && u >= kOhioActionPmf[a]) u -= kOhioActionPmf[a++];
            x[3] = static_cast<double>(a);
            if (step < 2) {
                x[0] = sigma * step_rng(spec, j, step, kInit).normal();
            } else {
                const std::span<const double> lag2(chain.data() + (step - 2) * d, d);
                const std::span<const double> lag1(chain.data() + (step - 1) * d, d);
                x[0] = ohio_glucose_mean(lag2, lag1) + sigma * step_rng(spec, j, step, kInnovation).normal();
            }
        }
        return chain;
    });
}

Dataset simulate_iid(const SimSpec& spec, std::size_t threads) {
    validate(spec);
    require(spec.model == Model::iid, "simulate_iid called with a different model");
    const std::size_t p = spec.state_dim;
    const std::size_t d = p + 1;
    const std::size_t total = spec.burn_in + spec.length;
    const double sigma = spec.noise_scale_override.value_or(1.0);

    return generate_all(spec, threads, [&](std::size_t j) {
        std::vector<double> chain(total * d, 0.0);
        for (std::size_t step = 0; step < total; ++step) {
            Rng rng = step_rng(spec, j, step, kInnovation);
            for (std::size_t i = 0; i < p; ++i) chain[step * d + i] = sigma * rng.normal();
            chain[step * d + p] = step_rng(spec, j, step, kAction).bernoulli(0.5) ? 1.0 : 0.0;
        }
        return chain;
    });
}

Dataset simulate(const SimSpec& spec, std::size_t threads) {
    switch (spec.model) {
    case Model::model1: return simulate_model1(spec, threads);
    case Model::model2: return simulate_model2(spec, threads);
    case Model::ohio: return simulate_ohio(spec, threads);
    case Model::iid: return simulate_iid(spec, threads);
    }
    throw ValidationError("unknown model");
}

} // namespace mdporder
