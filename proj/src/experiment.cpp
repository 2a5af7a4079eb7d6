#include "mdporder/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include <json.hpp>

#include "mdporder/error.hpp"
#include "mdporder/parallel.hpp"
#include "mdporder/rng.hpp"

namespace mdporder {

namespace {

using ordered_json = nlohmann::ordered_json;

enum Substream : std::uint64_t { kSplit = 1, kDirections = 2, kFits = 3, kRepData = 4, kRepEstimate = 5 };

template <class Fn>
auto stage(const char* name, Fn&& fn) {
    try {
        return fn();
    } catch (const ValidationError& e) {
        throw ValidationError(std::string(name) + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(std::string(name) + ": " + e.what());
    }
}

std::string format_real(double v) {
    char buffer[32];
    std::snprintf(buffer, sizeof buffer, "%.17g", v);
    return buffer;
}

} // namespace

std::size_t default_direction_count(std::size_t n_traj, std::size_t length) {
    const std::uint64_t nt = static_cast<std::uint64_t>(n_traj) * length;
    auto b = static_cast<std::uint64_t>(std::pow(static_cast<double>(nt), 0.25));
    auto fourth = [](std::uint64_t x) { return static_cast<unsigned __int128>(x) * x * x * x; };
    while (b > 0 && fourth(b) > nt) --b;
    while (fourth(b + 1) <= nt) ++b;
    return std::max<std::size_t>(1, b);
}

void validate(const EstimatorConfig& config, std::size_t length) {
    require(config.max_order >= 1, "K must be at least 1");
    require(!config.directions || *config.directions >= 1, "B must be at least 1");
    require(config.tau > 0.0 && config.tau < 1.0, "tau must lie in (0, 1)");
    require(config.eta >= 1.0 && std::isfinite(config.eta), "eta must be at least 1");
    require(config.ridge.c0 > 0.0 && config.ridge.a > 0.0, "ridge c0 and a must be positive");
    require(config.max_lag + config.max_order + 2 <= length,
            "Q + K must not exceed T - 2 (Q=" + std::to_string(config.max_lag) +
                ", K=" + std::to_string(config.max_order) + ", T=" + std::to_string(length) + ")");
}

EstimateReport run_estimate(const Dataset& dataset, const EstimatorConfig& config) {
    stage("config", [&] { validate(config, dataset.length()); });

    EstimateReport report;
    report.split = stage("split", [&] { return split_sample(dataset, derive_key(config.seed, {kSplit})); });
    report.directions = config.directions.value_or(default_direction_count(dataset.size(), dataset.length()));
    const auto directions = stage("directions", [&] {
        return draw_directions(report.directions, dataset.state_dim(), derive_key(config.seed, {kDirections}));
    });

    GammaGridOptions grid;
    grid.max_order = config.max_order;
    grid.max_lag = config.max_lag;
    grid.backend = config.backend;
    grid.seed = derive_key(config.seed, {kFits});
    grid.threads = config.threads;
    report.cells = stage("gamma", [&] { return compute_gamma_grid(dataset, report.split, directions, grid); });
    report.pi = pi_sequence_from_cells(report.cells, config.max_order);

    stage("signal", [&] {
        report.base_ridge = ridge_value(config.ridge, report.split.eval_ids.size(), dataset.length());
        report.estimate = estimate_order(signal_curve(report.pi, report.base_ridge, config.eta), config.tau);
        return 0;
    });
    return report;
}

std::string estimate_json(const EstimateReport& report) {
    const auto& est = report.estimate;
    ordered_json out;
    out["k_hat"] = est.k_hat ? ordered_json(*est.k_hat) : ordered_json(nullptr);
    out["undetermined"] = est.undetermined;
    out["tau"] = est.tau;
    out["eta"] = est.curve.eta;
    out["ridge"] = est.curve.ridge_used;
    out["pi"] = report.pi.values;
    out["omega"] = est.curve.omega;
    return out.dump(2) + "\n";
}

std::string gamma_grid_csv(std::span<const GammaCell> cells) {
    std::string out = "k,q,b,value,count\n";
    for (const auto& c : cells)
        out += std::to_string(c.k) + ',' + std::to_string(c.q) + ',' + std::to_string(c.b) + ',' +
               format_real(c.value) + ',' + std::to_string(c.summand_count) + '\n';
    return out;
}

std::string curve_csv(const SignalCurve& curve) {
    std::string out = "k,omega\n";
    for (std::size_t k = 1; k <= curve.omega.size(); ++k)
        out += std::to_string(k) + ',' + format_real(curve.omega[k - 1]) + '\n';
    return out;
}

SignalCurve curve_from_estimate_json(std::string_view text) {
    nlohmann::json parsed;
    try {
        parsed = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ValidationError(std::string("invalid estimate JSON: ") + e.what());
    }
    require(parsed.is_object() && parsed.contains("omega") && parsed["omega"].is_array(),
            "estimate JSON has no 'omega' array");
    SignalCurve curve;
    for (const auto& v : parsed["omega"]) {
        require(v.is_number(), "'omega' entries must be numbers");
        curve.omega.push_back(v.get<double>());
    }
    if (parsed.contains("eta") && parsed["eta"].is_number()) curve.eta = parsed["eta"].get<double>();
    if (parsed.contains("ridge") && parsed["ridge"].is_number()) curve.ridge_used = parsed["ridge"].get<double>();
    return curve;
}

McReport run_mc(const SimSpec& spec, const EstimatorConfig& config, const McOptions& options) {
    require(options.reps >= 1, "at least one rep is required");
    validate(spec);
    validate(config, spec.length);

    McReport report;
    report.model = spec.model;
    report.k0 = options.k0.value_or(true_order(spec.model));
    report.timed = options.timing;
    report.reps.resize(options.reps);

    parallel_for(options.reps, options.threads, [&](std::size_t r) {
        using clock = std::chrono::steady_clock;
        const auto start = clock::now();
        RepOutcome& out = report.reps[r];
        out.rep = r + 1;
        try {
            SimSpec rep_spec = spec;
            rep_spec.seed = derive_key(spec.seed, {kRepData, r});
            EstimatorConfig rep_config = config;
            rep_config.seed = derive_key(spec.seed, {kRepEstimate, r});
            rep_config.threads = 1;
            const auto data = simulate(rep_spec);
            const auto result = run_estimate(data, rep_config);
            out.k_hat = result.estimate.k_hat;
            out.undetermined = result.estimate.undetermined;
            out.omega = result.estimate.curve.omega;
        } catch (const std::exception& e) {
            out.error = e.what();
        }
        if (options.timing) out.seconds = std::chrono::duration<double>(clock::now() - start).count();
    });

    std::array<std::size_t, 9> counts{};
    double sum = 0.0, sum_sq = 0.0;
    std::size_t curves = 0;
    for (const auto& rep : report.reps) {
        report.total_seconds += rep.seconds;
        report.max_seconds = std::max(report.max_seconds, rep.seconds);
        if (!rep.omega.empty()) {
            if (report.mean_omega.empty()) report.mean_omega.assign(rep.omega.size(), 0.0);
            for (std::size_t k = 0; k < rep.omega.size(); ++k) report.mean_omega[k] += rep.omega[k];
            ++curves;
        }
        if (rep.error) {
            ++counts[8];
            ++report.errors;
        } else if (!rep.k_hat) {
            ++counts[7];
            ++report.undetermined;
        } else {
            const double k = static_cast<double>(*rep.k_hat);
            const double diff = k - static_cast<double>(report.k0);
            sum += k;
            sum_sq += diff * diff;
            ++report.determined;
            const auto offset = static_cast<long long>(*rep.k_hat) - static_cast<long long>(report.k0);
            ++counts[offset >= -1 && offset <= 4 ? static_cast<std::size_t>(offset + 1) : 6];
        }
    }
    for (auto& v : report.mean_omega) v /= static_cast<double>(curves);
    const auto n = static_cast<double>(options.reps);
    for (std::size_t i = 0; i < counts.size(); ++i) report.bins[i] = static_cast<double>(counts[i]) / n;
    if (report.determined > 0) {
        report.mean = sum / static_cast<double>(report.determined);
        report.mse = sum_sq / static_cast<double>(report.determined);
    } else {
        report.mean = report.mse = std::numeric_limits<double>::quiet_NaN();
    }
    return report;
}

std::string mc_csv(const McReport& report) {
    std::string out = "rep,k_hat,undetermined,seconds\n";
    for (const auto& rep : report.reps) {
        out += std::to_string(rep.rep) + ',';
        if (rep.error)
            out += "error";
        else if (rep.k_hat)
            out += std::to_string(*rep.k_hat);
        out += rep.undetermined ? ",1," : ",0,";
        if (report.timed) {
            char buffer[32];
            std::snprintf(buffer, sizeof buffer, "%.6f", rep.seconds);
            out += buffer;
        }
        out += '\n';
    }
    return out;
}

std::string mc_summary_json(const McReport& report) {
    ordered_json out;
    out["model"] = std::string(to_string(report.model));
    out["k0"] = report.k0;
    out["reps"] = report.reps.size();
    out["mean"] = std::isnan(report.mean) ? ordered_json(nullptr) : ordered_json(report.mean);
    out["mse"] = std::isnan(report.mse) ? ordered_json(nullptr) : ordered_json(report.mse);
    ordered_json bins = ordered_json::object();
    for (std::size_t i = 0; i < kMcBinLabels.size(); ++i) bins[std::string(kMcBinLabels[i])] = report.bins[i];
    out["bins"] = bins;
    out["determined"] = report.determined;
    out["undetermined"] = report.undetermined;
    out["errors"] = report.errors;
    out["mean_omega"] = report.mean_omega;
    ordered_json failures = ordered_json::array();
    for (const auto& rep : report.reps)
        if (rep.error) failures.push_back({{"rep", rep.rep}, {"message", *rep.error}});
    out["failures"] = failures;
    if (report.timed) {
        out["total_seconds"] = report.total_seconds;
        out["mean_seconds"] = report.total_seconds / static_cast<double>(report.reps.size());
        out["max_seconds"] = report.max_seconds;
    }
    return out.dump(2) + "\n";
}

} // namespace mdporder
