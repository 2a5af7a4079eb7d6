#include "mdporder/cli.hpp"

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "mdporder/dataset_io.hpp"
#include "mdporder/error.hpp"
#include "mdporder/experiment.hpp"

namespace mdporder {

namespace {

struct EstimatorFlags {
    std::size_t max_order = 6;
    std::size_t max_lag = 5;
    std::size_t directions = 0;
    double eta = 3.0;
    double tau = 0.5;
    double c0 = 0.1;
    double ridge_exponent = 1.0;
    std::string backend = "forest";
    std::size_t trees = 100;
    std::size_t min_leaf = 5;
    std::size_t knn_k = 0;
    std::size_t threads = 0;

    void attach(CLI::App* app) {
        app->add_option("-K,--max-order", max_order, "largest candidate order K")->capture_default_str();
        app->add_option("-Q,--max-lag", max_lag, "largest lag offset Q")->capture_default_str();
        app->add_option("-B,--directions", directions, "number of random directions (0: floor((NT)^(1/4)))")
            ->capture_default_str();
        app->add_option("--eta", eta, "power applied to Pi in the signal ratio")->capture_default_str();
        app->add_option("--tau", tau, "threshold on the signal curve, in (0, 1)")->capture_default_str();
        app->add_option("--c0", c0, "ridge scale c0")->capture_default_str();
        app->add_option("--ridge-exponent", ridge_exponent, "ridge rate exponent a")->capture_default_str();
        app->add_option("--backend", backend, "regression backend")
            ->check(CLI::IsMember({"forest", "knn"}))
            ->capture_default_str();
        app->add_option("--trees", trees, "forest: number of trees")->capture_default_str();
        app->add_option("--min-leaf", min_leaf, "forest: minimum leaf size")->capture_default_str();
        app->add_option("--knn-k", knn_k, "knn: neighbour count (0: ceil(n^(2/3)))")->capture_default_str();
        app->add_option("--threads", threads, "worker threads (0: all cores; MDPORDER_THREADS overrides)")
            ->capture_default_str();
    }

    EstimatorConfig config(std::uint64_t seed) const {
        EstimatorConfig c;
        c.max_order = max_order;
        c.max_lag = max_lag;
        if (directions > 0) c.directions = directions;
        c.eta = eta;
        c.tau = tau;
        c.ridge = {c0, ridge_exponent};
        c.backend.kind = *parse_backend(backend);
        c.backend.forest.trees = trees;
        c.backend.forest.min_leaf = min_leaf;
        c.backend.knn.neighbors = knn_k;
        c.seed = seed;
        c.threads = resolved_threads();
        return c;
    }

    std::size_t resolved_threads() const {
        if (const char* env = std::getenv("MDPORDER_THREADS"); env && *env) {
            try {
                return static_cast<std::size_t>(std::stoul(env));
            } catch (const std::exception&) {
                throw ValidationError(std::string("MDPORDER_THREADS is not a number: ") + env);
            }
        }
        return threads;
    }
};

struct SimFlags {
    std::string model = "model1";
    std::size_t n = 6;
    std::size_t t = 450;
    std::size_t p = 3;
    std::size_t burn_in = 100;
    std::optional<double> noise_scale;

    void attach(CLI::App* app) {
        app->add_option("--model", model, "generating model")
            ->check(CLI::IsMember({"model1", "model2", "ohio", "iid"}))
            ->capture_default_str();
        app->add_option("--n", n, "number of trajectories N")->capture_default_str();
        app->add_option("--t", t, "trajectory length T")->capture_default_str();
        app->add_option("--p", p, "state dimension p (ohio requires 3)")->capture_default_str();
        app->add_option("--burn-in", burn_in, "discarded warm-up steps")->capture_default_str();
        app->add_option("--noise-scale", noise_scale, "override the innovation standard deviation");
    }

    SimSpec spec(std::uint64_t seed) const {
        SimSpec s;
        s.model = *parse_model(model);
        s.n_traj = n;
        s.length = t;
        s.state_dim = p;
        s.seed = seed;
        s.burn_in = burn_in;
        s.noise_scale_override = noise_scale;
        return s;
    }
};

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    out << text;
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path + "'");
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::optional<DataFormat> format_flag(const std::string& name) {
    if (name.empty()) return std::nullopt;
    return parse_format(name);
}

std::string sidecar_path(const std::string& csv_path) {
    std::filesystem::path path(csv_path);
    path.replace_extension(".json");
    return path.string();
}

int run(int argc, char** argv) {
    CLI::App app{"Consistent order estimation for Markov decision processes from offline trajectories."};
    app.name("mdporder");
    app.require_subcommand(1);

    std::uint64_t seed = 0;
    std::string format;

    auto* simulate_cmd = app.add_subcommand("simulate", "generate a synthetic dataset");
    SimFlags sim_flags;
    std::string sim_out;
    sim_flags.attach(simulate_cmd);
    simulate_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    simulate_cmd->add_option("--out", sim_out, "output file (.csv or .ndjson)")->required();
    simulate_cmd->add_option("--format", format, "csv or ndjson (default: from extension)")
        ->check(CLI::IsMember({"csv", "ndjson"}));

    auto* estimate_cmd = app.add_subcommand("estimate", "estimate the order of a dataset");
    EstimatorFlags est_flags;
    std::string data_path, est_out, dump_gamma;
    estimate_cmd->add_option("--data", data_path, "input trajectories (.csv or .ndjson)")->required();
    estimate_cmd->add_option("--format", format, "csv or ndjson (default: from extension)")
        ->check(CLI::IsMember({"csv", "ndjson"}));
    estimate_cmd->add_option("--seed", seed, "random seed")->capture_default_str();
    estimate_cmd->add_option("--out", est_out, "result JSON (default: stdout)");
    estimate_cmd->add_option("--dump-gamma", dump_gamma, "write every Gamma cell as CSV (k,q,b,value,count)");
    est_flags.attach(estimate_cmd);

    auto* mc_cmd = app.add_subcommand("mc", "Monte Carlo study: repeated simulate + estimate");
    SimFlags mc_sim;
    EstimatorFlags mc_est;
    std::size_t reps = 100;
    std::size_t k0 = 0;
    bool timing = false;
    std::string mc_out, mc_summary;
    mc_sim.attach(mc_cmd);
    mc_est.attach(mc_cmd);
    mc_cmd->add_option("--reps", reps, "number of repetitions")->capture_default_str();
    mc_cmd->add_option("--seed", seed, "master seed")->capture_default_str();
    mc_cmd->add_option("--k0", k0, "true order for the error table (0: the model's order)")->capture_default_str();
    mc_cmd->add_flag("--timing", timing, "record wall-clock seconds (outputs are then not reproducible)");
    mc_cmd->add_option("--out", mc_out, "per-rep CSV (rep,k_hat,undetermined,seconds)")->required();
    mc_cmd->add_option("--summary", mc_summary, "summary JSON (default: --out with a .json extension)");

    auto* curve_cmd = app.add_subcommand("curve", "emit the signal curve as CSV (k,omega)");
    EstimatorFlags curve_flags;
    std::string result_path, curve_data, curve_out;
    auto* result_opt = curve_cmd->add_option("--result", result_path, "JSON written by `estimate`");
    auto* data_opt = curve_cmd->add_option("--data", curve_data, "estimate from trajectories instead");
    result_opt->excludes(data_opt);
    curve_cmd->add_option("--format", format, "csv or ndjson (default: from extension)")
        ->check(CLI::IsMember({"csv", "ndjson"}));
    curve_cmd->add_option("--seed", seed, "random seed (with --data)")->capture_default_str();
    curve_cmd->add_option("--out", curve_out, "output CSV (default: stdout)");
    curve_flags.attach(curve_cmd);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        if (code != 0) std::cerr << app.help();
        return code == 0 ? 0 : 1;
    }

    if (simulate_cmd->parsed()) {
        const auto data = simulate(sim_flags.spec(seed));
        write_dataset(data, sim_out, format_flag(format));
    } else if (estimate_cmd->parsed()) {
        const auto data = read_dataset(data_path, format_flag(format));
        const auto report = run_estimate(data, est_flags.config(seed));
        if (!dump_gamma.empty()) write_text(dump_gamma, gamma_grid_csv(report.cells));
        write_text(est_out, estimate_json(report));
    } else if (mc_cmd->parsed()) {
        const auto spec = mc_sim.spec(seed);
        McOptions options;
        options.reps = reps;
        options.threads = mc_est.resolved_threads();
        options.timing = timing;
        if (k0 > 0) options.k0 = k0;
        const auto report = run_mc(spec, mc_est.config(seed), options);
        write_text(mc_out, mc_csv(report));
        write_text(mc_summary.empty() ? sidecar_path(mc_out) : mc_summary, mc_summary_json(report));
    } else if (curve_cmd->parsed()) {
        SignalCurve curve;
        if (!result_path.empty()) {
            curve = curve_from_estimate_json(read_text(result_path));
        } else {
            require(!curve_data.empty(), "curve needs --result or --data");
            const auto data = read_dataset(curve_data, format_flag(format));
            curve = run_estimate(data, curve_flags.config(seed)).estimate.curve;
        }
        write_text(curve_out, curve_csv(curve));
    }
    return 0;
}

} // namespace

int cli_main(int argc, char** argv) {
    try {
        return run(argc, argv);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << '\n';
        return 2;
    }
}

int cli_main(const std::vector<std::string>& args) {
    std::vector<std::string> storage;
    storage.reserve(args.size() + 1);
    storage.emplace_back("mdporder");
    storage.insert(storage.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& s : storage) argv.push_back(s.data());
    return cli_main(static_cast<int>(argv.size()), argv.data());
}

} // namespace mdporder
