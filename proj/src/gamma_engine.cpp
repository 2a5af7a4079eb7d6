#include "mdporder/gamma_engine.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>

#include "mdporder/error.hpp"
#include "mdporder/parallel.hpp"
#include "mdporder/rng.hpp"

namespace mdporder {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

// Prefixes ValidationError / runtime failures with the grid coordinates.
template <class Fn>
void annotated(const std::string& where, Fn&& fn) {
    try {
        fn();
    } catch (const ValidationError& e) {
        throw ValidationError(where + ": " + e.what());
    } catch (const std::exception& e) {
        throw std::runtime_error(where + ": " + e.what());
    }
}

std::string cell_label(std::size_t k, std::size_t q) {
    return "(k=" + std::to_string(k) + ", q=" + std::to_string(q) + ")";
}

std::uint64_t fit_seed(std::uint64_t seed, CcfComponent which, CcfPart part, std::size_t k, std::size_t q,
                       std::size_t b) {
    return derive_key(seed, {0xf17, static_cast<std::uint64_t>(which), static_cast<std::uint64_t>(part), k, q, b});
}

struct G2Predictions {
    std::vector<double> re;
    std::vector<double> im;
};

} // namespace

ResidualPair residual_pair(const CcfValues& g) noexcept {
    return {g.g1_re - g.g2_re * g.g3_re + g.g2_im * g.g3_im, g.g1_im - g.g2_im * g.g3_re - g.g2_re * g.g3_im};
}

ResidualPair residual_pair(const CcfModelSet& models, std::span<const double> window, std::span<const double> suffix) {
    CcfValues g;
    g.g1_re = predict_ccf(*models.g1_re, window);
    g.g1_im = predict_ccf(*models.g1_im, window);
    g.g2_re = predict_ccf(*models.g2_re, suffix);
    g.g2_im = predict_ccf(*models.g2_im, suffix);
    g.g3_re = predict_ccf(*models.g3_re, window);
    g.g3_im = predict_ccf(*models.g3_im, window);
    return residual_pair(g);
}

double pairwise_sum(std::span<const double> values) {
    if (values.size() <= 16) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const std::size_t half = values.size() / 2;
    return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

GammaCell gamma_hat(const Dataset& dataset, const SplitAssignment& split, const CcfModelSet& models, std::size_t k,
                    std::size_t q, std::size_t b) {
    const std::size_t T = dataset.length();
    require(k >= 1, "candidate order k must be at least 1");
    if (T < q + k + 2 || split.eval_ids.empty())
        throw ValidationError("empty evaluation range " + cell_label(k, q));
    std::vector<double> terms;
    terms.reserve(split.eval_ids.size() * (T - q - k - 1));
    for (std::size_t j : split.eval_ids) {
        const auto& tr = dataset[j];
        for (std::size_t t = 2; t <= T - q - k; ++t)
            terms.push_back(
                residual_pair(models, tr.chain_slice(t, t + q + k - 1), tr.chain_slice(t + q, t + q + k - 1))
                    .squared_modulus());
    }
    return {k, q, b, pairwise_sum(terms) / static_cast<double>(terms.size()), terms.size()};
}

double pi_statistic(std::span<const GammaCell> cells) {
    require(!cells.empty(), "Pi needs at least one Gamma cell");
    double best = cells.front().value;
    for (const auto& c : cells) best = std::max(best, c.value);
    return best;
}

std::vector<GammaCell> compute_gamma_grid(const Dataset& dataset, const SplitAssignment& split,
                                          std::span<const Direction> directions, const GammaGridOptions& options) {
    const std::size_t K = options.max_order;
    const std::size_t Q = options.max_lag;
    const std::size_t B = directions.size();
    const std::size_t T = dataset.length();
    const std::size_t p = dataset.state_dim();
    require(K >= 1, "K must be at least 1");
    require(B >= 1, "at least one direction is required");
    require(!split.eval_ids.empty() && !split.train_ids.empty(), "both halves of the split must be non-empty");
    for (const auto& d : directions)
        require(d.mu.size() == p && d.nu.size() == p + 1, "direction dimensions do not match the dataset");
    if (T < Q + K + 2)
        throw ValidationError("empty evaluation range " + cell_label(K, Q) + ": need Q + K <= T - 2");

    auto backend = make_backend(options.backend);
    const auto& train = split.train_ids;
    const auto& eval = split.eval_ids;

    // g2: features are windows of length k; prepared once per k, fit per (k, b).
    std::vector<std::shared_ptr<const PreparedFeatures>> g2_train(K);
    std::vector<FeatureMatrix> g2_eval(K);
    parallel_for(K, options.threads, [&](std::size_t i) {
        const std::size_t k = i + 1;
        annotated("g2 " + cell_label(k, 0), [&] {
            g2_train[i] = backend->prepare(stack_windows(dataset, train, k, 1, T - k));
            g2_eval[i] = stack_windows(dataset, eval, k, 2, T - k);
        });
    });

    std::vector<G2Predictions> g2_pred(K * B);
    parallel_for(K * B, options.threads, [&](std::size_t idx) {
        const std::size_t k = idx / B + 1;
        const std::size_t b = idx % B;
        annotated("g2 " + cell_label(k, 0), [&] {
            const auto& mu = directions[b].mu;
            std::vector<double> re, im;
            for (std::size_t j : train)
                for (std::size_t s = 1; s <= T - k; ++s) {
                    const double angle = dot(mu, dataset[j].state(s + k));
                    re.push_back(std::cos(angle));
                    im.push_back(std::sin(angle));
                }
            CcfTask task{CcfComponent::g2, CcfPart::real, k, 0, directions[b]};
            auto model_re = backend->fit(*g2_train[k - 1], re, task, fit_seed(options.seed, task.which, task.part, k, 0, b));
            task.part = CcfPart::imag;
            auto model_im = backend->fit(*g2_train[k - 1], im, task, fit_seed(options.seed, task.which, task.part, k, 0, b));
            g2_pred[idx].re = model_re->predict_rows(g2_eval[k - 1]);
            g2_pred[idx].im = model_im->predict_rows(g2_eval[k - 1]);
        });
    });

    // g1 and g3 share features: windows of length q + k starting at t in [2, T-q-k].
    const std::size_t KQ = K * (Q + 1);
    std::vector<std::shared_ptr<const PreparedFeatures>> cell_train(KQ);
    std::vector<FeatureMatrix> cell_eval(KQ);
    parallel_for(KQ, options.threads, [&](std::size_t idx) {
        const std::size_t k = idx / (Q + 1) + 1;
        const std::size_t q = idx % (Q + 1);
        annotated(cell_label(k, q), [&] {
            cell_train[idx] = backend->prepare(stack_windows(dataset, train, q + k, 2, T - q - k));
            cell_eval[idx] = stack_windows(dataset, eval, q + k, 2, T - q - k);
        });
    });

    std::vector<GammaCell> cells(KQ * B);
    parallel_for(KQ * B, options.threads, [&](std::size_t idx) {
        const std::size_t kq = idx / B;
        const std::size_t b = idx % B;
        const std::size_t k = kq / (Q + 1) + 1;
        const std::size_t q = kq % (Q + 1);
        annotated(cell_label(k, q), [&] {
            const auto& dir = directions[b];
            const std::size_t last = T - q - k;
            std::vector<double> y1_re, y1_im, y3_re, y3_im;
            for (std::size_t j : train) {
                const auto& tr = dataset[j];
                for (std::size_t t = 2; t <= last; ++t) {
                    const double past = dot(dir.nu, tr.chain_slice(t - 1, t - 1));
                    const double joint = past + dot(dir.mu, tr.state(t + q + k));
                    y1_re.push_back(std::cos(joint));
                    y1_im.push_back(std::sin(joint));
                    y3_re.push_back(std::cos(past));
                    y3_im.push_back(std::sin(past));
                }
            }
            const auto& prepared = *cell_train[kq];
            CcfTask task{CcfComponent::g1, CcfPart::real, k, q, dir};
            auto fit = [&](CcfComponent which, CcfPart part, std::span<const double> y) {
                task.which = which;
                task.part = part;
                return backend->fit(prepared, y, task, fit_seed(options.seed, which, part, k, q, b))
                    ->predict_rows(cell_eval[kq]);
            };
            const auto g1_re = fit(CcfComponent::g1, CcfPart::real, y1_re);
            const auto g1_im = fit(CcfComponent::g1, CcfPart::imag, y1_im);
            const auto g3_re = fit(CcfComponent::g3, CcfPart::real, y3_re);
            const auto g3_im = fit(CcfComponent::g3, CcfPart::imag, y3_im);

            // Eval row (j, t) uses the g2 prediction at window start s = t + q.
            const auto& g2 = g2_pred[(k - 1) * B + b];
            const std::size_t per_traj = last - 1;
            const std::size_t g2_per_traj = T - k - 1;
            std::vector<double> terms(eval.size() * per_traj);
            for (std::size_t e = 0; e < eval.size(); ++e)
                for (std::size_t r = 0; r < per_traj; ++r) {
                    const std::size_t row = e * per_traj + r;
                    const std::size_t row2 = e * g2_per_traj + r + q;
                    const CcfValues g{g1_re[row], g1_im[row], g2.re[row2], g2.im[row2], g3_re[row], g3_im[row]};
                    terms[row] = residual_pair(g).squared_modulus();
                }
            cells[idx] = {k, q, b + 1, pairwise_sum(terms) / static_cast<double>(terms.size()), terms.size()};
        });
    });
    return cells;
}

PiSequence pi_sequence_from_cells(std::span<const GammaCell> cells, std::size_t max_order) {
    PiSequence pi;
    pi.values.assign(max_order + 1, 0.0);
    pi.values[0] = 1.0;
    std::vector<bool> seen(max_order + 1, false);
    for (const auto& c : cells) {
        require(c.k >= 1 && c.k <= max_order, "Gamma cell order outside 1..K");
        pi.values[c.k] = seen[c.k] ? std::max(pi.values[c.k], c.value) : c.value;
        seen[c.k] = true;
    }
    for (std::size_t k = 1; k <= max_order; ++k)
        require(seen[k], "no Gamma cells for k=" + std::to_string(k));
    return pi;
}

PiSequence compute_pi_sequence(const Dataset& dataset, const SplitAssignment& split,
                               std::span<const Direction> directions, const GammaGridOptions& options) {
    const auto cells = compute_gamma_grid(dataset, split, directions, options);
    return pi_sequence_from_cells(cells, options.max_order);
}

} // namespace mdporder
