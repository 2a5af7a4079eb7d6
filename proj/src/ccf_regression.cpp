#include "mdporder/ccf_regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mdporder/error.hpp"
#include "mdporder/regressors.hpp"
#include "mdporder/rng.hpp"

namespace mdporder {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

class ForestBackend final : public CcfBackend {
public:
    explicit ForestBackend(ForestParams params) : params_(params) {}
    std::string_view name() const noexcept override { return "forest"; }
    std::shared_ptr<const PreparedFeatures> prepare(FeatureMatrix features) const override {
        return std::make_shared<PresortedFeatures>(std::move(features));
    }
    std::shared_ptr<const Regressor> fit(const PreparedFeatures& prepared, std::span<const double> targets,
                                         const CcfTask&, std::uint64_t seed) const override {
        const auto* presorted = dynamic_cast<const PresortedFeatures*>(&prepared);
        require(presorted != nullptr, "forest backend requires features prepared by the forest backend");
        return RandomForest::fit(*presorted, targets, params_, seed);
    }

private:
    ForestParams params_;
};

class KnnBackend final : public CcfBackend {
public:
    explicit KnnBackend(KnnParams params) : params_(params) {}
    std::string_view name() const noexcept override { return "knn"; }
    std::shared_ptr<const Regressor> fit(const PreparedFeatures& prepared, std::span<const double> targets,
                                         const CcfTask&, std::uint64_t) const override {
        return std::make_shared<NearestNeighbors>(prepared.matrix(), targets, params_);
    }

private:
    KnnParams params_;
};

class OracleBackend final : public CcfBackend {
public:
    explicit OracleBackend(OracleFactory factory) : factory_(std::move(factory)) {}
    std::string_view name() const noexcept override { return "oracle"; }
    std::shared_ptr<const Regressor> fit(const PreparedFeatures& prepared, std::span<const double>,
                                         const CcfTask& task, std::uint64_t) const override {
        return std::make_shared<FunctionRegressor>(factory_(task), prepared.matrix().cols);
    }

private:
    OracleFactory factory_;
};

} // namespace

SplitAssignment split_sample(std::size_t n_traj, std::uint64_t seed) {
    require(n_traj >= 2, "sample splitting needs at least 2 trajectories");
    std::vector<std::size_t> ids(n_traj);
    std::iota(ids.begin(), ids.end(), std::size_t{0});
    Rng rng(derive_key(seed, {0x5711}));
    for (std::size_t i = n_traj - 1; i > 0; --i) std::swap(ids[i], ids[rng.below(i + 1)]);

    const std::size_t n_eval = n_traj / 2;
    SplitAssignment split;
    split.eval_ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_eval));
    split.train_ids.assign(ids.begin() + static_cast<std::ptrdiff_t>(n_eval), ids.end());
    std::sort(split.eval_ids.begin(), split.eval_ids.end());
    std::sort(split.train_ids.begin(), split.train_ids.end());
    return split;
}

SplitAssignment split_sample(const Dataset& dataset, std::uint64_t seed) { return split_sample(dataset.size(), seed); }

std::vector<Direction> draw_directions(std::size_t count, std::size_t state_dim, std::uint64_t seed) {
    require(count >= 1, "at least one direction is required");
    require(state_dim >= 1, "state dimension must be at least 1");
    std::vector<Direction> directions(count);
    for (std::size_t b = 0; b < count; ++b) {
        Rng rng(derive_key(seed, {0xd1, b}));
        directions[b].mu.resize(state_dim);
        directions[b].nu.resize(state_dim + 1);
        for (auto& v : directions[b].mu) v = rng.normal();
        for (auto& v : directions[b].nu) v = rng.normal();
    }
    return directions;
}

std::string describe(const CcfTask& task) {
    static constexpr const char* names[] = {"g1", "g2", "g3"};
    return std::string(names[static_cast<int>(task.which)]) + (task.part == CcfPart::real ? "_re" : "_im") +
           " (k=" + std::to_string(task.k) + ", q=" + std::to_string(task.q) + ")";
}

FeatureMatrix stack_windows(const Dataset& dataset, std::span<const std::size_t> ids, std::size_t width,
                            std::size_t first_start, std::size_t last_start) {
    FeatureMatrix out;
    out.cols = width * (dataset.state_dim() + 1);
    if (last_start < first_start) return out;
    out.rows = ids.size() * (last_start - first_start + 1);
    out.values.reserve(out.rows * out.cols);
    for (std::size_t j : ids) {
        const auto& tr = dataset[j];
        for (std::size_t s = first_start; s <= last_start; ++s) {
            auto slice = tr.chain_slice(s, s + width - 1);
            out.values.insert(out.values.end(), slice.begin(), slice.end());
        }
    }
    return out;
}

TrainingRows build_training_rows(const Dataset& dataset, const SplitAssignment& split, const CcfTask& task) {
    const std::size_t T = dataset.length();
    const std::size_t p = dataset.state_dim();
    const std::size_t k = task.k;
    const std::size_t q = task.q;
    require(k >= 1, "candidate order k must be at least 1");
    require(task.direction.mu.size() == p, "direction mu must have dimension p");
    require(task.which == CcfComponent::g2 || task.direction.nu.size() == p + 1,
            "direction nu must have dimension p+1");

    TrainingRows rows;
    const bool real = task.part == CcfPart::real;
    auto transform = [real](double angle) { return real ? std::cos(angle) : std::sin(angle); };

    if (task.which == CcfComponent::g2) {
        if (T <= k) throw ValidationError("no training rows for " + describe(task) + ": T too small");
        rows.features = stack_windows(dataset, split.train_ids, k, 1, T - k);
        for (std::size_t j : split.train_ids)
            for (std::size_t s = 1; s <= T - k; ++s)
                rows.targets.push_back(transform(dot(task.direction.mu, dataset[j].state(s + k))));
    } else {
        if (T < q + k + 2) throw ValidationError("no training rows for " + describe(task) + ": T too small");
        const std::size_t last = T - q - k;
        rows.features = stack_windows(dataset, split.train_ids, q + k, 2, last);
        const bool with_future = task.which == CcfComponent::g1;
        for (std::size_t j : split.train_ids) {
            const auto& tr = dataset[j];
            for (std::size_t t = 2; t <= last; ++t) {
                double angle = dot(task.direction.nu, tr.chain_slice(t - 1, t - 1));
                if (with_future) angle += dot(task.direction.mu, tr.state(t + q + k));
                rows.targets.push_back(transform(angle));
            }
        }
    }
    if (rows.targets.empty()) throw ValidationError("no training rows for " + describe(task));
    return rows;
}

std::vector<double> Regressor::predict_rows(const FeatureMatrix& features) const {
    require(features.rows == 0 || features.cols == input_dim(), "feature dimension mismatch");
    std::vector<double> out(features.rows);
    for (std::size_t i = 0; i < features.rows; ++i) out[i] = predict(features.row(i));
    return out;
}

double predict_ccf(const Regressor& model, std::span<const double> features) {
    if (features.size() != model.input_dim())
        throw ValidationError("feature dimension mismatch: model expects " + std::to_string(model.input_dim()) +
                              ", got " + std::to_string(features.size()));
    return model.predict(features);
}

std::optional<BackendKind> parse_backend(std::string_view name) {
    if (name == "forest") return BackendKind::forest;
    if (name == "knn") return BackendKind::knn;
    if (name == "oracle") return BackendKind::oracle;
    return std::nullopt;
}

std::string_view to_string(BackendKind kind) {
    switch (kind) {
    case BackendKind::forest: return "forest";
    case BackendKind::knn: return "knn";
    case BackendKind::oracle: return "oracle";
    }
    return "unknown";
}

std::shared_ptr<const PreparedFeatures> CcfBackend::prepare(FeatureMatrix features) const {
    return std::make_shared<PreparedFeatures>(std::move(features));
}

std::unique_ptr<CcfBackend> make_backend(const BackendSpec& spec) {
    switch (spec.kind) {
    case BackendKind::forest:
        require(spec.forest.trees >= 1, "forest needs at least one tree");
        require(spec.forest.min_leaf >= 1, "forest minimum leaf size must be at least 1");
        return std::make_unique<ForestBackend>(spec.forest);
    case BackendKind::knn: return std::make_unique<KnnBackend>(spec.knn);
    case BackendKind::oracle:
        require(static_cast<bool>(spec.oracle), "oracle backend needs an oracle factory");
        return std::make_unique<OracleBackend>(spec.oracle);
    }
    throw ValidationError("unknown backend");
}

std::shared_ptr<const Regressor> fit_ccf(const TrainingRows& rows, const BackendSpec& backend, const CcfTask& task,
                                         std::uint64_t seed) {
    require(rows.features.rows >= 1, "cannot fit a regressor on zero rows");
    require(rows.features.rows == rows.targets.size(), "feature and target row counts differ");
    auto impl = make_backend(backend);
    auto prepared = impl->prepare(rows.features);
    return impl->fit(*prepared, rows.targets, task, seed);
}

CcfModelSet fit_ccf_models(const Dataset& dataset, const SplitAssignment& split, std::size_t k, std::size_t q,
                           const Direction& direction, const BackendSpec& backend, std::uint64_t seed) {
    auto impl = make_backend(backend);
    CcfModelSet set;
    set.backend = std::string(impl->name());

    CcfTask task{CcfComponent::g2, CcfPart::real, k, q, direction};
    {
        auto rows = build_training_rows(dataset, split, task);
        auto prepared = impl->prepare(rows.features);
        set.g2_re = impl->fit(*prepared, rows.targets, task, derive_key(seed, {2, 0}));
        task.part = CcfPart::imag;
        rows = build_training_rows(dataset, split, task);
        set.g2_im = impl->fit(*prepared, rows.targets, task, derive_key(seed, {2, 1}));
    }
    std::shared_ptr<const PreparedFeatures> prepared;
    const std::pair<CcfComponent, std::shared_ptr<const Regressor>*> slots[] = {
        {CcfComponent::g1, &set.g1_re}, {CcfComponent::g1, &set.g1_im},
        {CcfComponent::g3, &set.g3_re}, {CcfComponent::g3, &set.g3_im}};
    for (std::size_t i = 0; i < 4; ++i) {
        task.which = slots[i].first;
        task.part = i % 2 == 0 ? CcfPart::real : CcfPart::imag;
        auto rows = build_training_rows(dataset, split, task);
        if (!prepared) {
            prepared = impl->prepare(rows.features);
            set.training_rows = rows.features.rows;
        }
        *slots[i].second =
            impl->fit(*prepared, rows.targets, task, derive_key(seed, {task.which == CcfComponent::g1 ? 1u : 3u, i % 2}));
    }
    return set;
}

} // namespace mdporder
