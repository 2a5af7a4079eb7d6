#include "mdporder/regressors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mdporder/error.hpp"
#include "mdporder/rng.hpp"

namespace mdporder {

PresortedFeatures::PresortedFeatures(FeatureMatrix features) : PreparedFeatures(std::move(features)) {
    const auto& x = matrix();
    require(x.rows < std::numeric_limits<std::uint32_t>::max(), "too many training rows");
    order_.resize(x.rows * x.cols);
    columns_.resize(x.rows * x.cols);
    for (std::size_t c = 0; c < x.cols; ++c) {
        for (std::size_t i = 0; i < x.rows; ++i) columns_[c * x.rows + i] = x(i, c);
        auto first = order_.begin() + static_cast<std::ptrdiff_t>(c * x.rows);
        auto last = first + static_cast<std::ptrdiff_t>(x.rows);
        std::iota(first, last, std::uint32_t{0});
        std::stable_sort(first, last, [&](std::uint32_t a, std::uint32_t b) { return x(a, c) < x(b, c); });
    }
}

// Grows one tree at a time over presorted column orders. Each node owns the
// same contiguous segment [begin, end) in every column's order list; a split
// stably partitions all columns, so orders stay sorted without re-sorting.
class RandomForest::Builder {
public:
    Builder(const PresortedFeatures& features, std::span<const double> targets, const ForestParams& params,
            RandomForest& forest)
        : x_(features.matrix()), features_(features), y_(targets), params_(params), forest_(forest),
          weight_(x_.rows), side_(x_.rows), columns_(x_.cols) {
        const std::size_t d = x_.cols;
        mtry_ = params.max_features == 0 ? (d + 2) / 3 : std::min(params.max_features, d);
        mtry_ = std::max<std::size_t>(mtry_, 1);
        std::iota(columns_.begin(), columns_.end(), std::size_t{0});
    }

    void grow(std::uint64_t seed) {
        Rng rng(seed);
        const std::size_t n = x_.rows;
        std::fill(weight_.begin(), weight_.end(), 0u);
        for (std::size_t i = 0; i < n; ++i) ++weight_[rng.below(n)];

        active_ = 0;
        for (auto w : weight_) active_ += w > 0;
        lists_.resize(active_ * x_.cols);
        scratch_.resize(active_);
        for (std::size_t c = 0; c < x_.cols; ++c) {
            std::uint32_t* out = lists_.data() + c * active_;
            for (std::uint32_t i : features_.order(c))
                if (weight_[i] > 0) *out++ = i;
        }

        Stats root;
        for (std::size_t i = 0; i < n; ++i) root.add(weight_[i], y_[i]);

        forest_.roots_.push_back(static_cast<std::uint32_t>(forest_.nodes_.size()));
        forest_.nodes_.emplace_back();
        stack_.clear();
        stack_.push_back({forest_.nodes_.size() - 1, 0, active_, root});
        while (!stack_.empty()) {
            const Pending node = stack_.back();
            stack_.pop_back();
            split_or_leaf(node, rng);
        }
    }

private:
    struct Stats {
        double weight = 0.0;
        double sum = 0.0;
        double sum_sq = 0.0;
        void add(double w, double y) {
            weight += w;
            sum += w * y;
            sum_sq += w * y * y;
        }
    };
    struct Pending {
        std::size_t node;
        std::size_t begin;
        std::size_t end;
        Stats stats;
    };

    std::uint32_t* list(std::size_t c) { return lists_.data() + c * active_; }

    void make_leaf(std::size_t node, const Stats& s) {
        forest_.nodes_[node].value = s.sum / s.weight;
        forest_.nodes_[node].left = -1;
    }

    void split_or_leaf(const Pending& node, Rng& rng) {
        const Stats& s = node.stats;
        const double min_leaf = static_cast<double>(params_.min_leaf);
        const double sse = s.sum_sq - s.sum * s.sum / s.weight;
        if (s.weight < 2.0 * min_leaf || sse <= 1e-12 * s.weight) return make_leaf(node.node, s);

        const double parent_score = s.sum * s.sum / s.weight;
        double best_score = parent_score + 1e-12 * std::max(1.0, std::abs(parent_score));
        std::size_t best_col = 0, best_pos = 0;
        double best_threshold = 0.0;
        bool found = false;

        for (std::size_t m = 0; m < mtry_; ++m) {
            std::swap(columns_[m], columns_[m + rng.below(columns_.size() - m)]);
            const std::size_t c = columns_[m];
            const std::uint32_t* order = list(c);
            const double* xc = features_.column(c).data();
            double wl = 0.0, sl = 0.0;
            for (std::size_t pos = node.begin; pos + 1 < node.end; ++pos) {
                const std::uint32_t i = order[pos];
                wl += weight_[i];
                sl += weight_[i] * y_[i];
                if (wl < min_leaf) continue;
                const double wr = s.weight - wl;
                if (wr < min_leaf) break;
                const double xi = xc[i];
                const double xn = xc[order[pos + 1]];
                if (!(xn > xi)) continue;
                const double sr = s.sum - sl;
                const double score = sl * sl / wl + sr * sr / wr;
                if (score > best_score) {
                    best_score = score;
                    best_col = c;
                    best_pos = pos;
                    double mid = xi + 0.5 * (xn - xi);
                    if (!(mid < xn)) mid = xi;
                    best_threshold = mid;
                    found = true;
                }
            }
        }
        if (!found) return make_leaf(node.node, s);

        const std::uint32_t* chosen = list(best_col);
        for (std::size_t pos = node.begin; pos < node.end; ++pos) side_[chosen[pos]] = pos <= best_pos;
        const std::size_t mid = best_pos + 1;
        for (std::size_t c = 0; c < x_.cols; ++c) {
            std::uint32_t* order = list(c);
            std::size_t l = node.begin, r = 0;
            for (std::size_t pos = node.begin; pos < node.end; ++pos) {
                const std::uint32_t i = order[pos];
                const std::size_t goes_left = side_[i];
                order[l] = i;
                scratch_[r] = i;
                l += goes_left;
                r += 1 - goes_left;
            }
            std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r), order + l);
        }

        Stats left, right;
        for (std::size_t pos = node.begin; pos < node.end; ++pos) {
            const std::uint32_t i = chosen[pos];
            (pos < mid ? left : right).add(weight_[i], y_[i]);
        }

        const auto left_id = forest_.nodes_.size();
        forest_.nodes_.emplace_back();
        forest_.nodes_.emplace_back();
        auto& parent = forest_.nodes_[node.node];
        parent.feature = static_cast<std::uint32_t>(best_col);
        parent.value = best_threshold;
        parent.left = static_cast<std::int32_t>(left_id);
        parent.right = static_cast<std::int32_t>(left_id + 1);
        stack_.push_back({left_id + 1, mid, node.end, right});
        stack_.push_back({left_id, node.begin, mid, left});
    }

    const FeatureMatrix& x_;
    const PresortedFeatures& features_;
    std::span<const double> y_;
    const ForestParams& params_;
    RandomForest& forest_;
    std::size_t mtry_ = 1;
    std::size_t active_ = 0;
    std::vector<std::uint32_t> weight_;
    std::vector<std::uint8_t> side_;
    std::vector<std::size_t> columns_;
    std::vector<std::uint32_t> lists_;
    std::vector<std::uint32_t> scratch_;
    std::vector<Pending> stack_;
};

std::shared_ptr<const RandomForest> RandomForest::fit(const PresortedFeatures& features,
                                                      std::span<const double> targets, const ForestParams& params,
                                                      std::uint64_t seed) {
    const auto& x = features.matrix();
    require(x.rows >= 1, "cannot fit a forest on zero rows");
    require(x.rows == targets.size(), "feature and target row counts differ");
    require(params.trees >= 1 && params.min_leaf >= 1, "invalid forest parameters");

    auto forest = std::make_shared<RandomForest>();
    forest->dim_ = x.cols;
    bool splittable = false;
    for (std::size_t c = 0; c < x.cols && !splittable; ++c) {
        const auto order = features.order(c);
        splittable = x(order.front(), c) < x(order.back(), c);
    }
    if (!splittable) {
        // no split is possible anywhere: the plain sample mean
        double sum = 0.0;
        for (double y : targets) sum += y;
        forest->nodes_.push_back({sum / static_cast<double>(targets.size()), 0, -1, -1});
        forest->roots_.push_back(0);
        return forest;
    }
    Builder builder(features, targets, params, *forest);
    for (std::size_t tree = 0; tree < params.trees; ++tree) builder.grow(derive_key(seed, {tree}));
    return forest;
}

double RandomForest::predict(std::span<const double> features) const {
    double sum = 0.0;
    for (std::uint32_t root : roots_) {
        const Node* node = &nodes_[root];
        while (node->left >= 0) node = &nodes_[features[node->feature] <= node->value ? node->left : node->right];
        sum += node->value;
    }
    return sum / static_cast<double>(roots_.size());
}

std::size_t default_knn_neighbors(std::size_t n) {
    if (n == 0) return 0;
    const auto n2 = static_cast<unsigned __int128>(n) * n;
    auto k = static_cast<std::size_t>(std::cbrt(static_cast<double>(n) * static_cast<double>(n)));
    while (k > 0 && static_cast<unsigned __int128>(k) * k * k >= n2) --k;
    while (static_cast<unsigned __int128>(k) * k * k < n2) ++k;
    return k;
}

NearestNeighbors::NearestNeighbors(const FeatureMatrix& features, std::span<const double> targets,
                                   const KnnParams& params)
    : dim_(features.cols), targets_(targets.begin(), targets.end()) {
    const std::size_t n = features.rows;
    require(n >= 1, "cannot fit nearest neighbours on zero rows");
    require(n == targets.size(), "feature and target row counts differ");
    k_ = std::min(n, params.neighbors == 0 ? default_knn_neighbors(n) : params.neighbors);

    center_.assign(dim_, 0.0);
    inv_scale_.assign(dim_, 1.0);
    for (std::size_t c = 0; c < dim_; ++c) {
        double mean = 0.0;
        for (std::size_t i = 0; i < n; ++i) mean += features(i, c);
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (std::size_t i = 0; i < n; ++i) var += (features(i, c) - mean) * (features(i, c) - mean);
        var /= static_cast<double>(n);
        center_[c] = mean;
        if (var > 0.0) inv_scale_[c] = 1.0 / std::sqrt(var);
    }
    standardized_ = features;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t c = 0; c < dim_; ++c)
            standardized_.values[i * dim_ + c] = (features(i, c) - center_[c]) * inv_scale_[c];
}

double NearestNeighbors::predict(std::span<const double> features) const {
    const std::size_t n = standardized_.rows;
    std::vector<double> query(dim_);
    for (std::size_t c = 0; c < dim_; ++c) query[c] = (features[c] - center_[c]) * inv_scale_[c];

    std::vector<std::pair<double, std::size_t>> dist(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto row = standardized_.row(i);
        double d2 = 0.0;
        for (std::size_t c = 0; c < dim_; ++c) d2 += (row[c] - query[c]) * (row[c] - query[c]);
        dist[i] = {d2, i};
    }
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_ - 1), dist.end());
    // rows tied with the k-th distance are all included
    const double radius = dist[k_ - 1].first;
    std::vector<std::size_t> chosen;
    chosen.reserve(k_);
    for (const auto& [d2, i] : dist)
        if (d2 <= radius) chosen.push_back(i);
    std::sort(chosen.begin(), chosen.end());
    double sum = 0.0;
    for (std::size_t i : chosen) sum += targets_[i];
    return sum / static_cast<double>(chosen.size());
}

} // namespace mdporder
