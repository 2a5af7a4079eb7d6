#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace mdporder {

/// One observed trajectory {(S_t, A_t, R_t)}, t = 1..T.
///
/// Storage is the flattened chain X_1, ..., X_T with X_t = (S_t, A_t), so any
/// window of consecutive steps is a contiguous slice. Every time index in the
/// public interface is 1-based. Rewards are optional payload and never enter
/// the order statistic.
class Trajectory {
public:
    Trajectory(const std::vector<std::vector<double>>& states, const std::vector<double>& actions,
               std::optional<std::vector<double>> rewards = std::nullopt);

    /// Builds from a flat T x (p+1) chain buffer.
    static Trajectory from_chain(std::size_t state_dim, std::vector<double> chain,
                                 std::optional<std::vector<double>> rewards = std::nullopt);

    std::size_t length() const noexcept { return length_; }
    std::size_t state_dim() const noexcept { return state_dim_; }
    std::size_t chain_dim() const noexcept { return state_dim_ + 1; }

    std::span<const double> state(std::size_t t) const;
    double action(std::size_t t) const;
    const std::optional<std::vector<double>>& rewards() const noexcept { return rewards_; }

    /// X_{t1} || ... || X_{t2} as a view into the trajectory.
    std::span<const double> chain_slice(std::size_t t1, std::size_t t2) const;
    std::span<const double> chain() const noexcept { return chain_; }

    bool operator==(const Trajectory&) const = default;

private:
    Trajectory() = default;
    void validate() const;

    std::size_t state_dim_ = 0;
    std::size_t length_ = 0;
    std::vector<double> chain_;
    std::optional<std::vector<double>> rewards_;
};

/// X_t = (S_t^T, A_t)^T.
struct ChainVector {
    std::vector<double> values;
};

/// (X_m)_{t1}^{t2} flattened in increasing t.
struct Window {
    std::vector<double> flat;
    std::size_t first = 0;
    std::size_t last = 0;
};

ChainVector chain_vector(const Trajectory& trajectory, std::size_t t);
Window window(const Trajectory& trajectory, std::size_t t1, std::size_t t2);

/// N trajectories sharing one state dimension and one length. Either every
/// trajectory carries rewards or none does.
class Dataset {
public:
    explicit Dataset(std::vector<Trajectory> trajectories);

    std::size_t size() const noexcept { return trajectories_.size(); }
    std::size_t state_dim() const noexcept { return trajectories_.front().state_dim(); }
    std::size_t length() const noexcept { return trajectories_.front().length(); }
    bool has_rewards() const noexcept { return trajectories_.front().rewards().has_value(); }

    const Trajectory& operator[](std::size_t j) const { return trajectories_.at(j); }
    auto begin() const noexcept { return trajectories_.begin(); }
    auto end() const noexcept { return trajectories_.end(); }

    bool operator==(const Dataset&) const = default;

private:
    std::vector<Trajectory> trajectories_;
};

} // namespace mdporder
