#include "mdporder/trajectory.hpp"

#include <cmath>
#include <string>

#include "mdporder/error.hpp"

namespace mdporder {

namespace {

bool all_finite(std::span<const double> values) {
    for (double v : values)
        if (!std::isfinite(v)) return false;
    return true;
}

} // namespace

Trajectory::Trajectory(const std::vector<std::vector<double>>& states, const std::vector<double>& actions,
                       std::optional<std::vector<double>> rewards)
    : rewards_(std::move(rewards)) {
    require(!states.empty(), "trajectory must contain at least one time step");
    require(states.size() == actions.size(), "trajectory states and actions differ in length");
    state_dim_ = states.front().size();
    length_ = states.size();
    require(state_dim_ >= 1, "state dimension must be at least 1");
    chain_.reserve(length_ * (state_dim_ + 1));
    for (std::size_t t = 0; t < length_; ++t) {
        if (states[t].size() != state_dim_)
            throw ValidationError("state at t=" + std::to_string(t + 1) + " has dimension " +
                                  std::to_string(states[t].size()) + ", expected " + std::to_string(state_dim_));
        chain_.insert(chain_.end(), states[t].begin(), states[t].end());
        chain_.push_back(actions[t]);
    }
    validate();
}

Trajectory Trajectory::from_chain(std::size_t state_dim, std::vector<double> chain,
                                  std::optional<std::vector<double>> rewards) {
    require(state_dim >= 1, "state dimension must be at least 1");
    require(!chain.empty() && chain.size() % (state_dim + 1) == 0,
            "chain buffer size is not a positive multiple of p+1");
    Trajectory out;
    out.state_dim_ = state_dim;
    out.length_ = chain.size() / (state_dim + 1);
    out.chain_ = std::move(chain);
    out.rewards_ = std::move(rewards);
    out.validate();
    return out;
}

void Trajectory::validate() const {
    if (rewards_ && rewards_->size() != length_) throw ValidationError("trajectory rewards and states differ in length");
    require(all_finite(chain_), "trajectory contains non-finite state or action values");
    if (rewards_) require(all_finite(*rewards_), "trajectory contains non-finite rewards");
}

std::span<const double> Trajectory::state(std::size_t t) const {
    return chain_slice(t, t).first(state_dim_);
}

double Trajectory::action(std::size_t t) const { return chain_slice(t, t).back(); }

std::span<const double> Trajectory::chain_slice(std::size_t t1, std::size_t t2) const {
    if (t1 < 1 || t2 < t1 || t2 > length_)
        throw ValidationError("invalid window [" + std::to_string(t1) + ", " + std::to_string(t2) +
                              "] for trajectory of length " + std::to_string(length_));
    const std::size_t d = chain_dim();
    return std::span<const double>(chain_).subspan((t1 - 1) * d, (t2 - t1 + 1) * d);
}

ChainVector chain_vector(const Trajectory& trajectory, std::size_t t) {
    auto slice = trajectory.chain_slice(t, t);
    return {{slice.begin(), slice.end()}};
}

Window window(const Trajectory& trajectory, std::size_t t1, std::size_t t2) {
    auto slice = trajectory.chain_slice(t1, t2);
    return {{slice.begin(), slice.end()}, t1, t2};
}

Dataset::Dataset(std::vector<Trajectory> trajectories) : trajectories_(std::move(trajectories)) {
    require(trajectories_.size() >= 2, "dataset needs at least 2 trajectories for sample splitting");
    const auto& first = trajectories_.front();
    for (std::size_t j = 0; j < trajectories_.size(); ++j) {
        const auto& tr = trajectories_[j];
        const std::string label = "trajectory " + std::to_string(j + 1);
        if (tr.state_dim() != first.state_dim())
            throw ValidationError(label + " has state dimension " + std::to_string(tr.state_dim()) + ", expected " +
                                  std::to_string(first.state_dim()));
        if (tr.length() != first.length())
            throw ValidationError(label + " has length " + std::to_string(tr.length()) + ", expected " +
                                  std::to_string(first.length()) + " (ragged trajectories)");
        if (tr.rewards().has_value() != first.rewards().has_value())
            throw ValidationError(label + ": rewards must be present on all trajectories or on none");
    }
}

} // namespace mdporder
