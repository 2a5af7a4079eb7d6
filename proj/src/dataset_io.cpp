#include "mdporder/dataset_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mdporder/error.hpp"

namespace mdporder {

namespace {

using json = nlohmann::json;

[[noreturn]] void fail_at(std::size_t line, const std::string& message) {
    throw ValidationError("line " + std::to_string(line) + ": " + message);
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const auto comma = line.find(',', start);
        fields.push_back(line.substr(start, comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

double parse_real(std::string_view text, std::size_t line, std::string_view column) {
    text = trim(text);
    if (!text.empty() && text.front() == '+') text.remove_prefix(1);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        fail_at(line, "column '" + std::string(column) + "': cannot parse '" + std::string(text) + "' as a number");
    if (!std::isfinite(value)) fail_at(line, "column '" + std::string(column) + "': non-finite value");
    return value;
}

long long parse_integer(std::string_view text, std::size_t line, std::string_view column) {
    text = trim(text);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (text.empty() || ec != std::errc() || ptr != text.data() + text.size())
        fail_at(line, "column '" + std::string(column) + "': cannot parse '" + std::string(text) + "' as an integer");
    return value;
}

// Accumulates rows in (traj, t) order and enforces the ordering rules shared
// by both formats.
class DatasetBuilder {
public:
    void add(std::size_t line, long long traj, long long t, std::vector<double> state, double action,
             std::optional<double> reward) {
        if (state_dim_ == 0) {
            if (state.empty()) fail_at(line, "state must have at least one coordinate");
            state_dim_ = state.size();
            has_rewards_ = reward.has_value();
        }
        if (state.size() != state_dim_)
            fail_at(line, "state has dimension " + std::to_string(state.size()) + ", expected " +
                              std::to_string(state_dim_));
        if (reward.has_value() != has_rewards_)
            fail_at(line, "reward must be present on every row or on none");

        if (!current_traj_ || traj != *current_traj_) {
            if (current_traj_ && traj < *current_traj_)
                fail_at(line, "rows are not sorted by trajectory id");
            flush();
            current_traj_ = traj;
            if (t != 1) fail_at(line, "trajectory " + std::to_string(traj) + " must start at t=1");
        } else if (t != next_t_) {
            fail_at(line, "expected t=" + std::to_string(next_t_) + " in trajectory " + std::to_string(traj) +
                              ", got t=" + std::to_string(t));
        }
        next_t_ = t + 1;
        chain_.insert(chain_.end(), state.begin(), state.end());
        chain_.push_back(action);
        if (reward) rewards_.push_back(*reward);
    }

    Dataset finish() {
        flush();
        require(!trajectories_.empty(), "input contains no data rows");
        return Dataset(std::move(trajectories_));
    }

private:
    void flush() {
        if (chain_.empty()) return;
        std::optional<std::vector<double>> rewards;
        if (has_rewards_) rewards = std::move(rewards_);
        trajectories_.push_back(Trajectory::from_chain(state_dim_, std::move(chain_), std::move(rewards)));
        chain_.clear();
        rewards_.clear();
    }

    std::size_t state_dim_ = 0;
    bool has_rewards_ = false;
    std::optional<long long> current_traj_;
    long long next_t_ = 1;
    std::vector<double> chain_;
    std::vector<double> rewards_;
    std::vector<Trajectory> trajectories_;
};

Dataset read_csv(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!trim(line).empty()) break;
    }
    require(!trim(line).empty(), "empty CSV input");

    const auto header = split_fields(line);
    std::vector<std::string> columns;
    for (auto h : header) columns.emplace_back(trim(h));
    if (columns.size() < 4 || columns[0] != "traj" || columns[1] != "t")
        fail_at(line_no, "header must start with 'traj,t,s1,...'");
    std::size_t p = 0;
    while (2 + p < columns.size() && columns[2 + p] == "s" + std::to_string(p + 1)) ++p;
    if (p == 0) fail_at(line_no, "header has no state columns s1..sp");
    if (2 + p >= columns.size() || columns[2 + p] != "action")
        fail_at(line_no, "unknown column '" + (2 + p < columns.size() ? columns[2 + p] : std::string()) +
                             "' (expected s" + std::to_string(p + 1) + " or action)");
    const bool has_reward = columns.size() > 3 + p;
    if (has_reward && columns[3 + p] != "reward") fail_at(line_no, "unknown column '" + columns[3 + p] + "'");
    if (columns.size() > 4 + p) fail_at(line_no, "unknown column '" + columns[4 + p] + "'");

    DatasetBuilder builder;
    std::vector<double> state(p);
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_fields(line);
        if (fields.size() != columns.size())
            fail_at(line_no, "expected " + std::to_string(columns.size()) + " fields, got " +
                                 std::to_string(fields.size()));
        const long long traj = parse_integer(fields[0], line_no, "traj");
        const long long t = parse_integer(fields[1], line_no, "t");
        for (std::size_t i = 0; i < p; ++i) state[i] = parse_real(fields[2 + i], line_no, columns[2 + i]);
        const double action = parse_real(fields[2 + p], line_no, "action");
        std::optional<double> reward;
        if (has_reward) reward = parse_real(fields[3 + p], line_no, "reward");
        builder.add(line_no, traj, t, state, action, reward);
    }
    return builder.finish();
}

double json_real(const json& value, std::size_t line, const char* key) {
    if (!value.is_number()) fail_at(line, std::string("'") + key + "' must be a number");
    const double v = value.get<double>();
    if (!std::isfinite(v)) fail_at(line, std::string("'") + key + "' is not finite");
    return v;
}

Dataset read_ndjson(std::istream& in) {
    DatasetBuilder builder;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        json row;
        try {
            row = json::parse(line);
        } catch (const json::parse_error& e) {
            fail_at(line_no, std::string("invalid JSON: ") + e.what());
        }
        if (!row.is_object()) fail_at(line_no, "expected a JSON object");
        for (const auto& item : row.items()) {
            const auto& key = item.key();
            if (key != "traj" && key != "t" && key != "state" && key != "action" && key != "reward")
                fail_at(line_no, "unknown field '" + key + "'");
        }
        for (const char* key : {"traj", "t", "state", "action"})
            if (!row.contains(key)) fail_at(line_no, std::string("missing field '") + key + "'");
        if (!row["traj"].is_number_integer()) fail_at(line_no, "'traj' must be an integer");
        if (!row["t"].is_number_integer()) fail_at(line_no, "'t' must be an integer");
        if (!row["state"].is_array()) fail_at(line_no, "'state' must be an array");
        std::vector<double> state;
        for (const auto& v : row["state"]) state.push_back(json_real(v, line_no, "state"));
        std::optional<double> reward;
        if (row.contains("reward")) reward = json_real(row["reward"], line_no, "reward");
        builder.add(line_no, row["traj"].get<long long>(), row["t"].get<long long>(), std::move(state),
                    json_real(row["action"], line_no, "action"), reward);
    }
    return builder.finish();
}

void append_real(std::string& out, double value) {
    char buffer[32];
    const int n = std::snprintf(buffer, sizeof buffer, "%.17g", value);
    out.append(buffer, static_cast<std::size_t>(n));
}

void write_csv(const Dataset& dataset, std::ostream& out) {
    const std::size_t p = dataset.state_dim();
    std::string text = "traj,t";
    for (std::size_t i = 1; i <= p; ++i) text += ",s" + std::to_string(i);
    text += dataset.has_rewards() ? ",action,reward\n" : ",action\n";
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        const auto& tr = dataset[j];
        for (std::size_t t = 1; t <= tr.length(); ++t) {
            text += std::to_string(j + 1);
            text += ',';
            text += std::to_string(t);
            for (double s : tr.state(t)) {
                text += ',';
                append_real(text, s);
            }
            text += ',';
            append_real(text, tr.action(t));
            if (tr.rewards()) {
                text += ',';
                append_real(text, (*tr.rewards())[t - 1]);
            }
            text += '\n';
        }
        out << text;
        text.clear();
    }
}

void write_ndjson(const Dataset& dataset, std::ostream& out) {
    for (std::size_t j = 0; j < dataset.size(); ++j) {
        const auto& tr = dataset[j];
        for (std::size_t t = 1; t <= tr.length(); ++t) {
            json row;
            row["traj"] = j + 1;
            row["t"] = t;
            auto s = tr.state(t);
            row["state"] = std::vector<double>(s.begin(), s.end());
            row["action"] = tr.action(t);
            if (tr.rewards()) row["reward"] = (*tr.rewards())[t - 1];
            out << row.dump() << '\n';
        }
    }
}

} // namespace

std::optional<DataFormat> parse_format(std::string_view name) {
    if (name == "csv") return DataFormat::csv;
    if (name == "ndjson" || name == "jsonl") return DataFormat::ndjson;
    return std::nullopt;
}

DataFormat format_from_path(const std::filesystem::path& path) {
    const auto ext = path.extension().string();
    if (ext == ".csv") return DataFormat::csv;
    if (ext == ".ndjson" || ext == ".jsonl") return DataFormat::ndjson;
    throw ValidationError("cannot infer data format from '" + path.string() + "'; use .csv or .ndjson");
}

Dataset read_dataset(std::istream& in, DataFormat format) {
    return format == DataFormat::csv ? read_csv(in) : read_ndjson(in);
}

Dataset read_dataset(const std::filesystem::path& path, std::optional<DataFormat> format) {
    const DataFormat fmt = format ? *format : format_from_path(path);
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open '" + path.string() + "'");
    try {
        return read_dataset(in, fmt);
    } catch (const ValidationError& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

void write_dataset(const Dataset& dataset, std::ostream& out, DataFormat format) {
    if (format == DataFormat::csv)
        write_csv(dataset, out);
    else
        write_ndjson(dataset, out);
}

void write_dataset(const Dataset& dataset, const std::filesystem::path& path, std::optional<DataFormat> format) {
    const DataFormat fmt = format ? *format : format_from_path(path);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    write_dataset(dataset, out, fmt);
    if (!out) throw std::runtime_error("failed writing '" + path.string() + "'");
}

} // namespace mdporder
