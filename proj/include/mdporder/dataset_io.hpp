#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string_view>

#include "mdporder/trajectory.hpp"

namespace mdporder {

// On-disk trajectory formats.
//
// csv:    header `traj,t,s1,...,sp,action[,reward]`, one row per time step,
//         rows sorted by (traj, t) with t = 1..T contiguous per trajectory.
// ndjson: one object per time step,
//         {"traj": int, "t": int, "state": [...], "action": x, "reward": x}
//         where "reward" is optional.
//
// Writers emit 17 significant digits (csv) or shortest round-trip decimals
// (ndjson), so write followed by read reproduces every value exactly.
enum class DataFormat { csv, ndjson };

std::optional<DataFormat> parse_format(std::string_view name);
/// Infers the format from the file extension (.csv, .ndjson, .jsonl).
DataFormat format_from_path(const std::filesystem::path& path);

Dataset read_dataset(std::istream& in, DataFormat format);
Dataset read_dataset(const std::filesystem::path& path, std::optional<DataFormat> format = std::nullopt);

void write_dataset(const Dataset& dataset, std::ostream& out, DataFormat format);
void write_dataset(const Dataset& dataset, const std::filesystem::path& path,
                   std::optional<DataFormat> format = std::nullopt);

} // namespace mdporder
