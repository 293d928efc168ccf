#pragma once

#include "ssl/core.hpp"

#include "json.hpp"

#include <filesystem>

namespace ssl {

/// Binary layout: "SSL1", u32 n, f64 r_max, u32 l, then n interleaved
/// (re, im) float64 pairs; little-endian.
void write_field(const std::filesystem::path& path, const SectorField& f);
SectorField read_field(const std::filesystem::path& path);

nlohmann::json field_to_json(const SectorField& f);
SectorField field_from_json(const nlohmann::json& j);

}  // namespace ssl
