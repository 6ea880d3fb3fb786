#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "shaken/grid.hpp"

namespace shaken {

/// Binary field dump. Layout (little-endian): "SHKL", u32 nx, u32 ny,
/// u32 reserved = 0, f64 half-width along x, f64 time, then nx * ny pairs of
/// f64 (re, im) with x running fastest. See docs/snapshot_format.md.
inline constexpr std::size_t kSnapshotHeaderBytes = 32;

struct SnapshotHeader {
  std::uint32_t nx = 0;
  std::uint32_t ny = 0;
  double half_width_x = 0.0;
  double time = 0.0;
};

/// Writes path (binary) and path + ".json" (sidecar with grid and run config).
/// Both are written to a temporary name first and renamed into place.
void write_snapshot(const std::filesystem::path& path, const GridState& state,
                    const std::string& sidecar_json);

SnapshotHeader read_snapshot_header(const std::filesystem::path& path);

/// Reads the field back. The returned GridSpec holds one well per axis with
/// ell set to the stored half-width; the sidecar has the full grid.
GridState read_snapshot(const std::filesystem::path& path);

}  // namespace shaken
