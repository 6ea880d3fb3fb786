#include "shaken/snapshot.hpp"

#include <algorithm>
#include <bit>
#include <cstring>

#include "json.hpp"

#include "shaken/errors.hpp"
#include "shaken/io.hpp"

namespace shaken {

namespace {

constexpr char kMagic[4] = {'S', 'H', 'K', 'L'};

template <typename T>
void put(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

template <typename T>
T get(const std::string& in, std::size_t offset) {
  if (offset + sizeof(T) > in.size()) throw Error("snapshot truncated");
  char bytes[sizeof(T)];
  std::memcpy(bytes, in.data() + offset, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  T value;
  std::memcpy(&value, bytes, sizeof(T));
  return value;
}

SnapshotHeader parse_header(const std::string& bytes) {
  if (bytes.size() < kSnapshotHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0)
    throw Error("not a snapshot file");
  SnapshotHeader header;
  header.nx = get<std::uint32_t>(bytes, 4);
  header.ny = get<std::uint32_t>(bytes, 8);
  header.half_width_x = get<double>(bytes, 16);
  header.time = get<double>(bytes, 24);
  return header;
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const GridState& state,
                    const std::string& sidecar_json) {
  const auto nx = static_cast<std::uint32_t>(state.psi.rows());
  const auto ny = static_cast<std::uint32_t>(state.psi.cols());
  std::string bytes;
  bytes.reserve(kSnapshotHeaderBytes + 16 * std::size_t(nx) * ny);
  bytes.append(kMagic, 4);
  put(bytes, nx);
  put(bytes, ny);
  put(bytes, std::uint32_t{0});
  put(bytes, state.spec.half_width_x());
  put(bytes, state.time);
  for (std::uint32_t j = 0; j < ny; ++j)
    for (std::uint32_t i = 0; i < nx; ++i) {
      put(bytes, state.psi(i, j).real());
      put(bytes, state.psi(i, j).imag());
    }
  write_file_atomic(path, bytes);

  nlohmann::json sidecar = sidecar_json.empty() ? nlohmann::json::object()
                                                : nlohmann::json::parse(sidecar_json);
  sidecar["grid"] = {
      {"nx", nx},
      {"ny", ny},
      {"wells_x", state.spec.wells_x},
      {"wells_y", state.spec.wells_y},
      {"ell", state.spec.ell},
      {"half_width_x", state.spec.half_width_x()},
      {"half_width_y", state.spec.half_width_y()},
      {"boundary", state.spec.boundary == Boundary::periodic ? "periodic" : "dirichlet"},
      {"time", state.time},
  };
  auto sidecar_path = path;
  sidecar_path += ".json";
  write_file_atomic(sidecar_path, sidecar.dump(2) + "\n");
}

SnapshotHeader read_snapshot_header(const std::filesystem::path& path) {
  return parse_header(read_file(path));
}

GridState read_snapshot(const std::filesystem::path& path) {
  const std::string bytes = read_file(path);
  const SnapshotHeader header = parse_header(bytes);
  const std::size_t count = std::size_t(header.nx) * header.ny;
  if (bytes.size() != kSnapshotHeaderBytes + 16 * count) throw Error("snapshot size mismatch");

  GridState state;
  state.spec.nx = static_cast<int>(header.nx);
  state.spec.ny = static_cast<int>(header.ny);
  state.spec.ell = header.half_width_x;
  state.time = header.time;
  state.psi.resize(header.nx, header.ny);
  std::size_t offset = kSnapshotHeaderBytes;
  for (std::uint32_t j = 0; j < header.ny; ++j)
    for (std::uint32_t i = 0; i < header.nx; ++i) {
      const double re = get<double>(bytes, offset);
      const double im = get<double>(bytes, offset + 8);
      state.psi(i, j) = {re, im};
      offset += 16;
    }
  return state;
}

}  // namespace shaken
