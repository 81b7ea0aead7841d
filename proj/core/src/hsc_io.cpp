#include "hud/hsc_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace hud {

namespace {

using ordered_json = nlohmann::ordered_json;

void byteswap_f32(std::vector<float>& v) {
  for (float& f : v) {
    auto u = std::bit_cast<std::uint32_t>(f);
    u = ((u & 0x000000FFu) << 24) | ((u & 0x0000FF00u) << 8) |
        ((u & 0x00FF0000u) >> 8) | ((u & 0xFF000000u) >> 24);
    f = std::bit_cast<float>(u);
  }
}

}  // namespace

std::filesystem::path hsc_payload_path(const std::filesystem::path& header_path) {
  std::filesystem::path p = header_path;
  p += ".raw";
  return p;
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
  validate_cube(cube);

  ordered_json header;
  header["magic"] = "HSC1";
  header["bands"] = cube.bands;
  header["height"] = cube.height;
  header["width"] = cube.width;
  header["dtype"] = "f32le";
  header["layout"] = "band-major";
  if (!cube.band_names.empty()) header["band_names"] = cube.band_names;

  {
    std::ofstream hf(path, std::ios::binary | std::ios::trunc);
    if (!hf) throw std::runtime_error("save_cube: cannot open " + path.string());
    hf << header.dump(2) << "\n";
    if (!hf) throw std::runtime_error("save_cube: write failed on " + path.string());
  }
  {
    std::ofstream pf(hsc_payload_path(path), std::ios::binary | std::ios::trunc);
    if (!pf)
      throw std::runtime_error("save_cube: cannot open " +
                               hsc_payload_path(path).string());
    if constexpr (std::endian::native == std::endian::little) {
      pf.write(reinterpret_cast<const char*>(cube.data.data()),
               static_cast<std::streamsize>(cube.data.size() * sizeof(float)));
    } else {
      std::vector<float> le = cube.data;
      byteswap_f32(le);
      pf.write(reinterpret_cast<const char*>(le.data()),
               static_cast<std::streamsize>(le.size() * sizeof(float)));
    }
    if (!pf)
      throw std::runtime_error("save_cube: write failed on " +
                               hsc_payload_path(path).string());
  }
}

HsiCube load_cube(const std::filesystem::path& path) {
  std::ifstream hf(path, std::ios::binary);
  if (!hf) throw std::runtime_error("load_cube: cannot open " + path.string());
  ordered_json header;
  try {
    hf >> header;
  } catch (const std::exception& e) {
    throw std::runtime_error("load_cube: bad header in " + path.string() + ": " +
                             e.what());
  }

  if (header.value("magic", "") != std::string("HSC1"))
    throw std::runtime_error("load_cube: magic mismatch in " + path.string());
  if (header.value("dtype", "") != std::string("f32le"))
    throw std::runtime_error("load_cube: unsupported dtype in " + path.string());
  if (header.value("layout", "") != std::string("band-major"))
    throw std::runtime_error("load_cube: unsupported layout in " + path.string());

  HsiCube cube;
  cube.bands = header.value("bands", 0);
  cube.height = header.value("height", 0);
  cube.width = header.value("width", 0);
  if (cube.bands < 1 || cube.height < 1 || cube.width < 1)
    throw std::runtime_error("load_cube: invalid dimensions in " + path.string());
  if (header.contains("band_names"))
    cube.band_names = header["band_names"].get<std::vector<std::string>>();

  const auto payload = hsc_payload_path(path);
  std::ifstream pf(payload, std::ios::binary);
  if (!pf) throw std::runtime_error("load_cube: cannot open " + payload.string());
  pf.seekg(0, std::ios::end);
  const std::uint64_t bytes = static_cast<std::uint64_t>(pf.tellg());
  pf.seekg(0, std::ios::beg);

  const std::uint64_t expect = static_cast<std::uint64_t>(cube.bands) *
                               cube.height * cube.width * sizeof(float);
  if (bytes != expect)
    throw std::runtime_error("load_cube: declared size " + std::to_string(expect) +
                             " bytes != payload size " + std::to_string(bytes) +
                             " in " + payload.string());

  cube.data.resize(static_cast<std::size_t>(cube.bands) * cube.height * cube.width);
  pf.read(reinterpret_cast<char*>(cube.data.data()),
          static_cast<std::streamsize>(bytes));
  if (!pf) throw std::runtime_error("load_cube: short read on " + payload.string());
  if constexpr (std::endian::native != std::endian::little) byteswap_f32(cube.data);

  validate_cube(cube);
  return cube;
}

}  // namespace hud
