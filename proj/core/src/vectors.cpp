#include "mist/vectors.hpp"

#include "hash.hpp"
#include "mist/codestream_index.hpp"
#include "mist/formats.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <random>

namespace mist {
namespace {

PixelPlane make_plane(std::size_t rows, std::size_t cols, int bit_depth) {
  PixelPlane p;
  p.rows = rows;
  p.cols = cols;
  p.bit_depth = bit_depth;
  p.samples.assign(rows * cols, 0);
  return p;
}

std::vector<std::uint8_t> raw_samples(const PixelPlane& plane) {
  std::vector<std::uint8_t> out;
  out.reserve(plane.samples.size() * 2);
  for (auto s : plane.samples) {
    out.push_back(static_cast<std::uint8_t>(s & 0xFF));
    out.push_back(static_cast<std::uint8_t>(s >> 8));
  }
  return out;
}

}  // namespace

std::vector<NamedPlane> default_vector_planes() {
  std::vector<NamedPlane> planes;
  std::mt19937_64 rng(20240601);

  planes.push_back({"single_pixel", make_plane(1, 1, 8)});
  planes.back().plane.samples[0] = 200;

  PixelPlane constant = make_plane(130, 97, 12);
  std::fill(constant.samples.begin(), constant.samples.end(), 1234);
  planes.push_back({"constant_130x97", constant});

  PixelPlane ramp = make_plane(256, 256, 16);
  for (std::size_t r = 0; r < 256; ++r)
    for (std::size_t c = 0; c < 256; ++c) ramp.samples[r * 256 + c] = static_cast<std::uint16_t>(r * 256 + c);
  planes.push_back({"ramp_256", ramp});

  for (const auto& [rows, cols, depth] : std::vector<std::tuple<std::size_t, std::size_t, int>>{
           {67, 131, 8}, {255, 300, 12}, {129, 129, 16}}) {
    PixelPlane noise = make_plane(rows, cols, depth);
    std::uniform_int_distribution<std::uint32_t> d(0, (1u << depth) - 1);
    for (auto& s : noise.samples) s = static_cast<std::uint16_t>(d(rng));
    planes.push_back({"noise_" + std::to_string(rows) + "x" + std::to_string(cols) + "_" +
                          std::to_string(depth) + "bit",
                      noise});
  }

  PixelPlane smooth = make_plane(512, 512, 12);
  for (std::size_t r = 0; r < 512; ++r) {
    for (std::size_t c = 0; c < 512; ++c) {
      const double v = 0.5 + 0.25 * std::sin(0.021 * static_cast<double>(r)) +
                       0.25 * std::cos(0.013 * static_cast<double>(c + r / 2));
      smooth.samples[r * 512 + c] = static_cast<std::uint16_t>(std::lround(4095 * v));
    }
  }
  planes.push_back({"smooth_512", smooth});

  PixelPlane signed_ct = make_plane(300, 257, 12);
  std::uniform_int_distribution<std::uint32_t> hu(0, 4095);
  for (auto& s : signed_ct.samples) s = static_cast<std::uint16_t>(hu(rng));
  signed_ct.rescale_intercept = -1024;
  planes.push_back({"shifted_300x257", signed_ct});
  return planes;
}

std::size_t write_test_vectors(const std::filesystem::path& out, const std::vector<NamedPlane>& planes) {
  std::filesystem::create_directories(out);
  std::size_t written = 0;
  nlohmann::json index = nlohmann::json::array();
  for (const auto& [name, plane] : planes) {
    const Codestream cs = encode(plane);
    const OffsetTable table = build_offset_table(cs);
    const auto dir = out / name;
    std::filesystem::create_directories(dir);
    write_file_bytes(dir / "codestream.mistcs", cs.bytes);
    ++written;
    nlohmann::json levels = nlohmann::json::array();
    for (int level = 1; level <= table.max_level(); ++level) {
      const PixelPlane decoded = decode(cs.bytes, DecodeLevel::at(level));
      const auto raw = raw_samples(decoded);
      const std::string file = "level_" + std::to_string(level) + ".raw";
      write_file_bytes(dir / file, raw);
      ++written;
      detail::Sha256 sha;
      sha.update(raw);
      levels.push_back({{"level", level},
                        {"rows", decoded.rows},
                        {"cols", decoded.cols},
                        {"prefix_length", prefix_length(table, level)},
                        {"file", name + "/" + file},
                        {"sha256", sha.hex_digest()}});
    }
    index.push_back({{"name", name},
                     {"codestream", name + "/codestream.mistcs"},
                     {"rows", plane.rows},
                     {"cols", plane.cols},
                     {"bit_depth", cs.header.bit_depth},
                     {"n_levels", cs.header.n_levels},
                     {"rescale_intercept", cs.header.rescale_intercept},
                     {"sample_encoding", "uint16le"},
                     {"levels", levels}});
  }
  const std::string text = index.dump(2) + "\n";
  write_file_bytes(out / "index.json",
                   std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return written + 1;
}

}  // namespace mist
