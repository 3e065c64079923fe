#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cinerecon/core/types.hpp"

namespace cinerecon {

// Deterministic synthetic cine phantom: nested ellipses whose radii
// oscillate sinusoidally over the cardiac cycle, with a smooth random phase
// map so the data is genuinely complex. Pixel magnitudes lie in [0, 1]
// before optional noise; sequences are periodic in T.
struct PhantomSpec {
  int frames = 8;
  int height = 64;
  int width = 64;
  int n_ellipses = 4;
  double contraction_amplitude = 0.15;  // fraction in [0, 0.5]
  double noise_std = 0.0;
  std::uint64_t seed = 0;
};

CineSlice generate_cine_phantom(const PhantomSpec& spec);

struct DatasetEntry {
  std::string id;
  std::string split;  // train | eval | test
  std::string image_file;
  std::map<int, std::string> kspace_files;  // acceleration -> file
  std::uint64_t seed = 0;
};

struct DatasetManifest {
  std::vector<DatasetEntry> entries;
  std::vector<int> accelerations;
  nlohmann::json phantom_template;
  std::uint64_t seed = 0;

  std::vector<const DatasetEntry*> split(const std::string& name) const;
};

// Split counts for the 90:20:10 train/eval/test ratio, eval rounded up and
// at least one test slice. Returns {train, eval, test}.
std::array<int, 3> split_counts(int n_slices);

// Generates n slices with per-slice randomized specs, pairs each with
// fully sampled and undersampled k-space at every requested acceleration,
// and writes a manifest recording the 90:20:10 split. When pad_to is given,
// slices are generated at the template size and zero-padded in image domain
// to the (height, width) canvas before acquisition; the recorded original
// size lets reconstruction crop its outputs back.
DatasetManifest generate_dataset(int n_slices, const PhantomSpec& spec_template,
                                 std::uint64_t seed,
                                 const std::filesystem::path& out_dir,
                                 const std::vector<int>& accelerations = {4, 8, 10},
                                 std::optional<std::pair<int, int>> pad_to = std::nullopt);

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest);
DatasetManifest load_manifest(const std::filesystem::path& path);

}  // namespace cinerecon
