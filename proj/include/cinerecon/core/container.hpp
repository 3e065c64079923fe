#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "cinerecon/core/types.hpp"

namespace cinerecon {

// Named-array container: a small binary format holding named dense arrays.
// Layout (little endian):
//   magic "NAC1" | u32 n_entries | entries...
//   entry: u32 name_len | name | u8 dtype | u8 ndim | u64 dims[ndim] | payload
//   dtype: 0 = f64, 1 = u8, 2 = i64
// Cine volumes store two real arrays "real" and "imag" of shape (T, H, W);
// k-space volumes additionally store "mask_lines" (u8, shape (W,)) when
// undersampled. A sidecar JSON record `<stem>.json` carries the metadata
// (original size, mask parameters, seed).
class NamedArrayFile {
 public:
  struct Entry {
    std::uint8_t dtype = 0;
    std::vector<std::uint64_t> dims;
    std::vector<std::uint8_t> raw;  // payload bytes
  };

  void put_f64(const std::string& name, std::vector<std::uint64_t> dims,
               const double* data);
  void put_u8(const std::string& name, std::vector<std::uint64_t> dims,
              const std::uint8_t* data);
  void put_i64(const std::string& name, std::vector<std::uint64_t> dims,
               const std::int64_t* data);

  bool has(const std::string& name) const { return entries_.count(name) > 0; }
  const Entry& entry(const std::string& name) const;
  std::vector<double> get_f64(const std::string& name) const;
  std::vector<std::uint8_t> get_u8(const std::string& name) const;
  std::vector<std::int64_t> get_i64(const std::string& name) const;
  std::vector<std::string> names() const;

  void write(const std::filesystem::path& path) const;
  static NamedArrayFile read(const std::filesystem::path& path);

 private:
  std::map<std::string, Entry> entries_;
};

// Sidecar path for a container file: same stem, ".json" extension.
std::filesystem::path sidecar_path(const std::filesystem::path& container);

void write_sidecar(const std::filesystem::path& container, const nlohmann::json& meta);
nlohmann::json read_sidecar(const std::filesystem::path& container);

// Cine/k-space persistence in the container format described above.
void save_cine(const std::filesystem::path& path, const CineSlice& slice,
               nlohmann::json extra_meta = nlohmann::json::object());
CineSlice load_cine(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr);

void save_kspace(const std::filesystem::path& path, const KSpaceData& kspace,
                 nlohmann::json extra_meta = nlohmann::json::object());
KSpaceData load_kspace(const std::filesystem::path& path, nlohmann::json* meta_out = nullptr);

// Standalone mask persistence: boolean line array plus its parameter record.
void save_mask(const std::filesystem::path& path, const SamplingMask& mask);
SamplingMask load_mask(const std::filesystem::path& path);

nlohmann::json mask_to_json(const SamplingMask& mask);
SamplingMask mask_from_json(const nlohmann::json& j, std::vector<std::uint8_t> lines);

}  // namespace cinerecon
