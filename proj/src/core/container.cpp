#include "cinerecon/core/container.hpp"

#include <cstring>
#include <fstream>

namespace cinerecon {

namespace {

constexpr char kMagic[4] = {'N', 'A', 'C', '1'};

size_t dtype_size(std::uint8_t dtype) {
  switch (dtype) {
    case 0: return 8;  // f64
    case 1: return 1;  // u8
    case 2: return 8;  // i64
  }
  throw Error(ErrorCategory::io, "container: unknown dtype " + std::to_string(dtype));
}

std::uint64_t dim_product(const std::vector<std::uint64_t>& dims) {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

template <typename T>
void write_pod(std::ostream& os, const T& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::istream& is) {
  T v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!is) throw Error(ErrorCategory::io, "container: truncated file");
  return v;
}

}  // namespace

void NamedArrayFile::put_f64(const std::string& name, std::vector<std::uint64_t> dims,
                             const double* data) {
  Entry e;
  e.dtype = 0;
  e.dims = std::move(dims);
  e.raw.resize(dim_product(e.dims) * 8);
  std::memcpy(e.raw.data(), data, e.raw.size());
  entries_[name] = std::move(e);
}

void NamedArrayFile::put_u8(const std::string& name, std::vector<std::uint64_t> dims,
                            const std::uint8_t* data) {
  Entry e;
  e.dtype = 1;
  e.dims = std::move(dims);
  e.raw.assign(data, data + dim_product(e.dims));
  entries_[name] = std::move(e);
}

void NamedArrayFile::put_i64(const std::string& name, std::vector<std::uint64_t> dims,
                             const std::int64_t* data) {
  Entry e;
  e.dtype = 2;
  e.dims = std::move(dims);
  e.raw.resize(dim_product(e.dims) * 8);
  std::memcpy(e.raw.data(), data, e.raw.size());
  entries_[name] = std::move(e);
}

const NamedArrayFile::Entry& NamedArrayFile::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) {
    throw Error(ErrorCategory::io, "container: missing array '" + name + "'");
  }
  return it->second;
}

std::vector<double> NamedArrayFile::get_f64(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dtype != 0) throw Error(ErrorCategory::io, "container: '" + name + "' is not f64");
  std::vector<double> out(e.raw.size() / 8);
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

std::vector<std::uint8_t> NamedArrayFile::get_u8(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dtype != 1) throw Error(ErrorCategory::io, "container: '" + name + "' is not u8");
  return e.raw;
}

std::vector<std::int64_t> NamedArrayFile::get_i64(const std::string& name) const {
  const Entry& e = entry(name);
  if (e.dtype != 2) throw Error(ErrorCategory::io, "container: '" + name + "' is not i64");
  std::vector<std::int64_t> out(e.raw.size() / 8);
  std::memcpy(out.data(), e.raw.data(), e.raw.size());
  return out;
}

std::vector<std::string> NamedArrayFile::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [k, v] : entries_) out.push_back(k);
  return out;
}

void NamedArrayFile::write(const std::filesystem::path& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error(ErrorCategory::io, "container: cannot open for write: " + path.string());
  os.write(kMagic, 4);
  write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& [name, e] : entries_) {
    write_pod<std::uint32_t>(os, static_cast<std::uint32_t>(name.size()));
    os.write(name.data(), static_cast<std::streamsize>(name.size()));
    write_pod<std::uint8_t>(os, e.dtype);
    write_pod<std::uint8_t>(os, static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) write_pod<std::uint64_t>(os, d);
    os.write(reinterpret_cast<const char*>(e.raw.data()),
             static_cast<std::streamsize>(e.raw.size()));
  }
  if (!os) throw Error(ErrorCategory::io, "container: write failed: " + path.string());
}

NamedArrayFile NamedArrayFile::read(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error(ErrorCategory::io, "container: cannot open: " + path.string());
  char magic[4];
  is.read(magic, 4);
  if (!is || std::memcmp(magic, kMagic, 4) != 0) {
    throw Error(ErrorCategory::io, "container: bad magic in " + path.string());
  }
  NamedArrayFile file;
  const auto n = read_pod<std::uint32_t>(is);
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto name_len = read_pod<std::uint32_t>(is);
    if (name_len > 4096) throw Error(ErrorCategory::io, "container: implausible name length");
    std::string name(name_len, '\0');
    is.read(name.data(), name_len);
    Entry e;
    e.dtype = read_pod<std::uint8_t>(is);
    const auto ndim = read_pod<std::uint8_t>(is);
    e.dims.resize(ndim);
    for (auto& d : e.dims) d = read_pod<std::uint64_t>(is);
    const std::uint64_t bytes = dim_product(e.dims) * dtype_size(e.dtype);
    if (bytes > (1ull << 34)) throw Error(ErrorCategory::io, "container: implausible array size");
    e.raw.resize(bytes);
    is.read(reinterpret_cast<char*>(e.raw.data()), static_cast<std::streamsize>(bytes));
    if (!is) throw Error(ErrorCategory::io, "container: truncated payload in " + path.string());
    file.entries_[name] = std::move(e);
  }
  return file;
}

std::filesystem::path sidecar_path(const std::filesystem::path& container) {
  std::filesystem::path p = container;
  p.replace_extension(".json");
  return p;
}

void write_sidecar(const std::filesystem::path& container, const nlohmann::json& meta) {
  std::ofstream os(sidecar_path(container));
  if (!os) throw Error(ErrorCategory::io, "cannot write sidecar for " + container.string());
  os << meta.dump(2) << "\n";
}

nlohmann::json read_sidecar(const std::filesystem::path& container) {
  std::ifstream is(sidecar_path(container));
  if (!is) throw Error(ErrorCategory::io, "missing sidecar for " + container.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::io, "malformed sidecar for " + container.string() + ": " + e.what());
  }
  return j;
}

nlohmann::json mask_to_json(const SamplingMask& mask) {
  return {{"acceleration", mask.acceleration},
          {"center_lines", mask.center_lines},
          {"seed", mask.seed},
          {"nonstandard", mask.nonstandard},
          {"width", mask.width()}};
}

SamplingMask mask_from_json(const nlohmann::json& j, std::vector<std::uint8_t> lines) {
  SamplingMask mask;
  mask.lines = std::move(lines);
  mask.acceleration = j.at("acceleration").get<int>();
  mask.center_lines = j.at("center_lines").get<int>();
  mask.seed = j.at("seed").get<std::uint64_t>();
  mask.nonstandard = j.value("nonstandard", false);
  if (j.contains("width")) {
    require(j.at("width").get<int>() == mask.width(), ErrorCategory::io,
            "mask record width disagrees with stored line array");
  }
  return mask;
}

namespace {

void put_complex_volume(NamedArrayFile& file, const CArray& a) {
  std::vector<std::uint64_t> dims{static_cast<std::uint64_t>(a.t()),
                                  static_cast<std::uint64_t>(a.h()),
                                  static_cast<std::uint64_t>(a.w())};
  std::vector<double> re(a.size()), im(a.size());
  for (size_t i = 0; i < a.size(); ++i) {
    re[i] = a.data()[i].real();
    im[i] = a.data()[i].imag();
  }
  file.put_f64("real", dims, re.data());
  file.put_f64("imag", dims, im.data());
}

CArray get_complex_volume(const NamedArrayFile& file) {
  const auto& e = file.entry("real");
  if (e.dims.size() != 3) throw Error(ErrorCategory::io, "container: 'real' must be 3-D");
  CArray a(static_cast<int>(e.dims[0]), static_cast<int>(e.dims[1]),
           static_cast<int>(e.dims[2]));
  auto re = file.get_f64("real");
  auto im = file.get_f64("imag");
  if (re.size() != a.size() || im.size() != a.size()) {
    throw Error(ErrorCategory::io, "container: real/imag size mismatch");
  }
  for (size_t i = 0; i < a.size(); ++i) a.data()[i] = cxd(re[i], im[i]);
  return a;
}

}  // namespace

void save_cine(const std::filesystem::path& path, const CineSlice& slice,
               nlohmann::json extra_meta) {
  NamedArrayFile file;
  put_complex_volume(file, slice.data);
  file.write(path);

  nlohmann::json meta = std::move(extra_meta);
  meta["kind"] = "image";
  meta["shape"] = {slice.t(), slice.h(), slice.w()};
  meta["padded"] = slice.padded;
  if (slice.original_size) {
    meta["original_size"] = {slice.original_size->first, slice.original_size->second};
  }
  if (slice.frame_rate_hint) meta["frame_rate_hint"] = *slice.frame_rate_hint;
  write_sidecar(path, meta);
}

CineSlice load_cine(const std::filesystem::path& path, nlohmann::json* meta_out) {
  NamedArrayFile file = NamedArrayFile::read(path);
  CineSlice slice;
  slice.data = get_complex_volume(file);
  nlohmann::json meta = read_sidecar(path);
  slice.padded = meta.value("padded", false);
  if (meta.contains("original_size")) {
    auto os = meta.at("original_size");
    slice.original_size = {os.at(0).get<int>(), os.at(1).get<int>()};
  }
  if (meta.contains("frame_rate_hint")) {
    slice.frame_rate_hint = meta.at("frame_rate_hint").get<double>();
  }
  if (meta_out) *meta_out = std::move(meta);
  return slice;
}

void save_kspace(const std::filesystem::path& path, const KSpaceData& kspace,
                 nlohmann::json extra_meta) {
  NamedArrayFile file;
  put_complex_volume(file, kspace.data);
  if (kspace.mask) {
    file.put_u8("mask_lines", {static_cast<std::uint64_t>(kspace.mask->width())},
                kspace.mask->lines.data());
  }
  file.write(path);

  nlohmann::json meta = std::move(extra_meta);
  meta["kind"] = "kspace";
  meta["shape"] = {kspace.t(), kspace.h(), kspace.w()};
  if (kspace.mask) {
    meta["mask"] = mask_to_json(*kspace.mask);
  } else {
    meta["mask"] = "fully_sampled";
  }
  write_sidecar(path, meta);
}

KSpaceData load_kspace(const std::filesystem::path& path, nlohmann::json* meta_out) {
  NamedArrayFile file = NamedArrayFile::read(path);
  KSpaceData out;
  out.data = get_complex_volume(file);
  nlohmann::json meta = read_sidecar(path);
  if (meta.contains("mask") && meta.at("mask").is_object()) {
    out.mask = mask_from_json(meta.at("mask"), file.get_u8("mask_lines"));
  }
  if (meta_out) *meta_out = std::move(meta);
  return out;
}

void save_mask(const std::filesystem::path& path, const SamplingMask& mask) {
  NamedArrayFile file;
  file.put_u8("mask_lines", {static_cast<std::uint64_t>(mask.width())}, mask.lines.data());
  file.write(path);
  write_sidecar(path, nlohmann::json{{"kind", "mask"}, {"mask", mask_to_json(mask)}});
}

SamplingMask load_mask(const std::filesystem::path& path) {
  NamedArrayFile file = NamedArrayFile::read(path);
  nlohmann::json meta = read_sidecar(path);
  return mask_from_json(meta.at("mask"), file.get_u8("mask_lines"));
}

}  // namespace cinerecon
