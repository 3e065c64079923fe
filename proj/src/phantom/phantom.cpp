#include "cinerecon/phantom/phantom.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include "cinerecon/core/container.hpp"
#include "cinerecon/core/operators.hpp"

namespace cinerecon {

namespace {

constexpr double kPi = 3.14159265358979323846;

struct Ellipse {
  double cy, cx;    // center, pixels
  double ry, rx;    // semi-axes, pixels
  double angle;     // radians
  double intensity; // [0, 1]
};

struct PhaseWave {
  double amp, fy, fx, shift;
};

// Soft-edged ellipse coverage: 1 inside, 0 outside, smooth ramp across
// roughly one pixel at the boundary.
double ellipse_coverage(const Ellipse& e, double y, double x, double contraction) {
  const double ry = e.ry * contraction;
  const double rx = e.rx * contraction;
  const double dy = y - e.cy;
  const double dx = x - e.cx;
  const double c = std::cos(e.angle), s = std::sin(e.angle);
  const double u = (c * dx + s * dy) / rx;
  const double v = (-s * dx + c * dy) / ry;
  const double q = u * u + v * v;
  // ramp width in q-space equivalent to ~1px at the boundary
  const double edge = 2.0 / std::min(rx, ry);
  const double a = (1.0 + edge - q) / (2.0 * edge);
  return std::clamp(a, 0.0, 1.0);
}

}  // namespace

CineSlice generate_cine_phantom(const PhantomSpec& spec) {
  require_valid(spec.frames >= 2, "phantom: frames must be >= 2");
  require_valid(spec.height >= 32 && spec.width >= 32,
                "phantom: dimensions must be >= 32");
  require_valid(spec.n_ellipses >= 1, "phantom: n_ellipses must be >= 1");
  require_valid(spec.contraction_amplitude >= 0.0 && spec.contraction_amplitude <= 0.5,
                "phantom: contraction_amplitude must lie in [0, 0.5]");
  require_valid(spec.noise_std >= 0.0, "phantom: noise_std must be >= 0");

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const double H = spec.height, W = spec.width;

  // All frame-independent randomness is drawn up front so that frames differ
  // only through the contraction factor.
  std::vector<Ellipse> ellipses;
  ellipses.reserve(static_cast<size_t>(spec.n_ellipses));
  Ellipse outer;
  outer.cy = H * (0.5 + 0.04 * (unit(rng) - 0.5));
  outer.cx = W * (0.5 + 0.04 * (unit(rng) - 0.5));
  outer.ry = H * (0.30 + 0.05 * unit(rng));
  outer.rx = W * (0.30 + 0.05 * unit(rng));
  outer.angle = 2.0 * kPi * unit(rng);
  outer.intensity = 0.35 + 0.25 * unit(rng);
  ellipses.push_back(outer);
  for (int i = 1; i < spec.n_ellipses; ++i) {
    Ellipse e;
    const double shrink = 0.45 + 0.25 * unit(rng);
    const Ellipse& parent = ellipses.back();
    e.ry = parent.ry * shrink;
    e.rx = parent.rx * shrink;
    const double margin_y = parent.ry - e.ry;
    const double margin_x = parent.rx - e.rx;
    e.cy = parent.cy + (unit(rng) - 0.5) * margin_y * 0.8;
    e.cx = parent.cx + (unit(rng) - 0.5) * margin_x * 0.8;
    e.angle = parent.angle + (unit(rng) - 0.5) * 0.5;
    e.intensity = 0.2 + 0.8 * unit(rng);
    ellipses.push_back(e);
  }

  std::vector<PhaseWave> waves(3);
  for (auto& wv : waves) {
    wv.amp = 0.2 + 0.4 * unit(rng);
    wv.fy = std::floor(unit(rng) * 3.0) - 1.0;  // {-1, 0, 1}
    wv.fx = std::floor(unit(rng) * 3.0) - 1.0;
    wv.shift = 2.0 * kPi * unit(rng);
  }

  CineSlice slice;
  slice.data = CArray(spec.frames, spec.height, spec.width);
  slice.frame_rate_hint = static_cast<double>(spec.frames);

  for (int f = 0; f < spec.frames; ++f) {
    // contracted at t = 0, dilated at t = T/2, periodic in T
    const double contraction =
        1.0 - spec.contraction_amplitude * std::cos(2.0 * kPi * f / spec.frames);
    for (int y = 0; y < spec.height; ++y) {
      for (int x = 0; x < spec.width; ++x) {
        double mag = 0.0;
        for (const auto& e : ellipses) {
          const double a = ellipse_coverage(e, y, x, contraction);
          mag = mag * (1.0 - a) + e.intensity * a;  // inner ellipses overwrite
        }
        const double yy = static_cast<double>(y) / H;
        const double xx = static_cast<double>(x) / W;
        double phase = 0.0;
        for (const auto& wv : waves) {
          phase += wv.amp * std::sin(2.0 * kPi * (wv.fy * yy + wv.fx * xx) + wv.shift);
        }
        slice.data.at(f, y, x) = std::polar(mag, phase);
      }
    }
  }

  if (spec.noise_std > 0.0) {
    std::normal_distribution<double> gauss(0.0, spec.noise_std / std::sqrt(2.0));
    for (size_t i = 0; i < slice.data.size(); ++i) {
      slice.data.data()[i] += cxd(gauss(rng), gauss(rng));
    }
  }
  return slice;
}

std::array<int, 3> split_counts(int n_slices) {
  require_valid(n_slices >= 1, "dataset: n_slices must be >= 1");
  if (n_slices == 1) return {1, 0, 0};
  if (n_slices == 2) return {1, 1, 0};
  int n_eval = static_cast<int>(std::ceil(n_slices * 20.0 / 120.0));
  int n_test = std::max(1, static_cast<int>(std::llround(n_slices * 10.0 / 120.0)));
  int n_train = n_slices - n_eval - n_test;
  while (n_train < 1 && n_test > 1) { --n_test; ++n_train; }
  while (n_train < 1 && n_eval > 1) { --n_eval; ++n_train; }
  return {n_train, n_eval, n_test};
}

std::vector<const DatasetEntry*> DatasetManifest::split(const std::string& name) const {
  std::vector<const DatasetEntry*> out;
  for (const auto& e : entries) {
    if (e.split == name) out.push_back(&e);
  }
  return out;
}

DatasetManifest generate_dataset(int n_slices, const PhantomSpec& spec_template,
                                 std::uint64_t seed,
                                 const std::filesystem::path& out_dir,
                                 const std::vector<int>& accelerations,
                                 std::optional<std::pair<int, int>> pad_to) {
  require_valid(n_slices >= 1, "dataset: n_slices must be >= 1");
  require_valid(!accelerations.empty(), "dataset: need at least one acceleration");
  if (pad_to) {
    require_valid(pad_to->first >= spec_template.height && pad_to->second >= spec_template.width,
                  "dataset: pad_to must be at least the phantom size");
  }
  std::filesystem::create_directories(out_dir);

  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  const auto counts = split_counts(n_slices);

  DatasetManifest manifest;
  manifest.accelerations = accelerations;
  manifest.seed = seed;
  manifest.phantom_template = {{"frames", spec_template.frames},
                               {"height", spec_template.height},
                               {"width", spec_template.width},
                               {"n_ellipses", spec_template.n_ellipses},
                               {"contraction_amplitude", spec_template.contraction_amplitude},
                               {"noise_std", spec_template.noise_std}};

  const int acq_width = pad_to ? pad_to->second : spec_template.width;
  // default center width: 24 lines at W = 512, scaled proportionally
  const int center_lines =
      std::max(2, static_cast<int>(std::llround(24.0 * acq_width / 512.0)));

  for (int i = 0; i < n_slices; ++i) {
    PhantomSpec spec = spec_template;
    spec.seed = rng();
    spec.n_ellipses = std::max(2, spec_template.n_ellipses +
                                      static_cast<int>(std::floor(unit(rng) * 3.0)) - 1);
    spec.contraction_amplitude =
        std::clamp(spec_template.contraction_amplitude * (0.8 + 0.4 * unit(rng)), 0.0, 0.5);

    CineSlice slice = generate_cine_phantom(spec);
    if (pad_to) slice = zero_pad(slice, pad_to->first, pad_to->second);

    DatasetEntry entry;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "slice_%03d", i);
    entry.id = buf;
    entry.seed = spec.seed;
    if (i < counts[0]) {
      entry.split = "train";
    } else if (i < counts[0] + counts[1]) {
      entry.split = "eval";
    } else {
      entry.split = "test";
    }

    entry.image_file = entry.id + ".nac";
    save_cine(out_dir / entry.image_file, slice,
              {{"id", entry.id}, {"split", entry.split}, {"seed", spec.seed}});

    for (int ar : accelerations) {
      SamplingMask mask = make_mask(acq_width, ar, center_lines,
                                    spec.seed ^ static_cast<std::uint64_t>(ar) * 0x2545f4914f6cdd1dull);
      KSpaceData ksp = forward_operator(slice, mask);
      std::string fname = entry.id + "_acc" + std::to_string(ar) + ".nac";
      nlohmann::json kmeta{{"id", entry.id}, {"split", entry.split}, {"acceleration", ar}};
      if (slice.original_size) {
        kmeta["original_size"] = {slice.original_size->first, slice.original_size->second};
      }
      save_kspace(out_dir / fname, ksp, kmeta);
      entry.kspace_files[ar] = fname;
    }
    manifest.entries.push_back(std::move(entry));
  }

  save_manifest(out_dir / "manifest.json", manifest);
  return manifest;
}

void save_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  nlohmann::json j;
  j["accelerations"] = manifest.accelerations;
  j["seed"] = manifest.seed;
  j["phantom_template"] = manifest.phantom_template;
  j["entries"] = nlohmann::json::array();
  for (const auto& e : manifest.entries) {
    nlohmann::json je{{"id", e.id},
                      {"split", e.split},
                      {"image_file", e.image_file},
                      {"seed", e.seed}};
    nlohmann::json ks = nlohmann::json::object();
    for (const auto& [ar, f] : e.kspace_files) ks[std::to_string(ar)] = f;
    je["kspace_files"] = ks;
    j["entries"].push_back(je);
  }
  std::ofstream os(path);
  if (!os) throw Error(ErrorCategory::io, "cannot write manifest: " + path.string());
  os << j.dump(2) << "\n";
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error(ErrorCategory::io, "missing manifest: " + path.string());
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCategory::io, "malformed manifest: " + std::string(e.what()));
  }
  DatasetManifest manifest;
  manifest.accelerations = j.at("accelerations").get<std::vector<int>>();
  manifest.seed = j.value("seed", 0ull);
  manifest.phantom_template = j.value("phantom_template", nlohmann::json::object());
  for (const auto& je : j.at("entries")) {
    DatasetEntry e;
    e.id = je.at("id").get<std::string>();
    e.split = je.at("split").get<std::string>();
    e.image_file = je.at("image_file").get<std::string>();
    e.seed = je.value("seed", 0ull);
    for (const auto& [k, v] : je.at("kspace_files").items()) {
      e.kspace_files[std::stoi(k)] = v.get<std::string>();
    }
    manifest.entries.push_back(std::move(e));
  }
  return manifest;
}

}  // namespace cinerecon
