#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>

#include "forgenet/data.hpp"
#include "forgenet/random.hpp"

namespace forgenet {

namespace {

constexpr double kPatchAmplitude = 0.06;
constexpr double kNoiseAmplitude = 2.0 / 255.0;

struct BasePattern {
  double offset[3];
  double slope_x[3];
  double slope_y[3];
  double wave_amp, wave_fx, wave_fy, wave_phase, wave_speed;
};

BasePattern draw_base(Rng& rng) {
  BasePattern b{};
  for (int c = 0; c < 3; ++c) {
    b.offset[c] = rng.uniform(0.3, 0.7);
    b.slope_x[c] = rng.uniform(-0.15, 0.15);
    b.slope_y[c] = rng.uniform(-0.15, 0.15);
  }
  b.wave_amp = rng.uniform(0.02, 0.08);
  b.wave_fx = rng.uniform(0.2, 1.2);
  b.wave_fy = rng.uniform(0.2, 1.2);
  b.wave_phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  b.wave_speed = rng.uniform(0.05, 0.3);
  return b;
}

// Smooth gradient + slow wave; `fake` adds a checkerboard patch whose
// position jitters a little around the centre.
std::vector<std::uint8_t> render_frame(const BasePattern& b, std::uint32_t size,
                                       std::uint32_t frame, bool fake, Rng& rng) {
  const double brightness = rng.uniform(-0.03, 0.03);
  const std::uint32_t patch = std::max<std::uint32_t>(3, size / 4);
  const int jitter_range = static_cast<int>(std::min<std::uint32_t>(2, (size - patch) / 2));
  const int jx = static_cast<int>(rng.below(2 * jitter_range + 1)) - jitter_range;
  const int jy = static_cast<int>(rng.below(2 * jitter_range + 1)) - jitter_range;
  const int px0 = static_cast<int>((size - patch) / 2) + jx;
  const int py0 = static_cast<int>((size - patch) / 2) + jy;

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(size) * size * 3);
  const double inv = 1.0 / size;
  const double phase = b.wave_phase + b.wave_speed * frame;
  for (std::uint32_t y = 0; y < size; ++y) {
    for (std::uint32_t x = 0; x < size; ++x) {
      const double u = x * inv - 0.5, v = y * inv - 0.5;
      const double wave =
          b.wave_amp * std::sin(2.0 * std::numbers::pi * (b.wave_fx * u + b.wave_fy * v) + phase);
      double mark = 0.0;
      if (fake) {
        const int dx = static_cast<int>(x) - px0, dy = static_cast<int>(y) - py0;
        if (dx >= 0 && dy >= 0 && dx < static_cast<int>(patch) && dy < static_cast<int>(patch))
          mark = ((dx + dy) % 2 == 0) ? kPatchAmplitude : -kPatchAmplitude;
      }
      for (int c = 0; c < 3; ++c) {
        const double noise = rng.uniform(-kNoiseAmplitude, kNoiseAmplitude);
        const double value =
            b.offset[c] + b.slope_x[c] * u + b.slope_y[c] * v + wave + brightness + mark + noise;
        const double q = std::round(std::clamp(value, 0.0, 1.0) * 255.0);
        rgb[(static_cast<std::size_t>(y) * size + x) * 3 + c] = static_cast<std::uint8_t>(q);
      }
    }
  }
  return rgb;
}

std::string video_name(std::uint32_t v) {
  std::string digits = std::to_string(v);
  return "vid" + std::string(digits.size() < 4 ? 4 - digits.size() : 0, '0') + digits;
}

}  // namespace

DatasetManifest generate_synthetic(std::uint32_t count_videos, std::uint32_t frames_per_video,
                                   std::uint32_t size, std::uint64_t seed,
                                   const std::filesystem::path& destination) {
  if (count_videos == 0 || count_videos % 2 != 0)
    fail(ErrorKind::Config, "synthetic data needs a positive even video count for class "
                            "balance, got " + std::to_string(count_videos));
  if (frames_per_video == 0) fail(ErrorKind::Config, "frames_per_video must be >= 1");
  if (size < 3) fail(ErrorKind::Config, "synthetic frame size must be >= 3");

  std::error_code ec;
  std::filesystem::create_directories(destination, ec);
  if (ec || !std::filesystem::is_directory(destination))
    fail(ErrorKind::Io, "cannot create output directory " + destination.string() +
                            (ec ? ": " + ec.message() : ""));

  DatasetManifest manifest;
  manifest.root = destination;
  Rng rng(seed);
  BasePattern base{};
  for (std::uint32_t v = 0; v < count_videos; ++v) {
    // Videos 2k (original) and 2k+1 (fake) share a base pattern.
    if (v % 2 == 0) base = draw_base(rng);
    const bool fake = v % 2 == 1;
    const std::string vid = video_name(v);
    std::filesystem::create_directories(destination / vid, ec);
    if (ec) fail(ErrorKind::Io, "cannot create " + (destination / vid).string() + ": " + ec.message());
    for (std::uint32_t f = 0; f < frames_per_video; ++f) {
      const std::string rel = vid + "/" + std::to_string(f) + ".ppm";
      write_ppm(destination / rel, size, size, render_frame(base, size, f, fake, rng));
      manifest.rows.push_back({rel, fake ? Label::Fake : Label::Original, vid, f});
    }
  }

  const auto manifest_path = destination / "manifest.csv";
  std::ofstream out(manifest_path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot write " + manifest_path.string());
  out << format_manifest(manifest);
  if (!out) fail(ErrorKind::Io, "failed writing " + manifest_path.string());
  return manifest;
}

}  // namespace forgenet
