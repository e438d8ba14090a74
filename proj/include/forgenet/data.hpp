#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "forgenet/tensor.hpp"

namespace forgenet {

enum class Label : int { Original = 0, Fake = 1 };

enum class Split { Train, Val, Test };

const char* to_string(Split split) noexcept;

struct ManifestRow {
  std::string path;
  Label label = Label::Original;
  std::string video_id;
  std::uint32_t frame_index = 0;

  friend bool operator==(const ManifestRow&, const ManifestRow&) = default;
};

/// Ordered frame list for one split. Relative paths resolve against `root`.
struct DatasetManifest {
  Split split = Split::Train;
  std::filesystem::path root;
  std::vector<ManifestRow> rows;

  std::size_t size() const noexcept { return rows.size(); }
  bool empty() const noexcept { return rows.empty(); }
  std::filesystem::path resolve(const ManifestRow& row) const;
};

inline constexpr std::string_view kManifestHeader = "path,label,video_id,frame_index";

// CSV with the header above. Errors cite the 1-based line number.
DatasetManifest parse_manifest(std::string_view text, Split split = Split::Train);
DatasetManifest load_manifest(const std::filesystem::path& path, Split split = Split::Train);
std::string format_manifest(const DatasetManifest& manifest);

/// Binary PPM (P6, maxval 255) to a (1,3,h,w) tensor scaled into [0,1].
Tensor4 load_image(const std::filesystem::path& path);
Tensor4 decode_ppm(std::string_view bytes, const std::string& origin = "<memory>");
// Width and height from the header only.
std::pair<std::uint32_t, std::uint32_t> read_ppm_size(const std::filesystem::path& path);
void write_ppm(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               const std::vector<std::uint8_t>& rgb);

// Partitions [0, count) into batches. The shuffle permutation depends only
// on (count, seed), never on batch_size.
std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   bool shuffle, std::uint64_t seed);
std::vector<std::vector<std::size_t>> make_batches(const DatasetManifest& manifest,
                                                   std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed);

struct Batch {
  Tensor4 x;
  std::vector<int> y;
  std::vector<std::pair<std::string, std::uint32_t>> provenance;
};

// Loads the frames named by `indices` (in that order). Every frame must be
// 3 x height x width.
Batch load_batch(const DatasetManifest& manifest, const std::vector<std::size_t>& indices,
                 std::uint32_t height, std::uint32_t width);

// Writes `<destination>/<video_id>/<frame_index>.ppm` plus manifest.csv.
// Videos come in (original, fake) pairs sharing a base pattern; the fake
// carries a faint high-frequency patch near the centre of every frame.
DatasetManifest generate_synthetic(std::uint32_t count_videos, std::uint32_t frames_per_video,
                                   std::uint32_t size, std::uint64_t seed,
                                   const std::filesystem::path& destination);

}  // namespace forgenet
