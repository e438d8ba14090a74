#include "forgenet/data.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <iterator>
#include <numeric>
#include <set>
#include <sstream>

#include "forgenet/parallel.hpp"
#include "forgenet/random.hpp"

namespace forgenet {

const char* to_string(Split split) noexcept {
  switch (split) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "unknown";
}

std::filesystem::path DatasetManifest::resolve(const ManifestRow& row) const {
  const std::filesystem::path p(row.path);
  if (p.is_absolute() || root.empty()) return p;
  return root / p;
}

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

[[noreturn]] void parse_error(std::size_t line, const std::string& what) {
  fail(ErrorKind::Parse, "manifest line " + std::to_string(line) + ": " + what);
}

}  // namespace

DatasetManifest parse_manifest(std::string_view text, Split split) {
  DatasetManifest manifest;
  manifest.split = split;
  std::set<std::pair<std::string, std::uint32_t>> seen;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  bool header_seen = false;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);

    if (!header_seen) {
      if (line != kManifestHeader)
        parse_error(line_no, "expected header '" + std::string(kManifestHeader) + "'");
      header_seen = true;
      continue;
    }
    if (line.empty()) continue;

    const auto fields = split_csv(line);
    if (fields.size() != 4)
      parse_error(line_no, "expected 4 fields, got " + std::to_string(fields.size()));
    ManifestRow row;
    row.path = std::string(fields[0]);
    if (row.path.empty()) parse_error(line_no, "empty path");
    if (fields[1] == "0")
      row.label = Label::Original;
    else if (fields[1] == "1")
      row.label = Label::Fake;
    else
      parse_error(line_no, "label '" + std::string(fields[1]) + "' is not 0 or 1");
    row.video_id = std::string(fields[2]);
    if (row.video_id.empty()) parse_error(line_no, "empty video_id");
    const auto idx = fields[3];
    const auto [ptr, ec] = std::from_chars(idx.data(), idx.data() + idx.size(), row.frame_index);
    if (ec != std::errc{} || ptr != idx.data() + idx.size() || idx.empty())
      parse_error(line_no, "frame_index '" + std::string(idx) + "' is not a non-negative integer");
    if (!seen.emplace(row.video_id, row.frame_index).second)
      parse_error(line_no, "duplicate frame (" + row.video_id + ", " +
                               std::to_string(row.frame_index) + ")");
    manifest.rows.push_back(std::move(row));
  }
  if (!header_seen) parse_error(1, "missing header");
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path, Split split) {
  DatasetManifest m = parse_manifest(read_file(path), split);
  m.root = path.parent_path();
  return m;
}

std::string format_manifest(const DatasetManifest& manifest) {
  std::string out(kManifestHeader);
  out += '\n';
  for (const ManifestRow& r : manifest.rows) {
    out += r.path + ',' + std::to_string(static_cast<int>(r.label)) + ',' + r.video_id + ',' +
           std::to_string(r.frame_index) + '\n';
  }
  return out;
}

namespace {

struct PpmHeader {
  std::uint32_t width = 0, height = 0, maxval = 0;
  std::size_t data_offset = 0;
};

PpmHeader parse_ppm_header(std::string_view bytes, const std::string& origin) {
  auto bad = [&](const std::string& what) -> void {
    fail(ErrorKind::Decode, origin + ": " + what);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') bad("not a binary PPM (magic P6)");
  std::size_t pos = 2;
  auto skip_space = [&] {
    while (pos < bytes.size()) {
      const char c = bytes[pos];
      if (c == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\v' || c == '\f') {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&](const char* what) {
    skip_space();
    std::uint32_t v = 0;
    const auto [ptr, ec] = std::from_chars(bytes.data() + pos, bytes.data() + bytes.size(), v);
    if (ec != std::errc{}) bad(std::string("malformed ") + what);
    pos = static_cast<std::size_t>(ptr - bytes.data());
    return v;
  };
  PpmHeader h;
  h.width = number("width");
  h.height = number("height");
  h.maxval = number("maxval");
  if (h.width == 0 || h.height == 0) bad("zero image dimension");
  if (h.maxval != 255) bad("maxval " + std::to_string(h.maxval) + " is not 255");
  if (pos >= bytes.size()) bad("truncated header");
  ++pos;  // single whitespace byte before the raster
  h.data_offset = pos;
  return h;
}

}  // namespace

Tensor4 decode_ppm(std::string_view bytes, const std::string& origin) {
  const PpmHeader h = parse_ppm_header(bytes, origin);
  const std::size_t plane = static_cast<std::size_t>(h.width) * h.height;
  if (bytes.size() - h.data_offset < plane * 3)
    fail(ErrorKind::Decode, origin + ": truncated pixel data (" +
                                std::to_string(bytes.size() - h.data_offset) + " of " +
                                std::to_string(plane * 3) + " bytes)");
  Tensor4 out(Shape4{1, 3, h.height, h.width});
  const auto* px = reinterpret_cast<const unsigned char*>(bytes.data() + h.data_offset);
  for (std::size_t j = 0; j < plane; ++j)
    for (std::size_t c = 0; c < 3; ++c)
      out[c * plane + j] = static_cast<float>(px[3 * j + c]) / 255.0f;
  return out;
}

Tensor4 load_image(const std::filesystem::path& path) {
  return decode_ppm(read_file(path), path.string());
}

std::pair<std::uint32_t, std::uint32_t> read_ppm_size(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::string head(256, '\0');
  in.read(head.data(), static_cast<std::streamsize>(head.size()));
  head.resize(static_cast<std::size_t>(in.gcount()));
  const PpmHeader h = parse_ppm_header(head, path.string());
  return {h.width, h.height};
}

void write_ppm(const std::filesystem::path& path, std::uint32_t width, std::uint32_t height,
               const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    fail(ErrorKind::Contract, "write_ppm: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << "P6\n" << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(rgb.data()), static_cast<std::streamsize>(rgb.size()));
  if (!out) fail(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<std::vector<std::size_t>> make_batches(std::size_t count, std::size_t batch_size,
                                                   bool shuffle, std::uint64_t seed) {
  if (count == 0) fail(ErrorKind::Contract, "make_batches: empty manifest");
  if (batch_size == 0) fail(ErrorKind::Contract, "make_batches: batch_size must be >= 1");
  std::vector<std::size_t> order(count);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) {
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(order));
  }
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t start = 0; start < count; start += batch_size) {
    const std::size_t end = std::min(count, start + batch_size);
    batches.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(start),
                         order.begin() + static_cast<std::ptrdiff_t>(end));
  }
  return batches;
}

std::vector<std::vector<std::size_t>> make_batches(const DatasetManifest& manifest,
                                                   std::size_t batch_size, bool shuffle,
                                                   std::uint64_t seed) {
  return make_batches(manifest.size(), batch_size, shuffle, seed);
}

Batch load_batch(const DatasetManifest& manifest, const std::vector<std::size_t>& indices,
                 std::uint32_t height, std::uint32_t width) {
  if (indices.empty()) fail(ErrorKind::Contract, "load_batch: no indices");
  Batch batch;
  const Shape4 frame{1, 3, height, width};
  batch.x = Tensor4(Shape4{indices.size(), 3, height, width});
  batch.y.resize(indices.size());
  batch.provenance.resize(indices.size());

  parallel_for(indices.size(), [&](std::size_t k) {
    const std::size_t idx = indices[k];
    if (idx >= manifest.size())
      fail(ErrorKind::Contract, "load_batch: index " + std::to_string(idx) + " out of range");
    const ManifestRow& row = manifest.rows[idx];
    const Tensor4 img = load_image(manifest.resolve(row));
    if (img.shape() != frame)
      fail(ErrorKind::Shape, row.path + ": image " + to_string(img.shape()) +
                                 " does not match network input " + to_string(frame));
    std::copy(img.values().begin(), img.values().end(),
              batch.x.data().begin() + static_cast<std::ptrdiff_t>(k * frame.count()));
    batch.y[k] = static_cast<int>(row.label);
    batch.provenance[k] = {row.video_id, row.frame_index};
  });
  return batch;
}

}  // namespace forgenet
