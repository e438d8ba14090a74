#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "forgenet/model.hpp"

namespace forgenet {

namespace {

constexpr std::array<char, 4> kMagic{'F', 'G', 'N', '1'};

void put_u32(std::ostream& out, std::uint32_t v) {
  const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                         static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(bytes, 4);
}

void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint32_t u32(const std::string& field) {
    unsigned char bytes[4];
    in_.read(reinterpret_cast<char*>(bytes), 4);
    if (in_.gcount() != 4)
      fail(ErrorKind::Format, "weights file truncated while reading " + field);
    return static_cast<std::uint32_t>(bytes[0]) | (static_cast<std::uint32_t>(bytes[1]) << 8) |
           (static_cast<std::uint32_t>(bytes[2]) << 16) |
           (static_cast<std::uint32_t>(bytes[3]) << 24);
  }

  float f32(const std::string& field) { return std::bit_cast<float>(u32(field)); }

  void magic() {
    char bytes[4];
    in_.read(bytes, 4);
    if (in_.gcount() != 4) fail(ErrorKind::Format, "weights file truncated while reading magic");
    if (std::memcmp(bytes, kMagic.data(), 4) != 0) {
      if (std::memcmp(bytes, "FGN", 3) == 0)
        fail(ErrorKind::Format, "weights file version '" + std::string(1, bytes[3]) +
                                    "' is not supported (magic)");
      fail(ErrorKind::Format, "bad magic: not a weights file");
    }
  }

  bool at_end() { return in_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& in_;
};

std::string dims_string(const std::vector<std::uint32_t>& dims) {
  std::string s = "[";
  for (std::size_t i = 0; i < dims.size(); ++i) s += (i ? "," : "") + std::to_string(dims[i]);
  return s + "]";
}

struct Header {
  std::uint32_t conv_layers, filters, height, width;
};

Header read_header(Reader& r) {
  r.magic();
  Header h{};
  h.conv_layers = r.u32("header.conv_layers");
  h.filters = r.u32("header.filters");
  h.height = r.u32("header.height");
  h.width = r.u32("header.width");
  return h;
}

}  // namespace

void save_weights(const Network& net, std::ostream& out) {
  const NetworkConfig& c = net.config();
  out.write(kMagic.data(), kMagic.size());
  put_u32(out, c.conv_layers);
  put_u32(out, c.filters);
  put_u32(out, c.height);
  put_u32(out, c.width);
  for (const auto& t : net.tensors()) {
    put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put_u32(out, d);
    for (float v : t.values) put_f32(out, v);
  }
  if (!out) fail(ErrorKind::Io, "failed writing weights");
}

void save_weights(const Network& net, const std::filesystem::path& destination) {
  std::ofstream out(destination, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorKind::Io, "cannot open " + destination.string() + " for writing");
  save_weights(net, out);
  out.close();
  if (!out) fail(ErrorKind::Io, "failed writing " + destination.string());
}

Network load_weights(std::istream& in, const NetworkConfig& config) {
  Reader r(in);
  const Header h = read_header(r);
  Network net = Network::build(config);

  // Tensor dims are checked before the header so that an architecture
  // mismatch is reported against the first tensor that differs.
  for (auto& t : net.tensors()) {
    const std::uint32_t rank = r.u32(t.name + ".rank");
    std::vector<std::uint32_t> dims(rank);
    if (rank != t.dims.size())
      fail(ErrorKind::Format, "shape mismatch in " + t.name + ": rank " + std::to_string(rank) +
                                  " in file, expected " + std::to_string(t.dims.size()));
    for (std::uint32_t k = 0; k < rank; ++k) dims[k] = r.u32(t.name + ".dims");
    if (dims != t.dims)
      fail(ErrorKind::Format, "shape mismatch in " + t.name + ": file has " + dims_string(dims) +
                                  ", config expects " + dims_string(t.dims));
    for (float& v : t.values) v = r.f32(t.name + ".values");
  }
  if (!r.at_end()) fail(ErrorKind::Format, "trailing bytes after dense.bias");

  const std::pair<const char*, std::pair<std::uint32_t, std::uint32_t>> fields[] = {
      {"header.conv_layers", {h.conv_layers, config.conv_layers}},
      {"header.filters", {h.filters, config.filters}},
      {"header.height", {h.height, config.height}},
      {"header.width", {h.width, config.width}},
  };
  for (const auto& [name, values] : fields)
    if (values.first != values.second)
      fail(ErrorKind::Format, std::string("shape mismatch in ") + name + ": file has " +
                                  std::to_string(values.first) + ", config expects " +
                                  std::to_string(values.second));
  return net;
}

Network load_weights(const std::filesystem::path& source, const NetworkConfig& config) {
  std::ifstream in(source, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open weights file " + source.string());
  return load_weights(in, config);
}

NetworkConfig read_weights_header(const std::filesystem::path& source) {
  std::ifstream in(source, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open weights file " + source.string());
  Reader r(in);
  const Header h = read_header(r);
  NetworkConfig c;
  c.conv_layers = h.conv_layers;
  c.filters = h.filters;
  c.height = h.height;
  c.width = h.width;
  try {
    c.validate();
  } catch (const Error& e) {
    fail(ErrorKind::Format, std::string("invalid header: ") + e.what());
  }
  return c;
}

Network load_weights(const std::filesystem::path& source) {
  return load_weights(source, read_weights_header(source));
}

}  // namespace forgenet
