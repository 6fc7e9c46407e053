#include "exwarp/dataset.hpp"

#include <png.h>
#include <zlib.h>

#include <bit>
#include <cstdio>
#include <cstring>
#include <fstream>

#include "exwarp/errors.hpp"
#include "json.hpp"

namespace exwarp {

namespace fs = std::filesystem;
using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "binary raster codecs assume a little-endian host");

// ---------------------------------------------------------------------------
// Files

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError("write failed: " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename " + tmp.string() + ": " + ec.message());
}

void write_file_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::uint32_t crc32(std::span<const std::uint8_t> bytes) {
  uLong crc = ::crc32(0L, Z_NULL, 0);
  // zlib takes a uInt length; feed large buffers in pieces.
  std::size_t offset = 0;
  while (offset < bytes.size()) {
    const auto n = static_cast<uInt>(std::min<std::size_t>(bytes.size() - offset, 1u << 30));
    crc = ::crc32(crc, bytes.data() + offset, n);
    offset += n;
  }
  return static_cast<std::uint32_t>(crc);
}

// ---------------------------------------------------------------------------
// PNG

namespace {

std::vector<std::uint8_t> write_png(const void* pixels, int width, int height,
                                    png_uint_32 format) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(width);
  image.height = static_cast<png_uint_32>(height);
  image.format = format;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode failed: ") + image.message);
  std::vector<std::uint8_t> out(size);
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, pixels, 0, nullptr))
    throw IoError(std::string("png encode failed: ") + image.message);
  out.resize(size);
  return out;
}

template <class Sink>
void read_png(std::span<const std::uint8_t> bytes, png_uint_32 format, Sink&& sink) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw FormatError(std::string("png decode failed: ") + image.message);
  image.format = format;
  void* dst = sink(static_cast<int>(image.width), static_cast<int>(image.height));
  if (!png_image_finish_read(&image, nullptr, dst, 0, nullptr)) {
    png_image_free(&image);
    throw FormatError(std::string("png decode failed: ") + image.message);
  }
}

}  // namespace

std::vector<std::uint8_t> encode_png(const Frame& frame) {
  return write_png(frame.bytes().data(), frame.width(), frame.height(), PNG_FORMAT_RGB);
}

std::vector<std::uint8_t> encode_png(const Grid<std::uint8_t>& gray) {
  return write_png(gray.cells().data(), gray.width(), gray.height(), PNG_FORMAT_GRAY);
}

Frame decode_png_rgb(std::span<const std::uint8_t> bytes) {
  Frame frame;
  read_png(bytes, PNG_FORMAT_RGB, [&](int w, int h) -> void* {
    frame = Frame(w, h);
    return frame.bytes().data();
  });
  return frame;
}

Grid<std::uint8_t> decode_png_gray(std::span<const std::uint8_t> bytes) {
  Grid<std::uint8_t> gray;
  read_png(bytes, PNG_FORMAT_GRAY, [&](int w, int h) -> void* {
    gray = Grid<std::uint8_t>(w, h);
    return gray.cells().data();
  });
  return gray;
}

// ---------------------------------------------------------------------------
// Float rasters: magic[4], u32 width, u32 height, row-major float32 tuples.

namespace {

constexpr char kMotionMagic[4] = {'M', 'V', 'D', '1'};
constexpr char kNormalMagic[4] = {'N', 'R', 'M', '1'};
constexpr char kPositionMagic[4] = {'W', 'P', 'S', '1'};

template <class T, int Components>
std::vector<std::uint8_t> encode_float_raster(const Grid<T>& raster, const char magic[4]) {
  static_assert(sizeof(T) == Components * sizeof(float));
  std::vector<std::uint8_t> out(12 + raster.size() * sizeof(T));
  std::memcpy(out.data(), magic, 4);
  const auto w = static_cast<std::uint32_t>(raster.width());
  const auto h = static_cast<std::uint32_t>(raster.height());
  std::memcpy(out.data() + 4, &w, 4);
  std::memcpy(out.data() + 8, &h, 4);
  std::memcpy(out.data() + 12, raster.cells().data(), raster.size() * sizeof(T));
  return out;
}

template <class T>
Grid<T> decode_float_raster(std::span<const std::uint8_t> bytes, const char magic[4]) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), magic, 4) != 0)
    throw FormatError(std::string("bad raster magic, expected ") + std::string(magic, 4));
  std::uint32_t w = 0;
  std::uint32_t h = 0;
  std::memcpy(&w, bytes.data() + 4, 4);
  std::memcpy(&h, bytes.data() + 8, 4);
  const std::size_t expected = 12 + std::size_t{w} * h * sizeof(T);
  if (bytes.size() != expected) throw FormatError("raster payload size does not match header");
  Grid<T> raster(static_cast<int>(w), static_cast<int>(h));
  std::memcpy(raster.cells().data(), bytes.data() + 12, raster.size() * sizeof(T));
  return raster;
}

}  // namespace

std::vector<std::uint8_t> encode_vec2_raster(const Grid<Vec2f>& raster) {
  return encode_float_raster<Vec2f, 2>(raster, kMotionMagic);
}

Grid<Vec2f> decode_vec2_raster(std::span<const std::uint8_t> bytes) {
  return decode_float_raster<Vec2f>(bytes, kMotionMagic);
}

std::vector<std::uint8_t> encode_vec3_raster(const Grid<Vec3f>& raster, const char magic[4]) {
  return encode_float_raster<Vec3f, 3>(raster, magic);
}

Grid<Vec3f> decode_vec3_raster(std::span<const std::uint8_t> bytes, const char magic[4]) {
  return decode_float_raster<Vec3f>(bytes, magic);
}

// ---------------------------------------------------------------------------
// Dataset directory

namespace {

std::string numbered(const char* pattern, std::size_t n) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, n);
  return buf;
}

std::string hex32(std::uint32_t v) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%08x", v);
  return buf;
}

class DatasetWriter {
 public:
  explicit DatasetWriter(fs::path root) : root_(std::move(root)) {}

  void put(const std::string& rel, const std::vector<std::uint8_t>& bytes) {
    write_file_atomic(root_ / rel, bytes);
    checksums_[rel] = hex32(crc32(bytes));
  }

  const json& checksums() const { return checksums_; }

 private:
  fs::path root_;
  json checksums_ = json::object();
};

class DatasetReader {
 public:
  DatasetReader(fs::path root, const json& checksums)
      : root_(std::move(root)), checksums_(checksums) {}

  std::vector<std::uint8_t> get(const std::string& rel) const {
    if (!checksums_.contains(rel)) throw FormatError("manifest has no checksum for " + rel);
    std::vector<std::uint8_t> bytes = read_file(root_ / rel);
    if (hex32(crc32(bytes)) != checksums_.at(rel).get<std::string>())
      throw ChecksumError("checksum mismatch for " + rel);
    return bytes;
  }

 private:
  fs::path root_;
  const json& checksums_;
};

template <class G>
void expect_shape(const G& raster, int w, int h, const std::string& what) {
  if (!raster.same_shape(w, h))
    throw DimensionError(what + " is " + std::to_string(raster.width()) + "x" +
                         std::to_string(raster.height()) + ", manifest declares " +
                         std::to_string(w) + "x" + std::to_string(h));
}

}  // namespace

void save_dataset(const fs::path& dir, const Episode& episode) {
  fs::create_directories(dir / "frames");
  fs::create_directories(dir / "gbuf");
  DatasetWriter writer(dir);
  for (std::size_t q = 0; q < episode.frames.size(); ++q)
    writer.put(numbered("frames/q%06zu.png", q), encode_png(episode.frames[q]));
  for (std::size_t k = 0; k < episode.gbuffers.size(); ++k) {
    const GBufferSet& g = episode.gbuffers[k];
    writer.put(numbered("gbuf/%06zu.mvd", k), encode_vec2_raster(g.motion_dense));
    writer.put(numbered("gbuf/%06zu.mvb", k), encode_vec2_raster(g.motion_blocks));
    writer.put(numbered("gbuf/%06zu.stencil.png", k), encode_png(g.stencil));
    writer.put(numbered("gbuf/%06zu.normal.bin", k), encode_vec3_raster(g.world_normal, kNormalMagic));
    writer.put(numbered("gbuf/%06zu.wpos.bin", k), encode_vec3_raster(g.world_position, kPositionMagic));
  }
  json manifest = {
      {"format_version", kDatasetFormatVersion},
      {"width", episode.width},
      {"height", episode.height},
      {"base_fps", episode.base_fps},
      {"episode_len", episode.gbuffers.size()},
      {"rng_seed", episode.rng_seed},
      {"checksums", writer.checksums()},
  };
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

Episode load_dataset(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) throw FormatError("missing manifest: " + manifest_path.string());
  json manifest;
  try {
    const auto bytes = read_file(manifest_path);
    manifest = json::parse(bytes.begin(), bytes.end());
  } catch (const json::exception& e) {
    throw FormatError("unreadable manifest: " + std::string(e.what()));
  }

  Episode ep;
  int episode_len = 0;
  try {
    const auto version = manifest.at("format_version").get<std::uint32_t>();
    if (version != kDatasetFormatVersion)
      throw FormatError("format-version mismatch: dataset has " + std::to_string(version) +
                        ", reader supports " + std::to_string(kDatasetFormatVersion));
    ep.width = manifest.at("width").get<int>();
    ep.height = manifest.at("height").get<int>();
    ep.base_fps = manifest.at("base_fps").get<double>();
    ep.rng_seed = manifest.at("rng_seed").get<std::uint64_t>();
    episode_len = manifest.at("episode_len").get<int>();
    if (!manifest.at("checksums").is_object()) throw FormatError("checksums must be an object");
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest: " + std::string(e.what()));
  }
  if (ep.width <= 0 || ep.height <= 0 || ep.width % kBlockSize || ep.height % kBlockSize)
    throw FormatError("manifest dimensions must be positive multiples of 16");
  if (episode_len < 1) throw FormatError("manifest episode_len must be positive");

  const DatasetReader reader(dir, manifest.at("checksums"));
  const int bw = ep.width / kBlockSize;
  const int bh = ep.height / kBlockSize;
  const std::size_t quarter_slots = 4 * static_cast<std::size_t>(episode_len) - 3;
  ep.frames.reserve(quarter_slots);
  for (std::size_t q = 0; q < quarter_slots; ++q) {
    const std::string rel = numbered("frames/q%06zu.png", q);
    Frame f = decode_png_rgb(reader.get(rel));
    expect_shape(f.pixels, ep.width, ep.height, rel);
    f.timestamp = static_cast<std::int64_t>(q);
    ep.frames.push_back(std::move(f));
  }
  for (int k = 0; k < episode_len; ++k) {
    const auto idx = static_cast<std::size_t>(k);
    GBufferSet g;
    std::string rel = numbered("gbuf/%06zu.mvd", idx);
    g.motion_dense = decode_vec2_raster(reader.get(rel));
    expect_shape(g.motion_dense, ep.width, ep.height, rel);
    rel = numbered("gbuf/%06zu.mvb", idx);
    g.motion_blocks = decode_vec2_raster(reader.get(rel));
    expect_shape(g.motion_blocks, bw, bh, rel);
    rel = numbered("gbuf/%06zu.stencil.png", idx);
    g.stencil = decode_png_gray(reader.get(rel));
    expect_shape(g.stencil, ep.width, ep.height, rel);
    rel = numbered("gbuf/%06zu.normal.bin", idx);
    g.world_normal = decode_vec3_raster(reader.get(rel), kNormalMagic);
    expect_shape(g.world_normal, ep.width, ep.height, rel);
    rel = numbered("gbuf/%06zu.wpos.bin", idx);
    g.world_position = decode_vec3_raster(reader.get(rel), kPositionMagic);
    expect_shape(g.world_position, ep.width, ep.height, rel);
    ep.gbuffers.push_back(std::move(g));
  }
  return ep;
}

}  // namespace exwarp
