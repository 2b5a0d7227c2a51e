#include "radarfuse/io.hpp"

#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>

namespace radarfuse::io {

namespace {

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw std::runtime_error("read failed on " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FileWriteError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw FileWriteError("write failed on " + path.string());
}

void append_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_f32(std::vector<std::uint8_t>& out, float v) {
  append_u32(out, std::bit_cast<std::uint32_t>(v));
}

// Bounds-checked little-endian cursor over a loaded file.
struct Reader {
  const std::vector<std::uint8_t>& bytes;
  std::size_t pos = 0;
  std::string origin;

  void need(std::size_t n) const {
    if (pos + n > bytes.size()) throw FormatError("truncated file " + origin);
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = static_cast<std::uint32_t>(bytes[pos]) |
                      (static_cast<std::uint32_t>(bytes[pos + 1]) << 8) |
                      (static_cast<std::uint32_t>(bytes[pos + 2]) << 16) |
                      (static_cast<std::uint32_t>(bytes[pos + 3]) << 24);
    pos += 4;
    return v;
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes.data() + pos), n);
    pos += n;
    return s;
  }
};

void check_magic(Reader& r, const char* magic) {
  if (r.bytes.size() < 4 || std::memcmp(r.bytes.data(), magic, 4) != 0) {
    throw FormatError("bad magic in " + r.origin + " (expected " + magic + ")");
  }
  r.pos = 4;
}

std::vector<std::uint8_t> encode_planes(const char* magic, int width, int height,
                                        std::span<const float> values) {
  std::vector<std::uint8_t> out;
  out.reserve(12 + 4 * values.size());
  out.insert(out.end(), magic, magic + 4);
  append_u32(out, static_cast<std::uint32_t>(width));
  append_u32(out, static_cast<std::uint32_t>(height));
  for (float v : values) append_f32(out, v);
  return out;
}

const std::array<std::uint32_t, 256>& crc_table() {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
      t[i] = c;
    }
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double parsed = 0.0;
  try {
    parsed = std::stod(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
  }
  if (used != value.size() || !std::isfinite(parsed)) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + value + "'");
  }
  return parsed;
}

long long parse_int(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  long long parsed = 0;
  try {
    parsed = std::stoll(value, &used);
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + value + "'");
  }
  if (used != value.size()) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + value + "'");
  }
  return parsed;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config: key '" + key + "' wants true/false/1/0, got '" + value + "'");
}

}  // namespace

std::uint32_t crc32_ieee(std::span<const std::uint8_t> bytes) {
  std::uint32_t crc = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) crc = crc_table()[(crc ^ b) & 0xFFu] ^ (crc >> 8);
  return crc ^ 0xFFFFFFFFu;
}

void save_sdm1(const std::filesystem::path& path, const SparseDepthMap& map) {
  write_file_bytes(path, encode_planes("SDM1", map.width(), map.height(), map.values()));
}

SparseDepthMap load_sdm1(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  Reader r{bytes, 0, path.string()};
  check_magic(r, "SDM1");
  const auto w = r.u32();
  const auto h = r.u32();
  if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) {
    throw FormatError("implausible dimensions in " + path.string());
  }
  const std::size_t expected = 12 + 4ull * w * h;
  if (bytes.size() != expected) {
    throw FormatError("payload size mismatch in " + path.string() + " (want " +
                      std::to_string(expected) + " bytes, have " + std::to_string(bytes.size()) +
                      ")");
  }
  SparseDepthMap map(static_cast<int>(w), static_cast<int>(h));
  for (float& v : map.values()) v = r.f32();
  return map;
}

void save_sdm2(const std::filesystem::path& path, const Tensor<float>& planes) {
  if (planes.rank() != 3 || planes.shape()[0] != 2) {
    throw std::invalid_argument("save_sdm2: tensor must be (2,H,W)");
  }
  const int h = planes.shape()[1], w = planes.shape()[2];
  write_file_bytes(
      path, encode_planes("SDM2", w, h,
                          std::span<const float>(&planes[0],
                                                 static_cast<std::size_t>(planes.numel()))));
}

Tensor<float> load_sdm2(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  Reader r{bytes, 0, path.string()};
  check_magic(r, "SDM2");
  const auto w = r.u32();
  const auto h = r.u32();
  if (w == 0 || h == 0 || w > 1u << 16 || h > 1u << 16) {
    throw FormatError("implausible dimensions in " + path.string());
  }
  const std::size_t expected = 12 + 8ull * w * h;
  if (bytes.size() != expected) {
    throw FormatError("payload size mismatch in " + path.string());
  }
  Tensor<float> planes({2, static_cast<int>(h), static_cast<int>(w)});
  for (std::int64_t i = 0; i < planes.numel(); ++i) planes[i] = r.f32();
  return planes;
}

void save_pgm(const std::filesystem::path& path, const Tensor<float>& gray) {
  if (gray.rank() != 3 || gray.shape()[0] != 1) {
    throw std::invalid_argument("save_pgm: tensor must be (1,H,W)");
  }
  const int h = gray.shape()[1], w = gray.shape()[2];
  std::ostringstream header;
  header << "P5\n" << w << " " << h << "\n255\n";
  const std::string head = header.str();
  std::vector<std::uint8_t> bytes(head.begin(), head.end());
  for (std::int64_t i = 0; i < gray.numel(); ++i) {
    const double v = std::clamp(static_cast<double>(gray[i]), 0.0, 1.0);
    bytes.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
  }
  write_file_bytes(path, bytes);
}

Tensor<float> load_pgm(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
    throw FormatError("bad magic in " + path.string() + " (expected P5)");
  }
  std::size_t pos = 2;
  const auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::size_t start = pos;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) ++pos;
    if (pos == start) throw FormatError("malformed header in " + path.string());
    return std::stol(std::string(bytes.begin() + static_cast<std::ptrdiff_t>(start),
                                 bytes.begin() + static_cast<std::ptrdiff_t>(pos)));
  };
  const long w = next_token();
  const long h = next_token();
  const long maxval = next_token();
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 255) {
    throw FormatError("unsupported PGM header in " + path.string());
  }
  ++pos;  // single whitespace byte after maxval
  if (bytes.size() - pos != static_cast<std::size_t>(w) * static_cast<std::size_t>(h)) {
    throw FormatError("payload size mismatch in " + path.string());
  }
  Tensor<float> gray({1, static_cast<int>(h), static_cast<int>(w)});
  for (std::int64_t i = 0; i < gray.numel(); ++i) {
    gray[i] = static_cast<float>(bytes[pos + static_cast<std::size_t>(i)]) /
              static_cast<float>(maxval);
  }
  return gray;
}

void save_ppm(const std::filesystem::path& path, int width, int height,
              const std::vector<std::uint8_t>& rgb) {
  if (rgb.size() != 3ull * width * height) {
    throw std::invalid_argument("save_ppm: buffer must hold 3*W*H bytes");
  }
  std::ostringstream header;
  header << "P6\n" << width << " " << height << "\n255\n";
  const std::string head = header.str();
  std::vector<std::uint8_t> bytes(head.begin(), head.end());
  bytes.insert(bytes.end(), rgb.begin(), rgb.end());
  write_file_bytes(path, bytes);
}

namespace {

// Shared inverse-depth ramp: 1 at min_depth, 0 at max_depth.
double inverse_depth_t(double depth, double min_depth, double max_depth) {
  const double d = std::clamp(depth, min_depth, max_depth);
  return (1.0 / d - 1.0 / max_depth) / (1.0 / min_depth - 1.0 / max_depth);
}

void check_render_range(double min_depth, double max_depth) {
  if (!(min_depth > 0.0) || !(max_depth > min_depth)) {
    throw ConfigError("render range wants 0 < min < max, got [" + std::to_string(min_depth) +
                      ", " + std::to_string(max_depth) + "]");
  }
}

}  // namespace

Tensor<float> render_depth_gray(const SparseDepthMap& map, double min_depth, double max_depth) {
  check_render_range(min_depth, max_depth);
  Tensor<float> gray({1, map.height(), map.width()});
  for (int v = 0; v < map.height(); ++v) {
    for (int u = 0; u < map.width(); ++u) {
      gray(0, v, u) = map.measured(u, v)
                          ? static_cast<float>(inverse_depth_t(map.at(u, v), min_depth, max_depth))
                          : 0.0f;
    }
  }
  return gray;
}

std::vector<std::uint8_t> render_depth_rgb(const SparseDepthMap& map, double min_depth,
                                           double max_depth) {
  check_render_range(min_depth, max_depth);
  std::vector<std::uint8_t> rgb;
  rgb.reserve(3ull * map.width() * map.height());
  for (int v = 0; v < map.height(); ++v) {
    for (int u = 0; u < map.width(); ++u) {
      if (map.measured(u, v)) {
        const auto g = static_cast<std::uint8_t>(
            std::lround(255.0 * inverse_depth_t(map.at(u, v), min_depth, max_depth)));
        rgb.push_back(g);
        rgb.push_back(g);
        rgb.push_back(g);
      } else {
        rgb.push_back(255);
        rgb.push_back(0);
        rgb.push_back(0);
      }
    }
  }
  return rgb;
}

namespace {

std::vector<std::vector<double>> load_numeric_lines(const std::filesystem::path& path,
                                                    std::size_t columns) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    std::istringstream fields(body);
    std::vector<double> row;
    double value = 0.0;
    while (fields >> value) row.push_back(value);
    if (!fields.eof() || row.size() != columns) {
      throw FormatError("malformed line " + std::to_string(line_no) + " in " + path.string());
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw FileWriteError("cannot write " + path.string());
  out << text;
  out.flush();
  if (!out) throw FileWriteError("write failed on " + path.string());
}

std::string numeric_text(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void save_lidar_txt(const std::filesystem::path& path, const std::vector<CameraPoint3D>& points) {
  std::string text = "# X Y Z (meters, camera frame)\n";
  for (const auto& p : points) {
    if (!(p.z > 0.0)) throw std::invalid_argument("save_lidar_txt: Z must be positive");
    text += numeric_text(p.x) + " " + numeric_text(p.y) + " " + numeric_text(p.z) + "\n";
  }
  write_text(path, text);
}

std::vector<CameraPoint3D> load_lidar_txt(const std::filesystem::path& path) {
  std::vector<CameraPoint3D> points;
  for (const auto& row : load_numeric_lines(path, 3)) {
    if (!(row[2] > 0.0)) throw FormatError("non-positive Z in " + path.string());
    points.push_back({row[0], row[1], row[2]});
  }
  return points;
}

void save_radar_txt(const std::filesystem::path& path, const std::vector<RadarReturn>& returns) {
  std::string text = "# X Z (meters, camera frame, elevation unmeasured)\n";
  for (const auto& r : returns) {
    if (!(r.z > 0.0)) throw std::invalid_argument("save_radar_txt: Z must be positive");
    text += numeric_text(r.x) + " " + numeric_text(r.z) + "\n";
  }
  write_text(path, text);
}

std::vector<RadarReturn> load_radar_txt(const std::filesystem::path& path) {
  std::vector<RadarReturn> returns;
  for (const auto& row : load_numeric_lines(path, 2)) {
    if (!(row[1] > 0.0)) throw FormatError("non-positive Z in " + path.string());
    returns.push_back({row[0], row[1]});
  }
  return returns;
}

template <typename T>
void save_checkpoint(const std::filesystem::path& path, float d_max, int feature_channels,
                     std::span<const nn::ParamRef<T>> params) {
  std::vector<std::uint8_t> bytes{'R', 'F', 'C', 'K'};
  append_u32(bytes, 1);  // format version
  append_f32(bytes, d_max);
  append_u32(bytes, static_cast<std::uint32_t>(feature_channels));
  for (const auto& p : params) {
    append_u32(bytes, static_cast<std::uint32_t>(p.name.size()));
    bytes.insert(bytes.end(), p.name.begin(), p.name.end());
    const auto& shape = p.value->shape();
    append_u32(bytes, static_cast<std::uint32_t>(shape.size()));
    for (int dim : shape) append_u32(bytes, static_cast<std::uint32_t>(dim));
    for (std::int64_t i = 0; i < p.value->numel(); ++i) {
      append_f32(bytes, static_cast<float>((*p.value)[i]));
    }
  }
  append_u32(bytes, crc32_ieee(bytes));
  write_file_bytes(path, bytes);
}

CheckpointData load_checkpoint(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  Reader r{bytes, 0, path.string()};
  check_magic(r, "RFCK");
  if (bytes.size() < 20) throw FormatError("truncated file " + path.string());
  const std::size_t body_end = bytes.size() - 4;
  const std::uint32_t stored_crc =
      static_cast<std::uint32_t>(bytes[body_end]) |
      (static_cast<std::uint32_t>(bytes[body_end + 1]) << 8) |
      (static_cast<std::uint32_t>(bytes[body_end + 2]) << 16) |
      (static_cast<std::uint32_t>(bytes[body_end + 3]) << 24);
  const std::uint32_t actual_crc =
      crc32_ieee(std::span<const std::uint8_t>(bytes.data(), body_end));
  if (stored_crc != actual_crc) {
    throw FormatError("checksum mismatch in " + path.string());
  }

  CheckpointData data;
  const auto version = r.u32();
  if (version != 1) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version) + " in " +
                      path.string());
  }
  data.d_max = r.f32();
  data.feature_channels = static_cast<int>(r.u32());
  while (r.pos < body_end) {
    const auto name_len = r.u32();
    if (name_len == 0 || name_len > 4096) {
      throw FormatError("implausible parameter name in " + path.string());
    }
    std::string name = r.raw(name_len);
    const auto rank = r.u32();
    if (rank < 1 || rank > 4) throw FormatError("implausible parameter rank in " + path.string());
    std::vector<int> shape;
    std::int64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const auto dim = r.u32();
      if (dim == 0 || dim > 1u << 20) {
        throw FormatError("implausible parameter shape in " + path.string());
      }
      shape.push_back(static_cast<int>(dim));
      numel *= dim;
    }
    if (numel > (1ll << 28)) throw FormatError("implausible parameter size in " + path.string());
    Tensor<float> values(shape);
    for (std::int64_t i = 0; i < numel; ++i) values[i] = r.f32();
    data.params.emplace_back(std::move(name), std::move(values));
  }
  if (r.pos != body_end) throw FormatError("trailing bytes in " + path.string());
  return data;
}

template <typename T>
void restore_params(const CheckpointData& data, std::span<const nn::ParamRef<T>> params) {
  std::map<std::string, const Tensor<float>*> by_name;
  for (const auto& [name, tensor] : data.params) {
    if (!by_name.emplace(name, &tensor).second) {
      throw FormatError("duplicate parameter '" + name + "' in checkpoint");
    }
  }
  std::size_t used = 0;
  for (const auto& p : params) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) {
      throw FormatError("checkpoint is missing parameter '" + p.name + "'");
    }
    if (it->second->shape() != p.value->shape()) {
      throw FormatError("checkpoint shape mismatch for '" + p.name + "'");
    }
    for (std::int64_t i = 0; i < p.value->numel(); ++i) {
      (*p.value)[i] = static_cast<T>((*it->second)[i]);
    }
    ++used;
  }
  if (used != by_name.size()) {
    throw FormatError("checkpoint holds parameters the model does not expect");
  }
}

RunConfig parse_run_config_text(const std::string& text) {
  RunConfig config;
  const std::map<std::string, std::function<void(const std::string&, const std::string&)>>
      setters{
          {"t_abs", [&](const auto& k, const auto& v) { config.t_abs = parse_double(k, v); }},
          {"t_rel", [&](const auto& k, const auto& v) { config.t_rel = parse_double(k, v); }},
          {"v",
           [&](const auto& k, const auto& v) {
             config.v = static_cast<int>(parse_int(k, v));
           }},
          {"tau", [&](const auto& k, const auto& v) { config.tau = parse_double(k, v); }},
          {"lr", [&](const auto& k, const auto& v) { config.lr = parse_double(k, v); }},
          {"epochs",
           [&](const auto& k, const auto& v) {
             config.epochs = static_cast<int>(parse_int(k, v));
           }},
          {"seed",
           [&](const auto& k, const auto& v) {
             // stoull would silently wrap a leading minus sign.
             if (v.find_first_not_of("0123456789") != std::string::npos) {
               throw ConfigError("config: key '" + k + "' wants a non-negative integer, got '" +
                                 v + "'");
             }
             try {
               std::size_t used = 0;
               config.seed = std::stoull(v, &used);
               if (used != v.size()) throw std::invalid_argument(v);
             } catch (const ConfigError&) {
               throw;
             } catch (const std::exception&) {
               throw ConfigError("config: key '" + k + "' has non-integer value '" + v + "'");
             }
           }},
          {"d_max", [&](const auto& k, const auto& v) { config.d_max = parse_double(k, v); }},
          {"invert_class_weights",
           [&](const auto& k, const auto& v) { config.invert_class_weights = parse_bool(k, v); }},
          {"negatives_include_uncovered",
           [&](const auto& k, const auto& v) {
             config.negatives_include_uncovered = parse_bool(k, v);
           }},
          {"deterministic",
           [&](const auto& k, const auto& v) { config.deterministic = parse_bool(k, v); }},
      };

  std::istringstream lines(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(lines, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config: line " + std::to_string(line_no) + " is not 'key = value'");
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = setters.find(key);
    if (it == setters.end()) throw ConfigError("config: unknown key '" + key + "'");
    if (value.empty()) throw ConfigError("config: key '" + key + "' has an empty value");
    it->second(key, value);
  }

  if (!(config.t_abs > 0.0)) throw ConfigError("config: t_abs must be positive");
  if (!(config.t_rel > 0.0 && config.t_rel < 1.0)) {
    throw ConfigError("config: t_rel must be in (0,1)");
  }
  if (config.v < 1) throw ConfigError("config: v must be at least 1");
  if (!(config.tau >= 0.0 && config.tau <= 1.0)) throw ConfigError("config: tau must be in [0,1]");
  if (!(config.lr > 0.0)) throw ConfigError("config: lr must be positive");
  if (config.epochs < 1) throw ConfigError("config: epochs must be at least 1");
  if (!(config.d_max > 0.0)) throw ConfigError("config: d_max must be positive");
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_run_config_text(text.str());
}

template void save_checkpoint<float>(const std::filesystem::path&, float, int,
                                     std::span<const nn::ParamRef<float>>);
template void save_checkpoint<double>(const std::filesystem::path&, float, int,
                                      std::span<const nn::ParamRef<double>>);
template void restore_params<float>(const CheckpointData&, std::span<const nn::ParamRef<float>>);
template void restore_params<double>(const CheckpointData&, std::span<const nn::ParamRef<double>>);

}  // namespace radarfuse::io
