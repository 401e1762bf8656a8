#include "xfer/npy.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <string_view>

#include "xfer/error.hpp"

namespace xfer::npy {
namespace {

constexpr std::byte kMagic[6] = {std::byte{0x93}, std::byte{'N'}, std::byte{'U'},
                                 std::byte{'M'},  std::byte{'P'}, std::byte{'Y'}};
constexpr std::size_t kPreambleBytes = 10;

std::size_t item_size(Dtype dtype) { return dtype == Dtype::Float32 ? 4 : 8; }

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Returns the raw text of the value bound to `key` in the header dictionary,
// up to the next top-level comma or closing brace.
std::optional<std::string_view> dict_value(std::string_view dict, std::string_view key) {
  for (const char quote : {'\'', '"'}) {
    const std::string needle = std::string(1, quote) + std::string(key) + std::string(1, quote);
    const auto pos = dict.find(needle);
    if (pos == std::string_view::npos) continue;
    auto rest = dict.substr(pos + needle.size());
    rest = trim(rest);
    if (rest.empty() || rest.front() != ':') return std::nullopt;
    rest = trim(rest.substr(1));
    int depth = 0;
    std::size_t end = 0;
    for (; end < rest.size(); ++end) {
      const char c = rest[end];
      if (c == '(' || c == '[') ++depth;
      if (c == ')' || c == ']') --depth;
      if (depth == 0 && (c == ',' || c == '}')) break;
      if (depth < 0) break;
    }
    return trim(rest.substr(0, end));
  }
  return std::nullopt;
}

std::vector<std::size_t> parse_shape(std::string_view text) {
  if (text.size() < 2 || text.front() != '(' || text.back() != ')') {
    fail(ErrorCode::MalformedHeader, "shape is not a tuple: " + std::string(text));
  }
  std::vector<std::size_t> shape;
  std::string_view inner = text.substr(1, text.size() - 2);
  while (!inner.empty()) {
    const auto comma = inner.find(',');
    const auto item = trim(inner.substr(0, comma));
    if (!item.empty()) {
      std::size_t value = 0;
      for (const char c : item) {
        if (!std::isdigit(static_cast<unsigned char>(c))) {
          fail(ErrorCode::MalformedHeader, "non-integer shape entry: " + std::string(item));
        }
        value = value * 10 + static_cast<std::size_t>(c - '0');
      }
      shape.push_back(value);
    }
    if (comma == std::string_view::npos) break;
    inner.remove_prefix(comma + 1);
  }
  return shape;
}

template <typename T>
T load_le(const std::byte* src) {
  T value;
  std::memcpy(&value, src, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    std::reverse(raw, raw + sizeof(T));
  }
  return value;
}

template <typename T>
void store_le(T value, std::byte* dst) {
  if constexpr (std::endian::native == std::endian::big) {
    auto* raw = reinterpret_cast<unsigned char*>(&value);
    std::reverse(raw, raw + sizeof(T));
  }
  std::memcpy(dst, &value, sizeof(T));
}

}  // namespace

Header parse_header(std::span<const std::byte> bytes) {
  if (bytes.size() < kPreambleBytes || !std::equal(std::begin(kMagic), std::end(kMagic), bytes.begin())) {
    fail(ErrorCode::BadMagic, "missing NPY magic string");
  }
  const auto major = std::to_integer<int>(bytes[6]);
  const auto minor = std::to_integer<int>(bytes[7]);
  if (major != 1 || minor != 0) {
    fail(ErrorCode::MalformedHeader,
         "unsupported NPY version " + std::to_string(major) + "." + std::to_string(minor));
  }
  const std::size_t header_len =
      std::to_integer<std::size_t>(bytes[8]) | (std::to_integer<std::size_t>(bytes[9]) << 8);
  if (bytes.size() < kPreambleBytes + header_len) {
    fail(ErrorCode::MalformedHeader, "header length exceeds file size");
  }
  const std::string dict(reinterpret_cast<const char*>(bytes.data() + kPreambleBytes), header_len);

  Header header;
  header.payload_offset = kPreambleBytes + header_len;

  const auto descr = dict_value(dict, "descr");
  const auto fortran = dict_value(dict, "fortran_order");
  const auto shape = dict_value(dict, "shape");
  if (!descr || !fortran || !shape) {
    fail(ErrorCode::MalformedHeader, "header dictionary lacks descr, fortran_order or shape: " + dict);
  }
  std::string d(*descr);
  if (d.size() >= 2 && (d.front() == '\'' || d.front() == '"')) d = d.substr(1, d.size() - 2);
  if (d == "<f8") {
    header.dtype = Dtype::Float64;
  } else if (d == "<f4") {
    header.dtype = Dtype::Float32;
  } else {
    fail(ErrorCode::UnsupportedDtype, "unsupported dtype '" + d + "' (expected <f4 or <f8)");
  }
  if (*fortran == "True") {
    header.fortran_order = true;
    fail(ErrorCode::FortranOrderUnsupported, "Fortran-ordered arrays are not supported");
  }
  if (*fortran != "False") {
    fail(ErrorCode::MalformedHeader, "fortran_order must be True or False");
  }
  header.shape = parse_shape(*shape);
  if (header.shape.empty() || header.shape.size() > 2) {
    fail(ErrorCode::MalformedHeader, "only 1-D and 2-D arrays are supported");
  }
  return header;
}

Array decode(std::span<const std::byte> bytes) {
  Array array;
  array.header = parse_header(bytes);
  const auto& shape = array.header.shape;
  const std::size_t rows = shape[0];
  const std::size_t cols = shape.size() == 2 ? shape[1] : 1;
  const std::size_t width = item_size(array.header.dtype);
  const std::size_t expected = rows * cols * width;
  const std::size_t actual = bytes.size() - array.header.payload_offset;
  if (actual != expected) {
    fail(ErrorCode::TruncatedPayload, "payload holds " + std::to_string(actual) + " bytes, header promises " +
                                          std::to_string(expected));
  }
  array.values.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const std::byte* src = bytes.data() + array.header.payload_offset;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c, src += width) {
      const double v = array.header.dtype == Dtype::Float64 ? load_le<double>(src)
                                                            : static_cast<double>(load_le<float>(src));
      array.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = v;
    }
  }
  return array;
}

Array read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::MissingFile, "cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode(std::as_bytes(std::span(raw)));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

std::vector<std::byte> encode(const Matrix& values, Dtype dtype) {
  std::string dict = "{'descr': '";
  dict += dtype == Dtype::Float64 ? "<f8" : "<f4";
  dict += "', 'fortran_order': False, 'shape': (" + std::to_string(values.rows()) + ", " +
          std::to_string(values.cols()) + "), }";
  // Pad so that preamble + dict + '\n' is a multiple of 64.
  const std::size_t unpadded = kPreambleBytes + dict.size() + 1;
  dict.append((64 - unpadded % 64) % 64, ' ');
  dict.push_back('\n');

  const std::size_t width = item_size(dtype);
  std::vector<std::byte> out(kPreambleBytes + dict.size() +
                             static_cast<std::size_t>(values.size()) * width);
  std::copy(std::begin(kMagic), std::end(kMagic), out.begin());
  out[6] = std::byte{1};
  out[7] = std::byte{0};
  out[8] = static_cast<std::byte>(dict.size() & 0xff);
  out[9] = static_cast<std::byte>((dict.size() >> 8) & 0xff);
  std::memcpy(out.data() + kPreambleBytes, dict.data(), dict.size());

  std::byte* dst = out.data() + kPreambleBytes + dict.size();
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c, dst += width) {
      if (dtype == Dtype::Float64) {
        store_le<double>(values(r, c), dst);
      } else {
        store_le<float>(static_cast<float>(values(r, c)), dst);
      }
    }
  }
  return out;
}

void write(const std::filesystem::path& path, const Matrix& values, Dtype dtype) {
  const auto bytes = encode(values, dtype);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::IoError, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) fail(ErrorCode::IoError, "short write to " + path.string());
}

}  // namespace xfer::npy

namespace xfer {

FeatureMatrix read_array(const std::filesystem::path& path) {
  auto array = npy::read(path);
  try {
    return FeatureMatrix(std::move(array.values));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

PosteriorGrid read_posterior_grid(const std::filesystem::path& path) {
  auto array = npy::read(path);
  try {
    return PosteriorGrid(std::move(array.values));
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_array(const std::filesystem::path& path, const Matrix& values, npy::Dtype dtype) {
  npy::write(path, values, dtype);
}

}  // namespace xfer
