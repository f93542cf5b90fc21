#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

#include "sdcam/problems.hpp"

namespace sdcam {

namespace {

std::string hex32(std::uint32_t v) {
  std::ostringstream os;
  os << "0x" << std::hex;
  os.width(8);
  os.fill('0');
  os << v;
  return os.str();
}

}  // namespace

IdxData parse_idx(const std::vector<std::uint8_t>& bytes) {
  std::size_t pos = 0;
  auto read_u32 = [&](const char* what) {
    if (bytes.size() < pos + 4)
      throw std::runtime_error(std::string("idx: truncated ") + what + " at offset " +
                               std::to_string(pos));
    const std::uint32_t v = (std::uint32_t{bytes[pos]} << 24) | (std::uint32_t{bytes[pos + 1]} << 16) |
                            (std::uint32_t{bytes[pos + 2]} << 8) | std::uint32_t{bytes[pos + 3]};
    pos += 4;
    return v;
  };

  const std::uint32_t magic = read_u32("header");
  const std::uint32_t ndims = magic & 0xFFu;
  if ((magic & 0xFFFFFF00u) != 0x00000800u || ndims == 0)
    throw std::runtime_error("idx: bad magic " + hex32(magic) +
                             " at offset 0 (expected 0x00000801 or 0x00000803)");

  IdxData out;
  std::uint64_t count = 1;
  for (std::uint32_t k = 0; k < ndims; ++k) {
    const std::uint32_t d = read_u32("header");
    out.dims.push_back(d);
    count *= d;
  }
  if (bytes.size() - pos < count)
    throw std::runtime_error("idx: truncated payload at offset " + std::to_string(bytes.size()) +
                             " (expected " + std::to_string(count) + " data bytes from offset " +
                             std::to_string(pos) + ")");
  out.data.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + count));
  return out;
}

IdxData read_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("idx: cannot open " + path);
  const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                        std::istreambuf_iterator<char>());
  return parse_idx(bytes);
}

}  // namespace sdcam
