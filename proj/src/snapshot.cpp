#include "mxh/snapshot.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <iomanip>

namespace mxh {

namespace {

constexpr char kMagic[8] = {'M', 'X', 'H', 'S', 'N', 'A', 'P', '\0'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put_le(std::string& buf, T value) {
  static_assert(sizeof(T) == 4 || sizeof(T) == 8);
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  const U bits = std::bit_cast<U>(value);
  for (std::size_t b = 0; b < sizeof(T); ++b) buf.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

template <class T>
T get_le(const std::string& buf, std::size_t& pos) {
  using U = std::conditional_t<sizeof(T) == 4, std::uint32_t, std::uint64_t>;
  if (pos + sizeof(T) > buf.size()) throw Error(ErrorCode::io, "snapshot truncated");
  U bits = 0;
  for (std::size_t b = 0; b < sizeof(T); ++b) {
    bits |= static_cast<U>(static_cast<unsigned char>(buf[pos + b])) << (8 * b);
  }
  pos += sizeof(T);
  return std::bit_cast<T>(bits);
}

void write_impl(const std::filesystem::path& path, const std::string& name, const Grid& g, double time,
                const std::vector<const ScalarField*>& comps) {
  std::string buf(kMagic, sizeof(kMagic));
  put_le(buf, kVersion);
  put_le(buf, static_cast<std::uint32_t>(g.dim()));
  for (int a = 0; a < 3; ++a) put_le(buf, static_cast<std::uint32_t>(g.extents()[a]));
  for (int a = 0; a < 3; ++a) put_le(buf, g.lengths()[a]);
  put_le(buf, time);
  put_le(buf, static_cast<std::uint32_t>(comps.size()));
  put_le(buf, static_cast<std::uint32_t>(name.size()));
  buf += name;
  for (const auto* c : comps) {
    for (double x : c->values()) put_le(buf, x);
  }
  std::ofstream bin(path, std::ios::binary);
  if (!bin) throw Error(ErrorCode::io, "cannot open " + path.string());
  bin.write(buf.data(), static_cast<std::streamsize>(buf.size()));

  std::filesystem::path meta = path;
  meta += ".txt";
  std::ofstream txt(meta);
  if (!txt) throw Error(ErrorCode::io, "cannot open " + meta.string());
  txt << std::setprecision(17);
  txt << "format = mxh-snapshot\nversion = " << kVersion << "\nname = " << name << "\ntime = " << time
      << "\ndim = " << g.dim() << "\npoints = " << g.extents()[0] << ' ' << g.extents()[1] << ' ' << g.extents()[2]
      << "\nlengths = " << g.lengths()[0] << ' ' << g.lengths()[1] << ' ' << g.lengths()[2]
      << "\ncomponents = " << comps.size() << "\nbyte_order = little-endian\nsample_type = float64\n";
}

}  // namespace

void write_snapshot(const std::filesystem::path& path, const std::string& name, const ScalarField& f, double time) {
  write_impl(path, name, f.grid(), time, {&f});
}

void write_snapshot(const std::filesystem::path& path, const std::string& name, const VectorField& f, double time) {
  write_impl(path, name, f.grid(), time, {&f[0], &f[1], &f[2]});
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::io, "cannot open " + path.string());
  const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (buf.size() < sizeof(kMagic) || std::memcmp(buf.data(), kMagic, sizeof(kMagic)) != 0) {
    throw Error(ErrorCode::io, path.string() + " is not a snapshot file");
  }
  std::size_t pos = sizeof(kMagic);
  if (get_le<std::uint32_t>(buf, pos) != kVersion) throw Error(ErrorCode::io, "unsupported snapshot version");
  Snapshot s;
  s.dim = static_cast<int>(get_le<std::uint32_t>(buf, pos));
  for (int a = 0; a < 3; ++a) s.points[a] = static_cast<int>(get_le<std::uint32_t>(buf, pos));
  for (int a = 0; a < 3; ++a) s.lengths[a] = get_le<double>(buf, pos);
  s.time = get_le<double>(buf, pos);
  s.components = static_cast<int>(get_le<std::uint32_t>(buf, pos));
  const std::uint32_t n = get_le<std::uint32_t>(buf, pos);
  if (pos + n > buf.size()) throw Error(ErrorCode::io, "snapshot truncated");
  s.name = buf.substr(pos, n);
  pos += n;
  const std::size_t count =
      static_cast<std::size_t>(s.components) * s.points[0] * s.points[1] * s.points[2];
  s.samples.reserve(count);
  for (std::size_t i = 0; i < count; ++i) s.samples.push_back(get_le<double>(buf, pos));
  if (pos != buf.size()) throw Error(ErrorCode::io, "trailing bytes in snapshot");
  return s;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, std::vector<std::string> columns)
    : out_(path), columns_(std::move(columns)) {
  if (!out_) throw Error(ErrorCode::io, "cannot open " + path.string());
  for (std::size_t i = 0; i < columns_.size(); ++i) out_ << (i ? "," : "") << columns_[i];
  out_ << '\n';
  out_ << std::setprecision(17);
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != columns_.size()) {
    throw Error(ErrorCode::io, "csv row has " + std::to_string(values.size()) + " values, header has " +
                                   std::to_string(columns_.size()));
  }
  for (std::size_t i = 0; i < values.size(); ++i) out_ << (i ? "," : "") << values[i];
  out_ << '\n';
}

}  // namespace mxh
