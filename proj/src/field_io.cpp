#include "sifield/field_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <zlib.h>

#include "json.hpp"

namespace sifield {

namespace fs = std::filesystem;

namespace {

constexpr char kMagic[6] = {'S', 'I', 'F', 'L', 'D', '1'};

static_assert(std::endian::native == std::endian::little, "field files are written on little-endian hosts only");

template <typename T>
void put(std::vector<std::uint8_t>& out, T value) {
  const auto* p = reinterpret_cast<const std::uint8_t*>(&value);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T get(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  if (pos + sizeof(T) > bytes.size()) throw IoError("field file truncated");
  T value;
  std::memcpy(&value, bytes.data() + pos, sizeof(T));
  pos += sizeof(T);
  return value;
}

std::uint32_t crc_of(const std::uint8_t* data, std::size_t len) {
  uLong crc = crc32(0L, Z_NULL, 0);
  // zlib takes uInt lengths; feed in chunks.
  while (len > 0) {
    const auto chunk = static_cast<uInt>(std::min<std::size_t>(len, 1u << 30));
    crc = crc32(crc, data, chunk);
    data += chunk;
    len -= chunk;
  }
  return static_cast<std::uint32_t>(crc);
}

int n_from_axis(Basis basis, std::uint32_t axis) {
  return basis == Basis::DirichletSine ? 2 * (static_cast<int>(axis) + 1) : static_cast<int>(axis);
}

std::string sample_name(std::size_t i) { return fmt::format("sample_{:06d}.sifld", i); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_number(const std::string& s, const fs::path& path, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw IoError(fmt::format("{}:{}: invalid number '{}'", path.string(), line, s));
  }
}

std::ifstream open_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return in;
}

}  // namespace

std::vector<std::uint8_t> encode_field(const RealField& f) {
  const GridSpec& g = f.grid;
  if (f.values.size() != g.size()) throw IoError("field size does not match its grid");
  std::vector<std::uint8_t> out(kMagic, kMagic + sizeof(kMagic));
  put<std::uint16_t>(out, kFieldFormatVersion);
  put<std::uint16_t>(out, static_cast<std::uint16_t>(g.ndim()));
  for (int d = 0; d < g.ndim(); ++d) put<std::uint32_t>(out, static_cast<std::uint32_t>(g.axis_size()));
  put<std::uint8_t>(out, static_cast<std::uint8_t>(g.basis()));
  const std::size_t payload_at = out.size();
  for (const double v : f.values) put<double>(out, v);
  put<std::uint32_t>(out, crc_of(out.data() + payload_at, out.size() - payload_at));
  return out;
}

RealField decode_field(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw IoError("not a field file (bad magic)");
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint16_t>(bytes, pos);
  if (version != kFieldFormatVersion) throw IoError(fmt::format("unsupported field file version {}", version));
  const auto ndim = get<std::uint16_t>(bytes, pos);
  if (ndim != 1 && ndim != 2) throw IoError(fmt::format("unsupported field dimension {}", ndim));
  std::uint32_t dims[2] = {0, 0};
  for (int d = 0; d < ndim; ++d) dims[d] = get<std::uint32_t>(bytes, pos);
  if (ndim == 2 && dims[0] != dims[1]) throw IoError("non-square field grids are not supported");
  const auto tag = get<std::uint8_t>(bytes, pos);
  if (tag > 2) throw IoError(fmt::format("unknown basis tag {}", tag));
  const auto basis = static_cast<Basis>(tag);

  GridSpec grid;
  try {
    grid = GridSpec(ndim, n_from_axis(basis, dims[0]), basis);
  } catch (const std::invalid_argument& e) {
    throw IoError(fmt::format("invalid grid in field header: {}", e.what()));
  }
  if (grid.axis_size() != static_cast<int>(dims[0])) throw IoError("field header dims inconsistent with basis");
  const std::size_t payload = grid.size() * sizeof(double);
  if (bytes.size() < pos + payload + sizeof(std::uint32_t)) throw IoError("field file truncated");
  if (bytes.size() > pos + payload + sizeof(std::uint32_t)) throw IoError("trailing bytes after field payload");
  const std::uint32_t expected = crc_of(bytes.data() + pos, payload);
  std::size_t crc_pos = pos + payload;
  if (get<std::uint32_t>(bytes, crc_pos) != expected) throw IoError("field payload CRC mismatch");

  RealField f(grid);
  std::memcpy(f.values.data(), bytes.data() + pos, payload);
  return f;
}

void write_bytes_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError(fmt::format("cannot create {}: {}", path.parent_path().string(), ec.message()));
  }
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError(fmt::format("cannot write {}", tmp.string()));
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw IoError(fmt::format("write failed for {}", tmp.string()));
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError(fmt::format("cannot move {} into place: {}", path.string(), ec.message()));
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_bytes_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::vector<std::uint8_t> read_bytes(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_field(const fs::path& path, const RealField& f) { write_bytes_atomic(path, encode_field(f)); }

RealField read_field(const fs::path& path) {
  try {
    return decode_field(read_bytes(path));
  } catch (const IoError& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_ensemble(const fs::path& dir, const FieldEnsemble& e) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(fmt::format("cannot create {}: {}", dir.string(), ec.message()));
  for (const auto& entry : fs::directory_iterator(dir)) {
    const std::string name = entry.path().filename().string();
    if (name.starts_with("sample_") && name.ends_with(".sifld")) fs::remove(entry.path());
  }
  nlohmann::json files = nlohmann::json::array();
  for (std::size_t i = 0; i < e.size(); ++i) {
    require_same_grid(e.samples[i].grid, e.grid, "write_ensemble");
    write_field(dir / sample_name(i), e.samples[i]);
    files.push_back(sample_name(i));
  }
  nlohmann::json manifest;
  manifest["format"] = "SIFLD1";
  manifest["grid"] = {{"ndim", e.grid.ndim()}, {"n", e.grid.n()}, {"basis", std::string(to_string(e.grid.basis()))}};
  manifest["count"] = e.size();
  manifest["files"] = files;
  manifest["metadata"] = e.metadata;
  write_text_atomic(dir / "manifest.json", manifest.dump(2) + "\n");
}

FieldEnsemble read_ensemble(const fs::path& dir) {
  nlohmann::json manifest;
  try {
    const auto bytes = read_bytes(dir / "manifest.json");
    manifest = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(fmt::format("{}: malformed manifest: {}", (dir / "manifest.json").string(), ex.what()));
  }
  FieldEnsemble e;
  try {
    const auto& g = manifest.at("grid");
    e.grid = GridSpec(g.at("ndim").get<int>(), g.at("n").get<int>(), basis_from_string(g.at("basis").get<std::string>()));
    for (const auto& name : manifest.at("files")) {
      RealField f = read_field(dir / name.get<std::string>());
      if (!(f.grid == e.grid)) throw IoError(fmt::format("{}: grid differs from manifest", name.get<std::string>()));
      e.samples.push_back(std::move(f));
    }
    if (manifest.contains("metadata")) e.metadata = manifest["metadata"].get<std::map<std::string, std::string>>();
    if (manifest.at("count").get<std::size_t>() != e.size()) throw IoError("manifest count does not match file list");
  } catch (const nlohmann::json::exception& ex) {
    throw IoError(fmt::format("{}: malformed manifest: {}", dir.string(), ex.what()));
  } catch (const std::invalid_argument& ex) {
    throw IoError(fmt::format("{}: {}", dir.string(), ex.what()));
  }
  return e;
}

std::string format_spectrum(const SpectrumReport& r) {
  std::string out = "k,E,E_ref,abs_log10_err\n";
  for (const auto& s : r.shells) {
    if (s.reference) {
      const double err = std::abs(std::log10(s.estimate) - std::log10(*s.reference));
      out += fmt::format("{},{:.17g},{:.17g},{:.17g}\n", s.k, s.estimate, *s.reference, err);
    } else {
      out += fmt::format("{},{:.17g},,\n", s.k, s.estimate);
    }
  }
  return out;
}

void write_spectrum(const fs::path& path, const SpectrumReport& r) { write_text_atomic(path, format_spectrum(r)); }

SpectrumReport read_spectrum(const fs::path& path, const GridSpec& grid) {
  auto in = open_text(path);
  std::string line;
  if (!std::getline(in, line) || line != "k,E,E_ref,abs_log10_err")
    throw IoError(fmt::format("{}: expected header 'k,E,E_ref,abs_log10_err'", path.string()));
  SpectrumReport r;
  r.grid = grid;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw IoError(fmt::format("{}:{}: expected 4 columns", path.string(), lineno));
    ShellEstimate s;
    s.k = static_cast<int>(parse_number(cells[0], path, lineno));
    s.estimate = parse_number(cells[1], path, lineno);
    if (!cells[2].empty()) s.reference = parse_number(cells[2], path, lineno);
    r.shells.push_back(s);
  }
  if (r.shells.empty()) throw IoError(fmt::format("{}: no shells", path.string()));
  return r;
}

void write_mode_spectrum(const fs::path& path, const ModeSpectrum& s) {
  const GridSpec& g = s.grid;
  std::string out = fmt::format("# grid ndim={} n={} basis={}\nindex,m0,m1,variance\n", g.ndim(), g.n(), to_string(g.basis()));
  for (std::size_t i = 0; i < s.variance.size(); ++i) {
    const ModeIndex m = g.mode_index(i);
    out += fmt::format("{},{},{},{:.17g}\n", i, m[0], m[1], s.variance[i]);
  }
  write_text_atomic(path, out);
}

ModeSpectrum read_mode_spectrum(const fs::path& path) {
  auto in = open_text(path);
  std::string line;
  int ndim = 0, n = 0;
  char basis[64] = {};
  if (!std::getline(in, line) || std::sscanf(line.c_str(), "# grid ndim=%d n=%d basis=%63s", &ndim, &n, basis) != 3)
    throw IoError(fmt::format("{}: missing '# grid' line", path.string()));
  if (!std::getline(in, line) || line != "index,m0,m1,variance")
    throw IoError(fmt::format("{}: expected header 'index,m0,m1,variance'", path.string()));
  GridSpec grid;
  try {
    grid = GridSpec(ndim, n, basis_from_string(basis));
  } catch (const std::invalid_argument& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
  std::vector<double> v(grid.mode_count(), 0.0);
  std::vector<bool> seen(v.size(), false);
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != 4) throw IoError(fmt::format("{}:{}: expected 4 columns", path.string(), lineno));
    const auto i = static_cast<std::size_t>(parse_number(cells[0], path, lineno));
    if (i >= v.size()) throw IoError(fmt::format("{}:{}: index out of range", path.string(), lineno));
    v[i] = parse_number(cells[3], path, lineno);
    seen[i] = true;
  }
  if (std::find(seen.begin(), seen.end(), false) != seen.end())
    throw IoError(fmt::format("{}: missing mode rows", path.string()));
  try {
    return {grid, std::move(v)};
  } catch (const std::invalid_argument& e) {
    throw IoError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_conditioning(const fs::path& path, const ConditioningReport& r) {
  std::string out = "t,envelope,m0,m1,coefficient\n";
  for (const auto& row : r.rows)
    out += fmt::format("{:.17g},{:.17g},{},{},{:.17g}\n", row.t, row.envelope, row.worst_mode[0], row.worst_mode[1],
                       row.coefficient);
  write_text_atomic(path, out);
}

}  // namespace sifield
