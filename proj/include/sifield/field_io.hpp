#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "sifield/diagnostics.hpp"
#include "sifield/gaussian_measure.hpp"

namespace sifield {

/// Malformed or unreadable artifact.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Field file layout (little endian):
///   "SIFLD1" | u16 version = 1 | u16 ndim | u32 dims[ndim] | u8 basis tag |
///   f64 payload[Π dims] (row-major) | u32 CRC-32 of the payload bytes.
/// dims are the stored axis sizes, so a dirichlet-sine grid with n points per
/// period has dims = n/2 - 1.
inline constexpr std::uint16_t kFieldFormatVersion = 1;

std::vector<std::uint8_t> encode_field(const RealField& f);
RealField decode_field(std::span<const std::uint8_t> bytes);

/// Writes via a temporary file in the same directory followed by a rename.
void write_bytes_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

void write_field(const std::filesystem::path& path, const RealField& f);
RealField read_field(const std::filesystem::path& path);

/// Directory of sample_NNNNNN.sifld files plus manifest.json (grid, count,
/// file list, metadata).
void write_ensemble(const std::filesystem::path& dir, const FieldEnsemble& e);
FieldEnsemble read_ensemble(const std::filesystem::path& dir);

/// CSV "k,E,E_ref,abs_log10_err"; the last two columns are empty without a reference.
std::string format_spectrum(const SpectrumReport& r);
void write_spectrum(const std::filesystem::path& path, const SpectrumReport& r);
/// Needs the grid the shells refer to.
SpectrumReport read_spectrum(const std::filesystem::path& path, const GridSpec& grid);

/// CSV with a "# grid ndim=.. n=.. basis=.." line then "index,m0,m1,variance".
void write_mode_spectrum(const std::filesystem::path& path, const ModeSpectrum& s);
ModeSpectrum read_mode_spectrum(const std::filesystem::path& path);

/// CSV "t,envelope,m0,m1,coefficient".
void write_conditioning(const std::filesystem::path& path, const ConditioningReport& r);

}  // namespace sifield
