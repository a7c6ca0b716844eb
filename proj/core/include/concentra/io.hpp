#ifndef CONCENTRA_IO_HPP
#define CONCENTRA_IO_HPP

#include <string>
#include <vector>

#include "concentra/energy.hpp"

namespace concentra {

/// Shortest round-trip decimal representation; used everywhere numbers are
/// written so that identical runs produce identical bytes.
std::string format_number(double v);

/// Deterministic CSV: header plus rows, "\n" line endings.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

/// Flat key = value record of an EnergyReport.
std::string kv_record(const EnergyReport& report);

/// FNV-1a 64-bit hash, hex-encoded; used for config fingerprints.
std::string fnv1a_hex(const std::string& text);

} // namespace concentra

#endif
