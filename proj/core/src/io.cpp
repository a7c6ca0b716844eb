#include "concentra/io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>

#include "concentra/errors.hpp"

namespace concentra {

std::string format_number(double v) {
  char buf[40];
  // shortest representation that round-trips
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    double back = 0.0;
    std::sscanf(buf, "%lf", &back);
    if (back == v) return buf;
  }
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ResourceError("write_csv: cannot open " + path);
  for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
  os << "\n";
  for (const auto& row : rows) {
    for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
    os << "\n";
  }
}

std::string kv_record(const EnergyReport& r) {
  std::string out;
  out += "value = " + format_number(r.value) + "\n";
  out += "grad_norm = " + format_number(r.grad_norm) + "\n";
  out += "kinetic = " + format_number(r.kinetic) + "\n";
  out += "potential = " + format_number(r.potential) + "\n";
  out += "nonlinear = " + format_number(r.nonlinear) + "\n";
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

} // namespace concentra
