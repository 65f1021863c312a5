#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "pnsim/distribution.hpp"
#include "pnsim/experiment.hpp"
#include "pnsim/histogram.hpp"
#include "pnsim/version.hpp"

// CSV writers and readers for the file formats the command line tool emits.
// Doubles are written with std::to_chars (shortest round-trip form) so that
// re-reading a file reproduces the exact binary values.

namespace pnsim {

/// Version, seed, and config fingerprint carried in the comment line every
/// writer places before the header.
struct MetaInfo {
  std::string version{kVersion};
  std::uint64_t seed = 0;
  std::string config_hash;  // 16 hex digits

  std::string comment_line() const {
    std::ostringstream os;
    os << "# " << kToolName << " " << version << " seed=" << seed
       << " config_hash=" << config_hash;
    return os.str();
  }
};

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  if (res.ec != std::errc{}) throw std::runtime_error("format_double: to_chars failed");
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s, const std::string& where) {
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error(where + ": malformed number '" + std::string(s) + "'");
  return v;
}

inline std::uint64_t parse_u64(std::string_view s, const std::string& where) {
  std::uint64_t v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw std::runtime_error(where + ": malformed count '" + std::string(s) + "'");
  return v;
}

namespace csvdetail {

inline std::ofstream open_out(const std::string& path) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  return os;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace csvdetail

/// One row per pulse: pulse_index, true pair number, both detected counts,
/// the analog trigger height, the idler pulse area, and the trigger label
/// (empty field when the pulse fell outside every window).
inline void write_records_csv(const std::string& path, const std::vector<PulseRecord>& records,
                              const MetaInfo& meta) {
  std::ofstream os = csvdetail::open_out(path);
  os << meta.comment_line() << "\n";
  os << "pulse_index,true_pairs,trigger_detected,trigger_height,trigger_label,"
        "idler_detected,idler_area\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const PulseRecord& r = records[i];
    os << i << ',' << r.true_pairs << ',' << r.trigger_detected << ','
       << format_double(r.trigger_height) << ',';
    if (r.trigger_label) os << *r.trigger_label;
    os << ',' << r.idler_detected << ',' << format_double(r.idler_area) << "\n";
  }
  if (!os) throw std::runtime_error("write failed: " + path);
}

/// bin_low, bin_high, count rows. An empty histogram produces only the
/// metadata comment and the header, which the reader accepts back.
inline void write_histogram_csv(const std::string& path, const Histogram& h,
                                const MetaInfo& meta) {
  std::ofstream os = csvdetail::open_out(path);
  os << meta.comment_line() << "\n";
  os << "bin_low,bin_high,count\n";
  for (int i = 0; i < h.size(); ++i)
    os << format_double(h.bin_low(i)) << ',' << format_double(h.bin_high(i)) << ','
       << h.count(i) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

/// Reads a histogram CSV back. Bins must be contiguous and uniform; errors
/// name the line at fault.
inline Histogram read_histogram_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open for reading: " + path);
  std::string line;
  std::size_t lineno = 0;
  // Comment lines, then the header.
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    break;
  }
  if (line != "bin_low,bin_high,count")
    throw std::runtime_error(path + ":" + std::to_string(lineno) +
                             ": expected header 'bin_low,bin_high,count'");

  std::vector<double> lows, highs;
  std::vector<std::uint64_t> counts;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const std::string where = path + ":" + std::to_string(lineno);
    const auto fields = csvdetail::split(line);
    if (fields.size() != 3) throw std::runtime_error(where + ": expected 3 fields");
    lows.push_back(parse_double(fields[0], where));
    highs.push_back(parse_double(fields[1], where));
    counts.push_back(parse_u64(fields[2], where));
  }
  if (lows.empty()) return Histogram{};

  const double width = highs[0] - lows[0];
  if (!(width > 0.0)) throw std::runtime_error(path + ": first bin has nonpositive width");
  const double tol = 1e-9 * std::max(1.0, std::abs(width));
  for (std::size_t i = 0; i < lows.size(); ++i) {
    if (std::abs((highs[i] - lows[i]) - width) > tol)
      throw std::runtime_error(path + ": bin " + std::to_string(i) + " width differs from bin 0");
    if (i > 0 && std::abs(lows[i] - highs[i - 1]) > tol)
      throw std::runtime_error(path + ": bin " + std::to_string(i) +
                               " is not contiguous with its predecessor");
  }
  Histogram h(lows[0], width, static_cast<int>(lows.size()));
  for (std::size_t i = 0; i < counts.size(); ++i) h.set_count(static_cast<int>(i), counts[i]);
  return h;
}

/// n, probability rows for a photon-number distribution.
inline void write_distribution_csv(const std::string& path, const PhotonNumberDistribution& p,
                                   const MetaInfo& meta) {
  std::ofstream os = csvdetail::open_out(path);
  os << meta.comment_line() << "\n";
  os << "n,probability\n";
  for (std::size_t n = 0; n < p.probs.size(); ++n)
    os << n << ',' << format_double(p.probs[n]) << "\n";
  if (!os) throw std::runtime_error("write failed: " + path);
}

}  // namespace pnsim
