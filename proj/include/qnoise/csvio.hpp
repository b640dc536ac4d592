#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "qnoise/constants.hpp"
#include "qnoise/spectrum.hpp"

// CSV output with a '#' comment header block and atomic writes, plus the
// spectrum CSV reader used by the fit pipeline.

namespace qnoise {

inline constexpr const char* artifact_version = "qnoise 0.1.0";

// Fixed numeric formatting so identical inputs produce identical bytes.
inline std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Write via a temporary file and rename so readers never see partial output.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw std::runtime_error("atomic_write: cannot open " + tmp);
    out << content;
    if (!out)
      throw std::runtime_error("atomic_write: write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("atomic_write: rename to " + path + " failed");
}

class CsvBuilder {
 public:
  void comment(const std::string& line) { comments_.push_back(line); }

  void columns(const std::vector<std::string>& names) { columns_ = names; }

  void row(const std::vector<double>& values) {
    if (values.size() != columns_.size())
      throw std::invalid_argument("CsvBuilder: row width mismatch");
    rows_.push_back(values);
  }

  std::string str() const {
    std::ostringstream out;
    for (const auto& c : comments_) out << "# " << c << "\n";
    for (std::size_t i = 0; i < columns_.size(); ++i)
      out << (i ? "," : "") << columns_[i];
    out << "\n";
    for (const auto& r : rows_) {
      for (std::size_t i = 0; i < r.size(); ++i)
        out << (i ? "," : "") << format_number(r[i]);
      out << "\n";
    }
    return out.str();
  }

  void write(const std::string& path) const { atomic_write(path, str()); }

 private:
  std::vector<std::string> comments_;
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

// Reads a spectrum CSV produced by this toolkit (or hand-made in the same
// format): '#' comments, then a header row starting with frequency_Hz, then
// data rows with optional psd_err third column. The convention tag in the
// comments must match when present.
inline Spectrum read_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("read_spectrum_csv: cannot open " + path);
  std::string line;
  Spectrum s;
  bool header_seen = false;
  bool has_err = false;
  std::size_t value_col = 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      if (line.find("convention") != std::string::npos &&
          line.find(Spectrum::convention) == std::string::npos)
        throw std::invalid_argument(
            "read_spectrum_csv: convention tag mismatch in " + path +
            " (expected '" + Spectrum::convention + "')");
      continue;
    }
    if (!header_seen) {
      if (line.rfind("frequency_Hz", 0) != 0)
        throw std::invalid_argument(
            "read_spectrum_csv: first data header column must be frequency_Hz");
      // count columns; a psd_err column may follow the value column
      std::size_t ncols = 1;
      for (char c : line)
        if (c == ',') ++ncols;
      if (ncols < 2)
        throw std::invalid_argument("read_spectrum_csv: need a psd column");
      has_err = line.find("psd_err") != std::string::npos;
      header_seen = true;
      continue;
    }
    std::istringstream ss(line);
    std::string cell;
    std::vector<double> vals;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    if (vals.size() < 2)
      throw std::invalid_argument("read_spectrum_csv: short row in " + path);
    s.grid.push_back(vals[0] * two_pi);  // Hz on disk, rad/s inside
    s.values.push_back(vals[value_col]);
    if (has_err && vals.size() > 2) s.errors.push_back(vals[2]);
  }
  if (has_err && s.errors.size() != s.values.size()) s.errors.clear();
  s.validate();
  return s;
}

} // namespace qnoise
