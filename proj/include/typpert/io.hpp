#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "typpert/error.hpp"
#include "typpert/format.hpp"
#include "typpert/timeseries.hpp"

namespace typpert {

/// Writes `content` verbatim (binary mode, so LF stays LF).
inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorKind::input, "cannot write '" + path.string() + "'");
  out << content;
  require(static_cast<bool>(out), ErrorKind::input, "write to '" + path.string() + "' failed");
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::input, "cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

/// `t,value,stderr` with 17 significant digits; stderr is 0 for exact series.
inline std::string series_csv(const TimeSeries& s) {
  std::string out = "t,value,stderr\n";
  for (std::size_t k = 0; k < s.size(); ++k) {
    out += format_double(s.times[k]);
    out += ',';
    out += format_double(s.values[k]);
    out += ',';
    out += format_double(s.has_errors() ? s.stderr_[k] : 0.0);
    out += '\n';
  }
  return out;
}

inline TimeSeries parse_series_csv(const std::string& text, const std::string& name = "series") {
  std::istringstream in(text);
  std::string line;
  require(static_cast<bool>(std::getline(in, line)) && line == "t,value,stderr", ErrorKind::input,
          name + ": expected header 't,value,stderr'");
  TimeSeries s;
  bool any_error = false;
  std::vector<double> errs;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string a, b, c;
    require(std::getline(row, a, ',') && std::getline(row, b, ',') && std::getline(row, c), ErrorKind::input,
            name + ": malformed row '" + line + "'");
    try {
      s.times.push_back(std::stod(a));
      s.values.push_back(std::stod(b));
      errs.push_back(std::stod(c));
    } catch (const std::exception&) {
      throw Error(ErrorKind::input, name + ": non-numeric row '" + line + "'");
    }
    any_error = any_error || errs.back() != 0.0;
  }
  if (any_error) s.stderr_ = std::move(errs);
  s.validate();
  return s;
}

}  // namespace typpert
