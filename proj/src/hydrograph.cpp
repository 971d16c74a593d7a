#include "floodtwin/hydrograph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "floodtwin/csv.hpp"
#include "floodtwin/error.hpp"

namespace floodtwin {

Hydrograph::Hydrograph(std::vector<double> times, std::vector<double> discharge)
    : times_(std::move(times)), discharge_(std::move(discharge)) {
  if (times_.size() != discharge_.size()) throw DataError("hydrograph times and discharges differ in length");
  if (times_.empty()) throw DataError("hydrograph is empty");
  for (std::size_t i = 0; i < times_.size(); ++i) {
    if (!std::isfinite(times_[i]) || !std::isfinite(discharge_[i])) throw DataError("hydrograph has non-finite entry");
    if (discharge_[i] < 0.0) throw DataError("hydrograph discharge must be non-negative");
    if (i > 0 && !(times_[i] > times_[i - 1])) throw DataError("hydrograph timestamps must be strictly increasing");
  }
}

double Hydrograph::peak() const { return *std::max_element(discharge_.begin(), discharge_.end()); }

double Hydrograph::at(double t) const {
  if (empty() || t < times_.front() || t > times_.back())
    throw DataError("time " + format_iso8601(t) + " outside hydrograph span");
  const auto it = std::upper_bound(times_.begin(), times_.end(), t);
  if (it == times_.end()) return discharge_.back();
  const auto hi = static_cast<std::size_t>(it - times_.begin());
  const std::size_t lo = hi - 1;
  const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
  return discharge_[lo] + w * (discharge_[hi] - discharge_[lo]);
}

Hydrograph Hydrograph::scaled(double factor) const {
  std::vector<double> q(discharge_.size());
  std::transform(discharge_.begin(), discharge_.end(), q.begin(), [factor](double v) { return v * factor; });
  return Hydrograph(times_, std::move(q));
}

Hydrograph read_hydrograph_csv(const std::filesystem::path& path) {
  const CsvTable t = read_csv(path);
  const std::size_t ct = t.column("timestamp");
  const std::size_t cq = t.column("discharge_m3s");
  std::vector<double> times, q;
  for (const auto& row : t.rows) {
    try {
      times.push_back(parse_iso8601(row.fields.at(ct)));
    } catch (const DataError& e) {
      throw ParseError(t.source, row.line, e.what());
    }
    q.push_back(csv_double(t, row, cq));
  }
  try {
    return Hydrograph(std::move(times), std::move(q));
  } catch (const DataError& e) {
    throw DataError(t.source + ": " + e.what());
  }
}

void write_hydrograph_csv(const Hydrograph& h, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  out << "timestamp,discharge_m3s\n";
  char buf[64];
  for (std::size_t i = 0; i < h.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", h.discharge()[i]);
    out << format_iso8601(h.times()[i]) << ',' << buf << '\n';
  }
}

// --- csv.hpp -------------------------------------------------------------

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return std::string(s);
}

std::vector<std::string> split_commas(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace

std::size_t CsvTable::column(std::string_view name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw ParseError(source, 1, "missing column '" + std::string(name) + "'");
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open CSV '" + path.string() + "'");
  CsvTable t;
  t.source = path.string();
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    auto fields = split_commas(line);
    if (t.header.empty()) {
      t.header = std::move(fields);
      continue;
    }
    if (fields.size() != t.header.size())
      throw ParseError(t.source, lineno,
                       "expected " + std::to_string(t.header.size()) + " fields, found " + std::to_string(fields.size()));
    t.rows.push_back({lineno, std::move(fields)});
  }
  if (t.header.empty()) throw ParseError(t.source, lineno, "empty CSV (no header)");
  return t;
}

double csv_double(const CsvTable& t, const CsvTable::Row& row, std::size_t col) {
  const std::string& s = row.fields.at(col);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
    throw ParseError(t.source, row.line, "bad number '" + s + "' in column '" + t.header[col] + "'");
  return v;
}

long long csv_integer(const CsvTable& t, const CsvTable::Row& row, std::size_t col) {
  const std::string& s = row.fields.at(col);
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size())
    throw ParseError(t.source, row.line, "bad integer '" + s + "' in column '" + t.header[col] + "'");
  return v;
}

}  // namespace floodtwin
