#include "csv.hpp"

#include <charconv>
#include <cmath>
#include <stdexcept>

namespace qg::io {

#ifndef QGRAPH_VERSION
#define QGRAPH_VERSION "0.0.0"
#endif
const char* const kVersion = QGRAPH_VERSION;

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (x == 0) return "0";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

void Csv::row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw std::logic_error("csv row width mismatch");
  rows_.push_back(std::move(cells));
}

namespace {
std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}
}  // namespace

void Csv::write(std::ostream& os) const {
  auto line = [&](const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << quote(cells[i]);
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  os << "# qgraph " << kVersion;
  for (const auto& [k, v] : meta_) os << ' ' << k << '=' << v;
  os << '\n';
}

}  // namespace qg::io
