#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace qg::io {

// Shortest decimal that round-trips.
std::string fmt(double x);

// Table with a header row and a trailing "# qgraph <version> key=value ..." line.
class Csv {
 public:
  explicit Csv(std::vector<std::string> header) : header_(std::move(header)) {}
  void row(std::vector<std::string> cells);
  void meta(const std::string& key, const std::string& value) { meta_[key] = value; }
  void write(std::ostream& os) const;
  size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
  std::map<std::string, std::string> meta_;
};

extern const char* const kVersion;

}  // namespace qg::io
