#pragma once
// Text emission shared by the command-line front end: CSV tables with an
// embedded config line, binary PGM rasters and extended-range formatting.
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cubiclab/xreal.hpp"

namespace cubiclab {

inline constexpr const char* kConfigPrefix = "# config: ";

// Shortest text that reads back to the same double; "nan", "inf", "-inf".
std::string format_real(double x);

// Extended-range values are written as (log10|x|, arg x / pi).
struct LogArg {
  double log10_abs = 0.0;
  double arg_over_pi = 0.0;
};
LogArg log_arg(const XComplex& z);

class Table {
 public:
  explicit Table(std::string config_json) : config_(std::move(config_json)) {}
  void comment(const std::string& line) { comments_.push_back(line); }
  void columns(std::vector<std::string> names) { columns_ = std::move(names); }
  void row(std::vector<std::string> cells);
  void footer(const std::string& line) { footer_.push_back(line); }
  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::string config_;
  std::vector<std::string> comments_, columns_, rows_, footer_;
};

// Binary P5 with the config as a comment line.
std::string pgm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& pixels,
                const std::string& config_json);
void write_file(const std::filesystem::path& path, const std::string& bytes);

// The JSON text after "# config: " in a CSV or PGM written above.
std::string read_config_header(const std::filesystem::path& path);

}  // namespace cubiclab
