#include "cubiclab/output.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cubiclab/errors.hpp"

namespace cubiclab {

std::string format_real(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

LogArg log_arg(const XComplex& z) {
  return {log_abs(z) / std::numbers::ln10, z.is_zero() ? 0.0 : arg_double(z) / std::numbers::pi};
}

void Table::row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size()) throw Error("Table::row: column count mismatch");
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) line += ',';
    line += cells[i];
  }
  rows_.push_back(std::move(line));
}

std::string Table::str() const {
  std::ostringstream out;
  out << kConfigPrefix << config_ << '\n';
  for (const auto& c : comments_) out << "# " << c << '\n';
  for (std::size_t i = 0; i < columns_.size(); ++i) out << (i ? "," : "") << columns_[i];
  out << '\n';
  for (const auto& r : rows_) out << r << '\n';
  for (const auto& f : footer_) out << "# " << f << '\n';
  return out.str();
}

void Table::write(const std::filesystem::path& path) const { write_file(path, str()); }

std::string pgm(std::size_t width, std::size_t height, const std::vector<std::uint8_t>& pixels,
                const std::string& config_json) {
  if (pixels.size() != width * height) throw Error("pgm: pixel count mismatch");
  std::ostringstream out;
  out << "P5\n" << kConfigPrefix << config_json << '\n' << width << ' ' << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(pixels.data()), static_cast<std::streamsize>(pixels.size()));
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw ValidationError("cannot write " + path.string());
}

std::string read_config_header(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ValidationError("cannot read " + path.string());
  std::string line;
  // The config is on the first (CSV) or second (PGM) line.
  for (int i = 0; i < 2 && std::getline(f, line); ++i)
    if (line.rfind(kConfigPrefix, 0) == 0) return line.substr(std::string(kConfigPrefix).size());
  throw ValidationError(path.string() + " has no embedded config line");
}

}  // namespace cubiclab
