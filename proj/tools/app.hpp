#pragma once
// Command-line front end. Every run is described by a flat JSON config that
// is embedded in each file it writes, so `rerun` can reproduce the file.
#include <complex>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace cubiclab::app {

using json = nlohmann::json;

enum ExitCode { kExitOk = 0, kExitValidation = 2, kExitDomain = 3, kExitAssert = 4 };

struct OptionSpec {
  enum class Kind { Str, Int, Real, Complex, Bool };
  std::string name;
  Kind kind;
  json fallback;
  std::string help;
};

const std::vector<std::string>& command_names();
const std::vector<OptionSpec>& options_for(const std::string& command);

// "0.3+0.1i", "-i", "2", "1e-3-2.5i". ValidationError on anything else.
std::complex<double> parse_complex(std::string_view text);

// Defaults for `command`; precision from CUBICLAB_PRECISION when set.
json default_config(const std::string& command);

// Checks keys and types against options_for(config["command"]).
void validate_config(const json& config);

// Runs one command, writing into `out`. Diagnostics go to `log`.
int run(const json& config, const std::filesystem::path& out, std::ostream& log, unsigned threads = 0);

// Re-runs the config embedded in `file`.
int rerun(const std::filesystem::path& file, const std::filesystem::path& out, std::ostream& log,
          unsigned threads = 0);

int main_entry(int argc, char** argv);

}  // namespace cubiclab::app
