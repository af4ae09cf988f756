#pragma once

// Runs the built CLI binary and captures exit code + combined output.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace cli_harness {

struct CliResult {
  int exit_code = -1;
  std::string output;
};

inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / name;
  std::filesystem::create_directories(dir);
  return dir;
}

inline CliResult run(const std::string& cli_path, const std::string& args,
                     const std::filesystem::path& scratch) {
  static int counter = 0;
  const std::filesystem::path capture =
      scratch / ("capture_" + std::to_string(counter++));
  const std::string cmd = cli_path + " " + args + " > " + capture.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CliResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream file(capture);
  std::stringstream buffer;
  buffer << file.rdbuf();
  result.output = buffer.str();
  return result;
}

inline std::string slurp(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw std::runtime_error("cannot read " + path.string());
  std::stringstream buffer;
  buffer << file.rdbuf();
  return buffer.str();
}

}  // namespace cli_harness
