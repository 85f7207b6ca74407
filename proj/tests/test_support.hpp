#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <unistd.h>

#include "conex/space.hpp"

namespace conex::test {

inline std::filesystem::path source_path(const std::string& rel) {
  return std::filesystem::path(CONEX_SOURCE_DIR) / rel;
}

/// Fresh empty directory under the system temp dir, unique per name.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() /
             ("conex-test-" + name + "-" + std::to_string(::getpid()));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

/// n integer parameters x0..x{n-1}, each with candidates 0..m-1, default `def`.
inline ConfigurationSpace grid_space(std::size_t n, std::size_t m, std::int64_t def = 0,
                                     const std::string& name = "grid") {
  std::vector<ParameterSpec> params;
  for (std::size_t i = 0; i < n; ++i) {
    ParameterSpec p;
    p.name = "x" + std::to_string(i);
    p.kind = ParamKind::integer;
    for (std::size_t v = 0; v < m; ++v) p.candidates.emplace_back(static_cast<std::int64_t>(v));
    p.default_value = def;
    params.push_back(std::move(p));
  }
  return ConfigurationSpace(name, std::move(params));
}

}  // namespace conex::test
