#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "cars/errors.hpp"

namespace cars::detail {

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace cars::detail
