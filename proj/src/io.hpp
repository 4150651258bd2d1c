#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "convext/extension.hpp"
#include "convext/grid.hpp"

namespace convext::io {

using json = nlohmann::json;

/// Parses JSON text; malformed input raises an Input error with line and
/// column of the offending byte.
json parse_json(const std::string& text, const std::string& origin);
std::string read_file(const std::filesystem::path& path);
json load_json(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& contents);

std::string sha256_hex(const std::string& bytes);

/// Values are numbers or the token "inf".
json to_json(double v);
double double_from_json(const json& j, const std::string& what);

json to_json(const GridSpec& spec);
GridSpec grid_spec_from_json(const json& j);
json to_json(const GridFunction& f);
GridFunction grid_function_from_json(const json& j);
json to_json(const ProductGridFunction& f);
ProductGridFunction product_from_json(const json& j);
json to_json(const ConvexityReport& r);
json to_json(const IterationTrace& tr);

/// 17 significant digits, '.' decimal separator, "inf" for +inf.
std::string format_double(double v);

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header);
  void row(const std::vector<std::string>& cells);
  const std::string& str() const noexcept { return text_; }

 private:
  std::string text_;
};

}  // namespace convext::io
