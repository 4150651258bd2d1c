#include "io.hpp"

#include <openssl/evp.h>

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "convext/error.hpp"

namespace convext::io {
namespace {

const char* kInfToken = "inf";

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorKind::Input, message);
}

const json& field(const json& j, const char* key, const std::string& where) {
  require(j.is_object(), where + ": expected an object");
  auto it = j.find(key);
  require(it != j.end(), where + ": missing field \"" + key + "\"");
  return *it;
}

std::vector<double> values_from_json(const json& j, const std::string& where) {
  require(j.is_array(), where + ": \"values\" must be an array");
  std::vector<double> out;
  out.reserve(j.size());
  for (const json& v : j) out.push_back(double_from_json(v, where));
  return out;
}

}  // namespace

json parse_json(const std::string& text, const std::string& origin) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    std::ostringstream msg;
    msg << origin << ":" << line << ":" << column << ": malformed JSON: " << e.what();
    fail(ErrorKind::Input, msg.str());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

json load_json(const std::filesystem::path& path) { return parse_json(read_file(path), path.string()); }

void write_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) fail(ErrorKind::Io, "write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) fail(ErrorKind::Io, "cannot rename " + tmp.string() + ": " + ec.message());
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::Io, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 15]);
  }
  return out;
}

json to_json(double v) {
  if (v == kInf) return kInfToken;
  return v;
}

double double_from_json(const json& j, const std::string& what) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == kInfToken) return kInf;
  fail(ErrorKind::Input, what + ": expected a number or \"inf\"");
}

json to_json(const GridSpec& spec) {
  json axes = json::array();
  for (const Axis& a : spec.axes()) axes.push_back({{"lo", a.lo}, {"hi", a.hi}, {"count", a.count}});
  return {{"axes", axes}};
}

GridSpec grid_spec_from_json(const json& j) {
  const json& axes = field(j, "axes", "grid spec");
  require(axes.is_array(), "grid spec: \"axes\" must be an array");
  std::vector<Axis> out;
  for (const json& a : axes) {
    const json& count = field(a, "count", "axis");
    require(count.is_number_integer() && count.get<long long>() >= 0, "axis: count must be a non-negative integer");
    out.push_back({double_from_json(field(a, "lo", "axis"), "axis lo"),
                   double_from_json(field(a, "hi", "axis"), "axis hi"), count.get<std::size_t>()});
  }
  return GridSpec(std::move(out));
}

json to_json(const GridFunction& f) {
  json values = json::array();
  for (double v : f.values()) values.push_back(to_json(v));
  return {{"spec", to_json(f.spec())}, {"values", values}, {"inf_token", kInfToken}};
}

GridFunction grid_function_from_json(const json& j) {
  return GridFunction(grid_spec_from_json(field(j, "spec", "grid function")),
                      values_from_json(field(j, "values", "grid function"), "grid function"));
}

json to_json(const ProductGridFunction& f) {
  json slices = json::array();
  for (std::size_t j = 0; j < f.t_size(); ++j) slices.push_back(to_json(f.slice(j)));
  return {{"t_spec", to_json(f.t_spec())}, {"x_spec", to_json(f.x_spec())}, {"slices", slices}};
}

ProductGridFunction product_from_json(const json& j) {
  const GridSpec t_spec = grid_spec_from_json(field(j, "t_spec", "product grid function"));
  const GridSpec x_spec = grid_spec_from_json(field(j, "x_spec", "product grid function"));
  const json& slices = field(j, "slices", "product grid function");
  require(slices.is_array() && slices.size() == t_spec.size(),
          "product grid function: expected " + std::to_string(t_spec.size()) + " slices");
  std::vector<GridFunction> parts;
  for (const json& s : slices) {
    GridFunction g = grid_function_from_json(s);
    require(g.spec() == x_spec, "product grid function: slice grid differs from x_spec");
    parts.push_back(std::move(g));
  }
  return ProductGridFunction::from_slices(t_spec, parts);
}

json to_json(const ConvexityReport& r) {
  json witness = json::array();
  for (const auto& p : r.witness) witness.push_back(p);
  return {{"worst_violation", to_json(r.worst_violation)},
          {"checked_count", r.checked_count},
          {"witness", witness}};
}

json to_json(const IterationTrace& tr) {
  return {{"log_A", tr.log_A},
          {"theoretical", tr.theoretical},
          {"iterations", tr.iterations},
          {"converged", tr.converged}};
}

std::string format_double(double v) {
  if (v == kInf) return kInfToken;
  if (v == -kInf) return "-inf";
  if (v == 0.0) v = 0.0;
  std::array<char, 64> buf{};
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

CsvWriter::CsvWriter(const std::vector<std::string>& header) { row(header); }

void CsvWriter::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) text_ += ',';
    text_ += cells[i];
  }
  text_ += '\n';
}

}  // namespace convext::io
