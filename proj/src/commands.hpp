#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "convext/grid.hpp"

namespace convext {

/// Command-line values that take precedence over the problem file.
struct Overrides {
  std::optional<double> lambda;
  std::optional<double> tol;
  std::optional<std::size_t> max_iter;
  std::optional<std::uint64_t> seed;
  std::vector<Axis> dual;  // empty: derived from the input
  std::size_t oracle_iterations = 0;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 1;
inline constexpr int kExitConstraint = 2;

int cmd_extend(const std::filesystem::path& problem, const std::filesystem::path& out,
               const Overrides& o, std::ostream& log, std::ostream& err);
int cmd_prekopa(const std::filesystem::path& problem, const std::filesystem::path& out,
                const Overrides& o, std::ostream& log, std::ostream& err);
int cmd_legendre(const std::filesystem::path& function, const std::filesystem::path& out,
                 const Overrides& o, std::ostream& log, std::ostream& err);
int cmd_extremal(const std::filesystem::path& function, const std::filesystem::path& out,
                 const Overrides& o, std::ostream& log, std::ostream& err);
/// `out` empty: <report dir>/verify.
int cmd_verify(const std::filesystem::path& report, const std::filesystem::path& out,
               std::ostream& log, std::ostream& err);

}  // namespace convext
