#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "feedopt/numerics.hpp"
#include "feedopt/sim.hpp"

namespace feedopt::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitNumerical = 2,
  kExitDivergence = 3,
};

/// Version of the certificate and summary documents.
inline constexpr int kFormatVersion = 1;

/// FNV-1a over the column-major IEEE-754 bytes of `m`, as 16 hex digits.
std::string matrix_checksum(const Matrix& m);

/// Box around the default operating point used for the sampled Lipschitz
/// estimate: states within +-1 of the steady state, inputs within the
/// generator limits.
SampleRegion grid_sample_region(const GridSetup& setup);

/// Parses and runs one command line. Diagnostics go to `err`; reports that
/// are not written to a file go to `out`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace feedopt::cli
