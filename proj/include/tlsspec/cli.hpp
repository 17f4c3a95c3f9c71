// cli.hpp — command-line front end (simulate, floquet, analyze, waveguide,
// render, selftest). Exit codes: 0 ok, 2 config, 3 io, 4 numeric, 64 usage.

#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tlsspec {

inline constexpr int kExitUsage = 64;
inline constexpr int kExitInternal = 1;

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Quick invariant checks; returns the number of failures.
int run_selftest(std::ostream& out);

}  // namespace tlsspec
