// Command-line front end. `run` is the whole program minus process plumbing,
// so tests drive it in-process.
#pragma once

#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "sorsp/hilbert.hpp"

namespace sorsp::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

inline constexpr const char* kToolVersion = "0.1.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// "45deg", "0.25rad"; a bare 0 is accepted.
double parse_angle(const std::string& s);

/// "0.5", "-0.3i", "0.5+0.2i", "1e-3-2i".
cplx parse_complex(const std::string& s);

/// value(u) with u the one-digit uncertainty in the last shown place, e.g. 0.955(2).
/// Without an uncertainty the value is printed to three decimals.
std::string format_uncertain(double value, double sigma);

std::uint64_t fnv1a(std::string_view data);

/// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sorsp::cli
