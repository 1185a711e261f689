#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace ssmlab::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

// Entry point of the `ssmlab` binary. args[0] is the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// "42,43,44" -> {42, 43, 44}; UsageError on malformed input.
std::vector<std::int64_t> parse_seeds(const std::string& text);

// SSMLAB_THREADS if set to a positive integer, otherwise the hardware
// concurrency (at least 1).
std::size_t thread_budget();

}  // namespace ssmlab::cli
