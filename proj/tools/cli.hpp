#pragma once

#include <ostream>

namespace protoforge::cli {

inline constexpr int kSchemaVersion = 1;
inline constexpr const char* kToolVersion = "0.1.0";

// Exit codes shared by the subcommands. verify maps its verdicts to 0, 2, 3
// and 4; check, deduce and trace-lab use 0 and kNegative.
inline constexpr int kOk = 0;
inline constexpr int kNegative = 1;
inline constexpr int kAttack = 2;
inline constexpr int kHypothesis = 3;
inline constexpr int kTimeout = 4;
inline constexpr int kError = 5;

// Entry point of the protoforge binary, with the streams made explicit.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace protoforge::cli
