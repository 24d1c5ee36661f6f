#pragma once

#include <string>
#include <string_view>

#include "protoforge/protocol.hpp"

namespace protoforge {

// Reads the .proto format:
//
//   protocol NS (2)
//   role 1 params A B nonces y:
//     snd enca(<n[y], A>, pub(B))
//     rcv enca(<n[y], ?z>, pub(A))
//     status Secret(A, B, n[y])
//
// Throws ParseError with the line and column of the offending token.
Protocol parse_protocol(std::string_view text);
Protocol load_protocol(const std::string& path);
std::string protocol_to_string(const Protocol& p);
std::string role_to_string(const Role& r, std::size_t index);

// One event in the syntax printed by to_string(Event), e.g. "rcv ?z@s1" or
// "status Secret(a,b,n[y@s1])".
Event parse_event(std::string_view text);

// Reads executions in the format printed by to_string(ExecutionTrace):
//
//   1. [s1] snd enca(<n[y@s1],a>,pub(c))
//   2. [s2] rcv enca(<?z2@s2,a>,pub(b))
//
// Events must be numbered 1, 2, ... in order. Roles are left unknown.
ExecutionTrace parse_execution(std::string_view text);

// Print options that render role nonces as n[y].
struct RolePrinting {
  explicit RolePrinting(const Role& r);
  PrintOptions options() const { return {&nonces, nullptr}; }
  std::set<std::string, std::less<>> nonces;
};

}  // namespace protoforge
