#pragma once

#include <string>

#include "protoforge/protocol.hpp"
#include "protoforge/term.hpp"

namespace protoforge {

enum class TagVariant {
  Full,        // u_i = <x_i, z_i>
  NoncesOnly,  // u_i = z_i
};

struct TagScheme {
  TagVariant variant = TagVariant::Full;
  bool hashed = false;  // tag with h(tau) instead of tau
};

std::string to_string(TagVariant v);

// [u]_tag: pairs recurse, f(u1,u2) becomes f(<tag,[u1]>,[u2]) for
// encs/enca/sign, h(u) becomes h(<tag,[u]>), everything else is kept.
Term tag_term(Term u, Term tag);
Event tag_event(const Event& e, Term tag);

// Shape of a tag under the scheme: a k-tuple of <agent-or-variable, term>
// pairs (Full) or any k-tuple (NoncesOnly), wrapped in h() when hashed.
bool is_k_tag(Term t, std::size_t k, TagScheme scheme = {});
// Every cryptographic subterm carries a k-tag at position 1.1. Under a
// hashed scheme the tags themselves are hashes and are not inspected.
bool is_k_tagged(Term t, std::size_t k, TagScheme scheme = {});
// Removes position 1.1 from every cryptographic subterm. Terms that are
// not tagged are returned unchanged below the first untagged subterm.
Term untag(Term t);

struct TransformedRole {
  TermList preamble_vars;  // z_1..z_k of this role; z_j is a nonce
  Term tag;                // tau_j, hashed when the scheme says so
};

struct Transformation {
  Protocol protocol;
  TagScheme scheme;
  std::vector<TransformedRole> roles;
};

// Role j becomes nu z_j. rcv(u_1)..rcv(u_{j-1}); snd(u_j); rcv(u_{j+1})..
// rcv(u_k); [body]_tau. Preamble variables are named z_<param>, renamed
// apart from the variables already in use.
Transformation transform(const Protocol& p, TagScheme scheme = {});

}  // namespace protoforge
