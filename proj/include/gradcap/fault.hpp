#pragma once

#include <string>

#include "gradcap/source.hpp"

namespace gradcap {

/// Reasons a single actor halts. UninitializedUse arises only from an err
/// value in a position the rule must dereference; CapabilityViolation only
/// from a moved cast applied to an unmov location. The remaining kinds are
/// the untyped-language failure modes.
enum class FaultKind {
    UninitializedUse,
    CapabilityViolation,
    UnknownClass,
    UnknownMethod,
    UnknownField,
    ArityMismatch,
    NotAnObject,
    NotAnActor,
    UnboundVariable,
};

std::string to_string(FaultKind k);

struct Fault {
    FaultKind kind;
    std::string detail; // printed redex plus a short explanation
    SourceSpan span;
};

} // namespace gradcap
