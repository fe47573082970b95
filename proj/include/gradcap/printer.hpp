#pragma once

#include <string>

#include "gradcap/ast.hpp"

namespace gradcap {

/// Pretty-prints a program in the concrete `.gcap` syntax. Re-parsing the
/// result yields a structurally identical program (sequence sugar is printed
/// as explicit lets; `?` annotations are omitted).
std::string print_program(const Program& p);

/// Prints a single expression. Runtime-only forms (locations, errors) print
/// in a trace notation that is not part of the surface grammar.
std::string print_expr(const Expr& e);

} // namespace gradcap
