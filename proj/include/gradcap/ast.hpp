#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "gradcap/source.hpp"

namespace gradcap {

/// Reference capability annotation. Omitting an annotation in source is the
/// dynamic capability `?`.
enum class Capability { Dyn, Moved, Lent };

/// Runtime permission carried by locations and errors; never written in
/// surface syntax.
enum class Permission { Movable, Unmov };

std::string to_string(Capability k);
std::string to_string(Permission p);

using ActorId = std::uint64_t;

/// Opaque heap identifier; allocated sequentially, never reused within a run.
struct Location {
    std::uint64_t id = 0;

    friend bool operator==(const Location&, const Location&) = default;
    friend auto operator<=>(const Location&, const Location&) = default;
};

// Value variants. Loc and Err always carry a permission.
struct UnitValue {
    friend bool operator==(const UnitValue&, const UnitValue&) = default;
};
struct ActorRef {
    ActorId id = 0;
    friend bool operator==(const ActorRef&, const ActorRef&) = default;
};
struct LocRef {
    Permission perm = Permission::Movable;
    Location loc;
    friend bool operator==(const LocRef&, const LocRef&) = default;
};
struct ErrRef {
    Permission perm = Permission::Movable;
    friend bool operator==(const ErrRef&, const ErrRef&) = default;
};

struct Value {
    std::variant<UnitValue, ActorRef, LocRef, ErrRef> v;

    Value() : v(UnitValue{}) {}
    Value(UnitValue u) : v(u) {}
    Value(ActorRef a) : v(a) {}
    Value(LocRef l) : v(l) {}
    Value(ErrRef e) : v(e) {}

    static Value unit() { return Value{UnitValue{}}; }
    static Value actor(ActorId id) { return Value{ActorRef{id}}; }
    static Value loc(Permission p, Location l) { return Value{LocRef{p, l}}; }
    static Value err(Permission p) { return Value{ErrRef{p}}; }

    bool is_unit() const { return std::holds_alternative<UnitValue>(v); }
    bool is_actor() const { return std::holds_alternative<ActorRef>(v); }
    bool is_loc() const { return std::holds_alternative<LocRef>(v); }
    bool is_err() const { return std::holds_alternative<ErrRef>(v); }

    const LocRef* as_loc() const { return std::get_if<LocRef>(&v); }
    const ActorRef* as_actor() const { return std::get_if<ActorRef>(&v); }
    const ErrRef* as_err() const { return std::get_if<ErrRef>(&v); }

    friend bool operator==(const Value&, const Value&) = default;
};

std::string to_string(const Value& v);

struct Expr;
using ExprPtr = std::shared_ptr<const Expr>;

// Expression variants, in the order they appear in the grammar. Val wrapping
// a Loc or Err exists only at runtime; the parser only produces Val(Unit).
struct CallExpr {
    ExprPtr recv;
    std::string method;
    std::vector<ExprPtr> args;
};
struct FieldGetExpr {
    ExprPtr recv;
    std::string field;
};
struct FieldSetExpr {
    ExprPtr recv;
    std::string field;
    ExprPtr rhs;
};
struct LetExpr {
    Capability cap = Capability::Dyn;
    std::string var;
    ExprPtr rhs;
    ExprPtr body;
};
struct NewExpr {
    std::string cls;
    std::vector<ExprPtr> args;
};
struct SpawnExpr {
    ExprPtr body;
};
struct ReceiveExpr {};
struct SendExpr {
    ExprPtr target;
    ExprPtr payload;
};
struct ValExpr {
    Value value;
};
struct VarExpr {
    std::string name;
};
struct ThisExpr {};

using ExprNode = std::variant<CallExpr, FieldGetExpr, FieldSetExpr, LetExpr, NewExpr, SpawnExpr,
                              ReceiveExpr, SendExpr, ValExpr, VarExpr, ThisExpr>;

/// Immutable expression tree node. Nodes are shared freely across stores and
/// exploration branches; nothing mutates them after construction.
struct Expr {
    ExprNode node;
    SourceSpan span;

    Expr(ExprNode n, SourceSpan s) : node(std::move(n)), span(std::move(s)) {}

    template <typename T>
    const T* get_if() const {
        return std::get_if<T>(&node);
    }
    bool is_value() const { return std::holds_alternative<ValExpr>(node); }
};

ExprPtr make_expr(ExprNode node, SourceSpan span = {});
ExprPtr make_value_expr(Value v, SourceSpan span = {});

/// Structural equality (ignores source spans).
bool expr_equal(const Expr& a, const Expr& b);

struct MethodDecl {
    Capability recv_cap = Capability::Dyn; // capability on the implicit `this`
    std::string name;
    std::vector<std::pair<std::string, Capability>> params;
    Capability ret_cap = Capability::Dyn;
    ExprPtr body;
    SourceSpan span;
};

/// Field order is significant: constructor arguments are positional.
struct ClassDecl {
    std::string name;
    std::vector<std::pair<std::string, Capability>> fields;
    std::vector<MethodDecl> methods;
    SourceSpan span;

    const MethodDecl* find_method(const std::string& m) const;
    int field_index(const std::string& f) const; // -1 when absent
};

/// The class table: total on every class name mentioned anywhere in the
/// program (enforced by validate_program, not by construction).
using ClassTable = std::map<std::string, ClassDecl>;

struct Program {
    ClassTable classes;
    ExprPtr main;
};

struct Diagnostic {
    SourceSpan span;
    std::string message;
};

/// Structural well-formedness checks: class table totality, distinct
/// field/method/parameter names, `this` confined to method bodies, no free
/// variables in main. Arity of `new` and calls is deliberately unchecked;
/// the language is untyped and arity mismatch is a runtime fault.
std::vector<Diagnostic> validate_program(const Program& p);

/// Free variables of an expression in first-occurrence order, left to right.
std::vector<std::string> free_vars(const Expr& e);

/// Replaces every capability annotation with `?`. Used by the gradual
/// guarantee tests and exposed through the CLI for experimentation.
Program erase_capabilities(const Program& p);
ExprPtr erase_capabilities(const ExprPtr& e);

} // namespace gradcap
