#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "gradcap/ast.hpp"
#include "gradcap/fault.hpp"
#include "gradcap/store.hpp"

namespace gradcap {

// Redex variants: the reducible forms once evaluation-context decomposition
// bottoms out. Every demanded sub-position holds a fully evaluated value.
struct RedexVar {
    std::string name;
};
struct RedexThis {};
struct RedexNew {
    std::string cls;
    std::vector<Value> args;
};
struct RedexLet {
    Capability cap;
    std::string var;
    Value rhs;
    ExprPtr body;
};
struct RedexFieldGet {
    Value recv;
    std::string field;
};
struct RedexFieldSet {
    Value recv;
    std::string field;
    Value rhs;
};
struct RedexCall {
    Value recv;
    std::string method;
    std::vector<Value> args;
};
struct RedexSpawn {
    ExprPtr body;
};
struct RedexReceive {};
struct RedexSend {
    Value target;
    Value payload;
};

struct Redex {
    std::variant<RedexVar, RedexThis, RedexNew, RedexLet, RedexFieldGet, RedexFieldSet, RedexCall,
                 RedexSpawn, RedexReceive, RedexSend>
        form;
    SourceSpan span;
};

std::string print_redex(const Redex& r);

/// One-hole evaluation context, represented as the spine from the root to
/// the hole. Each frame records the original node and which evaluation-order
/// child the hole sits in; plugging rebuilds the path with shared subtrees.
struct ContextFrame {
    ExprPtr original;
    std::size_t hole_index;
};

struct EvalContext {
    std::vector<ContextFrame> frames; // root first
};

/// Rebuilds ctx with `filling` in the hole.
ExprPtr plug(const EvalContext& ctx, ExprPtr filling);

struct Decomposition {
    EvalContext ctx;
    Redex redex;
};

/// Unique left-to-right call-by-value decomposition: receiver before
/// arguments, arguments left to right, send target before payload, let
/// right-hand side before body. Returns nullopt when e is already a value.
std::optional<Decomposition> decompose(const ExprPtr& e);

/// Substitution target: a fresh variable name or a value.
using SubstTarget = std::variant<std::string, Value>;
/// Key "this" rewrites ThisExpr nodes.
using Subst = std::map<std::string, SubstTarget>;

/// Simultaneous capture-free substitution. Replacement names are fresh by
/// the store discipline, so binders never capture them.
ExprPtr substitute(const ExprPtr& e, const Subst& mapping);

// Step results. NeedsRuntime hands the decomposed actor-level redex to the
// scheduler, which performs the action and plugs the result back in.
struct Stepped {
    Store store;
    ExprPtr expr;
    std::string rule; // rule name for the trace
};
struct NeedsRuntime {
    Redex redex; // RedexSpawn, RedexSend, or RedexReceive
    EvalContext ctx;
};
struct DoneValue {
    Value value;
};

using StepResult = std::variant<Stepped, Fault, NeedsRuntime, DoneValue>;

/// One small step of the sequential rules. Pure: the input store is never
/// modified; a Fault means no rule fired and the store is unchanged. The
/// optional observer sees every moved application the step performs.
StepResult step_local(const Store& s, const ExprPtr& e, const ClassTable& ct,
                      const MoveObserver* obs = nullptr);

} // namespace gradcap
