#include "gradcap/eval.hpp"

#include <cassert>
#include <sstream>

#include "gradcap/printer.hpp"

namespace gradcap {

namespace {

// Children in evaluation order: receiver before arguments, arguments left to
// right, send target before payload, let right-hand side before body. Spawn
// bodies and let bodies are not evaluation positions.
std::vector<ExprPtr> eval_children(const Expr& e) {
    if (const auto* x = e.get_if<CallExpr>()) {
        std::vector<ExprPtr> out{x->recv};
        out.insert(out.end(), x->args.begin(), x->args.end());
        return out;
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) return {x->recv};
    if (const auto* x = e.get_if<FieldSetExpr>()) return {x->recv, x->rhs};
    if (const auto* x = e.get_if<LetExpr>()) return {x->rhs};
    if (const auto* x = e.get_if<NewExpr>()) return {x->args.begin(), x->args.end()};
    if (const auto* x = e.get_if<SendExpr>()) return {x->target, x->payload};
    return {};
}

ExprPtr with_child(const Expr& e, std::size_t i, ExprPtr child) {
    if (const auto* x = e.get_if<CallExpr>()) {
        CallExpr n = *x;
        if (i == 0) {
            n.recv = std::move(child);
        } else {
            n.args[i - 1] = std::move(child);
        }
        return make_expr(std::move(n), e.span);
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) {
        FieldGetExpr n = *x;
        n.recv = std::move(child);
        return make_expr(std::move(n), e.span);
    }
    if (const auto* x = e.get_if<FieldSetExpr>()) {
        FieldSetExpr n = *x;
        (i == 0 ? n.recv : n.rhs) = std::move(child);
        return make_expr(std::move(n), e.span);
    }
    if (const auto* x = e.get_if<LetExpr>()) {
        LetExpr n = *x;
        n.rhs = std::move(child);
        return make_expr(std::move(n), e.span);
    }
    if (const auto* x = e.get_if<NewExpr>()) {
        NewExpr n = *x;
        n.args[i] = std::move(child);
        return make_expr(std::move(n), e.span);
    }
    if (const auto* x = e.get_if<SendExpr>()) {
        SendExpr n = *x;
        (i == 0 ? n.target : n.payload) = std::move(child);
        return make_expr(std::move(n), e.span);
    }
    assert(false && "node has no evaluation children");
    return nullptr;
}

const Value& value_of(const ExprPtr& e) {
    return e->get_if<ValExpr>()->value;
}

Redex redex_of(const Expr& e) {
    if (const auto* x = e.get_if<VarExpr>()) return {RedexVar{x->name}, e.span};
    if (e.get_if<ThisExpr>()) return {RedexThis{}, e.span};
    if (const auto* x = e.get_if<NewExpr>()) {
        std::vector<Value> vs;
        vs.reserve(x->args.size());
        for (const auto& a : x->args) vs.push_back(value_of(a));
        return {RedexNew{x->cls, std::move(vs)}, e.span};
    }
    if (const auto* x = e.get_if<LetExpr>())
        return {RedexLet{x->cap, x->var, value_of(x->rhs), x->body}, e.span};
    if (const auto* x = e.get_if<FieldGetExpr>())
        return {RedexFieldGet{value_of(x->recv), x->field}, e.span};
    if (const auto* x = e.get_if<FieldSetExpr>())
        return {RedexFieldSet{value_of(x->recv), x->field, value_of(x->rhs)}, e.span};
    if (const auto* x = e.get_if<CallExpr>()) {
        std::vector<Value> vs;
        vs.reserve(x->args.size());
        for (const auto& a : x->args) vs.push_back(value_of(a));
        return {RedexCall{value_of(x->recv), x->method, std::move(vs)}, e.span};
    }
    if (const auto* x = e.get_if<SpawnExpr>()) return {RedexSpawn{x->body}, e.span};
    if (e.get_if<ReceiveExpr>()) return {RedexReceive{}, e.span};
    const auto* x = e.get_if<SendExpr>();
    assert(x);
    return {RedexSend{value_of(x->target), value_of(x->payload)}, e.span};
}

// Fresh name drawn from the same counter bind_fresh uses; not yet bound.
std::string fresh_name(Store& s, const std::string& hint) {
    return hint + "#" + std::to_string(s.next_fresh++);
}

} // namespace

std::optional<Decomposition> decompose(const ExprPtr& e) {
    if (e->is_value()) return std::nullopt;
    EvalContext ctx;
    ExprPtr cur = e;
    for (;;) {
        std::vector<ExprPtr> children = eval_children(*cur);
        std::size_t next = children.size();
        for (std::size_t i = 0; i < children.size(); ++i) {
            if (!children[i]->is_value()) {
                next = i;
                break;
            }
        }
        if (next == children.size()) return Decomposition{std::move(ctx), redex_of(*cur)};
        ctx.frames.push_back({cur, next});
        cur = children[next];
    }
}

ExprPtr plug(const EvalContext& ctx, ExprPtr filling) {
    ExprPtr acc = std::move(filling);
    for (auto it = ctx.frames.rbegin(); it != ctx.frames.rend(); ++it)
        acc = with_child(*it->original, it->hole_index, std::move(acc));
    return acc;
}

ExprPtr substitute(const ExprPtr& e, const Subst& mapping) {
    if (mapping.empty()) return e;
    if (const auto* x = e->get_if<VarExpr>()) {
        auto it = mapping.find(x->name);
        if (it == mapping.end()) return e;
        if (const auto* name = std::get_if<std::string>(&it->second))
            return make_expr(VarExpr{*name}, e->span);
        return make_value_expr(std::get<Value>(it->second), e->span);
    }
    if (e->get_if<ThisExpr>()) {
        auto it = mapping.find("this");
        if (it == mapping.end()) return e;
        if (const auto* name = std::get_if<std::string>(&it->second))
            return make_expr(VarExpr{*name}, e->span);
        return make_value_expr(std::get<Value>(it->second), e->span);
    }
    if (const auto* x = e->get_if<CallExpr>()) {
        CallExpr n = *x;
        n.recv = substitute(n.recv, mapping);
        for (auto& a : n.args) a = substitute(a, mapping);
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<FieldGetExpr>()) {
        FieldGetExpr n = *x;
        n.recv = substitute(n.recv, mapping);
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<FieldSetExpr>()) {
        FieldSetExpr n = *x;
        n.recv = substitute(n.recv, mapping);
        n.rhs = substitute(n.rhs, mapping);
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<LetExpr>()) {
        LetExpr n = *x;
        n.rhs = substitute(n.rhs, mapping);
        // The binder shadows its name inside the body.
        if (mapping.contains(n.var)) {
            Subst inner = mapping;
            inner.erase(n.var);
            n.body = substitute(n.body, inner);
        } else {
            n.body = substitute(n.body, mapping);
        }
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<NewExpr>()) {
        NewExpr n = *x;
        for (auto& a : n.args) a = substitute(a, mapping);
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<SpawnExpr>()) {
        SpawnExpr n = *x;
        n.body = substitute(n.body, mapping);
        return make_expr(std::move(n), e->span);
    }
    if (const auto* x = e->get_if<SendExpr>()) {
        SendExpr n = *x;
        n.target = substitute(n.target, mapping);
        n.payload = substitute(n.payload, mapping);
        return make_expr(std::move(n), e->span);
    }
    return e; // ValExpr, ReceiveExpr
}

std::string print_redex(const Redex& r) {
    std::ostringstream os;
    if (const auto* x = std::get_if<RedexVar>(&r.form)) {
        os << x->name;
    } else if (std::get_if<RedexThis>(&r.form)) {
        os << "this";
    } else if (const auto* x = std::get_if<RedexNew>(&r.form)) {
        os << "new " << x->cls << '(';
        for (std::size_t i = 0; i < x->args.size(); ++i)
            os << (i ? ", " : "") << to_string(x->args[i]);
        os << ')';
    } else if (const auto* x = std::get_if<RedexLet>(&r.form)) {
        os << "let ";
        if (x->cap != Capability::Dyn) os << to_string(x->cap) << ' ';
        os << x->var << " = " << to_string(x->rhs) << "; ...";
    } else if (const auto* x = std::get_if<RedexFieldGet>(&r.form)) {
        os << to_string(x->recv) << '.' << x->field;
    } else if (const auto* x = std::get_if<RedexFieldSet>(&r.form)) {
        os << to_string(x->recv) << '.' << x->field << " := " << to_string(x->rhs);
    } else if (const auto* x = std::get_if<RedexCall>(&r.form)) {
        os << to_string(x->recv) << '.' << x->method << '(';
        for (std::size_t i = 0; i < x->args.size(); ++i)
            os << (i ? ", " : "") << to_string(x->args[i]);
        os << ')';
    } else if (std::get_if<RedexSpawn>(&r.form)) {
        os << "spawn { ... }";
    } else if (std::get_if<RedexReceive>(&r.form)) {
        os << "receive";
    } else if (const auto* x = std::get_if<RedexSend>(&r.form)) {
        os << "send(" << to_string(x->target) << ", " << to_string(x->payload) << ')';
    }
    return os.str();
}

namespace {

Fault fault(FaultKind kind, const Redex& r, const std::string& note = "") {
    std::string detail = print_redex(r);
    if (!note.empty()) detail += ": " + note;
    return Fault{kind, std::move(detail), r.span};
}

// Shared receiver screening for the dereferencing rules: an err value in a
// position that must be dereferenced is the uninitialized-use fault; unit
// and actor ids are not objects.
std::optional<Fault> screen_receiver(const Value& recv, const Redex& r) {
    if (recv.is_err()) return fault(FaultKind::UninitializedUse, r, "use of an uninitialised reference");
    if (!recv.is_loc()) return fault(FaultKind::NotAnObject, r, "receiver is not an object");
    return std::nullopt;
}

struct ObjectView {
    Location loc;
    const ObjectRecord* rec;
    const ClassDecl* cls;
};

std::variant<ObjectView, Fault> resolve_object(const Store& s, const ClassTable& ct,
                                               const Value& recv, const Redex& r) {
    if (auto f = screen_receiver(recv, r)) return *f;
    Location loc = recv.as_loc()->loc;
    const ObjectRecord* rec = s.find_record(loc);
    if (!rec) return fault(FaultKind::NotAnObject, r, "dangling location");
    auto it = ct.find(rec->cls);
    if (it == ct.end()) return fault(FaultKind::UnknownClass, r, rec->cls);
    return ObjectView{loc, rec, &it->second};
}

} // namespace

StepResult step_local(const Store& s, const ExprPtr& e, const ClassTable& ct,
                      const MoveObserver* obs) {
    std::optional<Decomposition> dec = decompose(e);
    if (!dec) return DoneValue{e->get_if<ValExpr>()->value};
    const Redex& r = dec->redex;
    const EvalContext& ctx = dec->ctx;

    if (const auto* x = std::get_if<RedexVar>(&r.form)) {
        auto it = s.vars.find(x->name);
        if (it == s.vars.end()) return fault(FaultKind::UnboundVariable, r);
        return Stepped{s, plug(ctx, make_value_expr(it->second, r.span)), "E-Variable"};
    }

    if (std::get_if<RedexThis>(&r.form))
        return fault(FaultKind::UnboundVariable, r, "'this' outside a method body");

    if (const auto* x = std::get_if<RedexNew>(&r.form)) {
        auto it = ct.find(x->cls);
        if (it == ct.end()) return fault(FaultKind::UnknownClass, r);
        const ClassDecl& cls = it->second;
        if (cls.fields.size() != x->args.size())
            return fault(FaultKind::ArityMismatch, r,
                         "class " + x->cls + " declares " + std::to_string(cls.fields.size()) +
                             " field(s), got " + std::to_string(x->args.size()));
        Store out = s;
        ObjectRecord rec{x->cls, {}};
        rec.fields.reserve(x->args.size());
        for (std::size_t i = 0; i < x->args.size(); ++i) {
            Capability k = cls.fields[i].second;
            if (!apply_capability_observed(out, k, x->args[i], obs))
                return fault(FaultKind::CapabilityViolation, r,
                             "field " + cls.fields[i].first + " moves an unmov reference");
            std::optional<Value> cv = cast(k, x->args[i]);
            assert(cv.has_value());
            rec.fields.push_back(*cv);
        }
        Location l = alloc_in(out, std::move(rec));
        return Stepped{std::move(out),
                       plug(ctx, make_value_expr(Value::loc(Permission::Movable, l), r.span)),
                       "E-NewClass"};
    }

    if (const auto* x = std::get_if<RedexLet>(&r.form)) {
        Store out = s;
        if (!apply_capability_observed(out, x->cap, x->rhs, obs))
            return fault(FaultKind::CapabilityViolation, r, "moved binding of an unmov reference");
        std::optional<Value> cv = cast(x->cap, x->rhs);
        assert(cv.has_value());
        std::string renamed = bind_fresh_in(out, x->var, *cv);
        ExprPtr body = substitute(x->body, Subst{{x->var, renamed}});
        return Stepped{std::move(out), plug(ctx, std::move(body)), "E-VarAssignment"};
    }

    if (const auto* x = std::get_if<RedexFieldGet>(&r.form)) {
        auto obj = resolve_object(s, ct, x->recv, r);
        if (const auto* f = std::get_if<Fault>(&obj)) return *f;
        const ObjectView& view = std::get<ObjectView>(obj);
        int idx = view.cls->field_index(x->field);
        if (idx < 0) return fault(FaultKind::UnknownField, r);
        // Any permission may read: the rule places no condition on the
        // receiver's permission.
        return Stepped{s, plug(ctx, make_value_expr(view.rec->fields[idx], r.span)),
                       "E-FieldAccess"};
    }

    if (const auto* x = std::get_if<RedexFieldSet>(&r.form)) {
        auto obj = resolve_object(s, ct, x->recv, r);
        if (const auto* f = std::get_if<Fault>(&obj)) return *f;
        const ObjectView& view = std::get<ObjectView>(obj);
        int idx = view.cls->field_index(x->field);
        if (idx < 0) return fault(FaultKind::UnknownField, r);
        Capability k = view.cls->fields[idx].second;
        Store out = s;
        if (!apply_capability_observed(out, k, x->rhs, obs))
            return fault(FaultKind::CapabilityViolation, r,
                         "field " + x->field + " moves an unmov reference");
        std::optional<Value> cv = cast(k, x->rhs);
        assert(cv.has_value());
        out.heap.at(view.loc).fields[idx] = *cv;
        return Stepped{std::move(out), plug(ctx, make_value_expr(Value::unit(), r.span)),
                       "E-Assignment"};
    }

    if (const auto* x = std::get_if<RedexCall>(&r.form)) {
        auto obj = resolve_object(s, ct, x->recv, r);
        if (const auto* f = std::get_if<Fault>(&obj)) return *f;
        const ObjectView& view = std::get<ObjectView>(obj);
        const MethodDecl* m = view.cls->find_method(x->method);
        if (!m) return fault(FaultKind::UnknownMethod, r);
        if (m->params.size() != x->args.size())
            return fault(FaultKind::ArityMismatch, r,
                         "method " + x->method + " takes " + std::to_string(m->params.size()) +
                             " argument(s), got " + std::to_string(x->args.size()));

        // Arguments update the store left to right, then the receiver.
        Store out = s;
        for (std::size_t i = 0; i < x->args.size(); ++i) {
            if (!apply_capability_observed(out, m->params[i].second, x->args[i], obs))
                return fault(FaultKind::CapabilityViolation, r,
                             "argument " + m->params[i].first + " moves an unmov reference");
        }
        if (!apply_capability_observed(out, m->recv_cap, x->recv, obs))
            return fault(FaultKind::CapabilityViolation, r, "receiver moves an unmov reference");

        Subst subst;
        for (std::size_t i = 0; i < x->args.size(); ++i) {
            std::optional<Value> cv = cast(m->params[i].second, x->args[i]);
            assert(cv.has_value());
            subst.emplace(m->params[i].first, bind_fresh_in(out, m->params[i].first, *cv));
        }
        std::optional<Value> recv_cast = cast(m->recv_cap, x->recv);
        assert(recv_cast.has_value());
        subst.emplace("this", bind_fresh_in(out, "this", *recv_cast));

        // The return capability is applied by the let rule once the body is
        // a value: `let k'' ret = body; ret`.
        std::string ret = fresh_name(out, "ret");
        ExprPtr body = substitute(m->body, subst);
        ExprPtr contractum = make_expr(
            LetExpr{m->ret_cap, ret, std::move(body), make_expr(VarExpr{ret}, r.span)}, r.span);
        return Stepped{std::move(out), plug(ctx, std::move(contractum)), "E-MethodCall"};
    }

    // Spawn, send and receive touch the actor table and are the scheduler's
    // business.
    return NeedsRuntime{r, ctx};
}

} // namespace gradcap
