#include "gradcap/ast.hpp"

#include <algorithm>
#include <set>

namespace gradcap {

std::string to_string(Capability k) {
    switch (k) {
    case Capability::Dyn: return "?";
    case Capability::Moved: return "moved";
    case Capability::Lent: return "lent";
    }
    return "?";
}

std::string to_string(Permission p) {
    return p == Permission::Movable ? "movable" : "unmov";
}

std::string to_string(const Value& v) {
    if (v.is_unit()) return "unit";
    if (const auto* a = v.as_actor()) return "actor(" + std::to_string(a->id) + ")";
    if (const auto* l = v.as_loc())
        return to_string(l->perm) + " loc(" + std::to_string(l->loc.id) + ")";
    const auto* e = v.as_err();
    return to_string(e->perm) + " err";
}

ExprPtr make_expr(ExprNode node, SourceSpan span) {
    return std::make_shared<Expr>(std::move(node), std::move(span));
}

ExprPtr make_value_expr(Value v, SourceSpan span) {
    return make_expr(ValExpr{std::move(v)}, std::move(span));
}

namespace {

bool expr_list_equal(const std::vector<ExprPtr>& a, const std::vector<ExprPtr>& b) {
    if (a.size() != b.size()) return false;
    for (std::size_t i = 0; i < a.size(); ++i)
        if (!expr_equal(*a[i], *b[i])) return false;
    return true;
}

} // namespace

bool expr_equal(const Expr& a, const Expr& b) {
    if (a.node.index() != b.node.index()) return false;
    if (const auto* x = a.get_if<CallExpr>()) {
        const auto* y = b.get_if<CallExpr>();
        return x->method == y->method && expr_equal(*x->recv, *y->recv) &&
               expr_list_equal(x->args, y->args);
    }
    if (const auto* x = a.get_if<FieldGetExpr>()) {
        const auto* y = b.get_if<FieldGetExpr>();
        return x->field == y->field && expr_equal(*x->recv, *y->recv);
    }
    if (const auto* x = a.get_if<FieldSetExpr>()) {
        const auto* y = b.get_if<FieldSetExpr>();
        return x->field == y->field && expr_equal(*x->recv, *y->recv) && expr_equal(*x->rhs, *y->rhs);
    }
    if (const auto* x = a.get_if<LetExpr>()) {
        const auto* y = b.get_if<LetExpr>();
        return x->cap == y->cap && x->var == y->var && expr_equal(*x->rhs, *y->rhs) &&
               expr_equal(*x->body, *y->body);
    }
    if (const auto* x = a.get_if<NewExpr>()) {
        const auto* y = b.get_if<NewExpr>();
        return x->cls == y->cls && expr_list_equal(x->args, y->args);
    }
    if (const auto* x = a.get_if<SpawnExpr>()) {
        const auto* y = b.get_if<SpawnExpr>();
        return expr_equal(*x->body, *y->body);
    }
    if (a.get_if<ReceiveExpr>()) return true;
    if (const auto* x = a.get_if<SendExpr>()) {
        const auto* y = b.get_if<SendExpr>();
        return expr_equal(*x->target, *y->target) && expr_equal(*x->payload, *y->payload);
    }
    if (const auto* x = a.get_if<ValExpr>()) return x->value == b.get_if<ValExpr>()->value;
    if (const auto* x = a.get_if<VarExpr>()) return x->name == b.get_if<VarExpr>()->name;
    return true; // ThisExpr
}

const MethodDecl* ClassDecl::find_method(const std::string& m) const {
    for (const auto& md : methods)
        if (md.name == m) return &md;
    return nullptr;
}

int ClassDecl::field_index(const std::string& f) const {
    for (std::size_t i = 0; i < fields.size(); ++i)
        if (fields[i].first == f) return static_cast<int>(i);
    return -1;
}

namespace {

void collect_free_vars(const Expr& e, std::set<std::string>& bound,
                       std::vector<std::string>& out, std::set<std::string>& seen) {
    if (const auto* x = e.get_if<VarExpr>()) {
        if (!bound.contains(x->name) && seen.insert(x->name).second) out.push_back(x->name);
        return;
    }
    if (const auto* x = e.get_if<CallExpr>()) {
        collect_free_vars(*x->recv, bound, out, seen);
        for (const auto& a : x->args) collect_free_vars(*a, bound, out, seen);
        return;
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) {
        collect_free_vars(*x->recv, bound, out, seen);
        return;
    }
    if (const auto* x = e.get_if<FieldSetExpr>()) {
        collect_free_vars(*x->recv, bound, out, seen);
        collect_free_vars(*x->rhs, bound, out, seen);
        return;
    }
    if (const auto* x = e.get_if<LetExpr>()) {
        collect_free_vars(*x->rhs, bound, out, seen);
        bool inserted = bound.insert(x->var).second;
        collect_free_vars(*x->body, bound, out, seen);
        if (inserted) bound.erase(x->var);
        return;
    }
    if (const auto* x = e.get_if<NewExpr>()) {
        for (const auto& a : x->args) collect_free_vars(*a, bound, out, seen);
        return;
    }
    if (const auto* x = e.get_if<SpawnExpr>()) {
        collect_free_vars(*x->body, bound, out, seen);
        return;
    }
    if (const auto* x = e.get_if<SendExpr>()) {
        collect_free_vars(*x->target, bound, out, seen);
        collect_free_vars(*x->payload, bound, out, seen);
        return;
    }
    // ValExpr, ThisExpr, ReceiveExpr: no variables
}

bool contains_this(const Expr& e) {
    if (e.get_if<ThisExpr>()) return true;
    if (const auto* x = e.get_if<CallExpr>()) {
        if (contains_this(*x->recv)) return true;
        return std::any_of(x->args.begin(), x->args.end(),
                           [](const ExprPtr& a) { return contains_this(*a); });
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) return contains_this(*x->recv);
    if (const auto* x = e.get_if<FieldSetExpr>())
        return contains_this(*x->recv) || contains_this(*x->rhs);
    if (const auto* x = e.get_if<LetExpr>()) return contains_this(*x->rhs) || contains_this(*x->body);
    if (const auto* x = e.get_if<NewExpr>())
        return std::any_of(x->args.begin(), x->args.end(),
                           [](const ExprPtr& a) { return contains_this(*a); });
    if (const auto* x = e.get_if<SpawnExpr>()) return contains_this(*x->body);
    if (const auto* x = e.get_if<SendExpr>())
        return contains_this(*x->target) || contains_this(*x->payload);
    return false;
}

void collect_class_refs(const Expr& e, std::vector<std::pair<std::string, SourceSpan>>& out) {
    if (const auto* x = e.get_if<NewExpr>()) {
        out.emplace_back(x->cls, e.span);
        for (const auto& a : x->args) collect_class_refs(*a, out);
        return;
    }
    if (const auto* x = e.get_if<CallExpr>()) {
        collect_class_refs(*x->recv, out);
        for (const auto& a : x->args) collect_class_refs(*a, out);
        return;
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) return collect_class_refs(*x->recv, out);
    if (const auto* x = e.get_if<FieldSetExpr>()) {
        collect_class_refs(*x->recv, out);
        collect_class_refs(*x->rhs, out);
        return;
    }
    if (const auto* x = e.get_if<LetExpr>()) {
        collect_class_refs(*x->rhs, out);
        collect_class_refs(*x->body, out);
        return;
    }
    if (const auto* x = e.get_if<SpawnExpr>()) return collect_class_refs(*x->body, out);
    if (const auto* x = e.get_if<SendExpr>()) {
        collect_class_refs(*x->target, out);
        collect_class_refs(*x->payload, out);
        return;
    }
}

} // namespace

std::vector<std::string> free_vars(const Expr& e) {
    std::set<std::string> bound;
    std::set<std::string> seen;
    std::vector<std::string> out;
    collect_free_vars(e, bound, out, seen);
    return out;
}

std::vector<Diagnostic> validate_program(const Program& p) {
    std::vector<Diagnostic> diags;

    std::vector<std::pair<std::string, SourceSpan>> refs;
    for (const auto& [name, cls] : p.classes) {
        std::set<std::string> fnames;
        for (const auto& [fname, cap] : cls.fields) {
            (void)cap;
            if (!fnames.insert(fname).second)
                diags.push_back({cls.span, "duplicate field '" + fname + "' in class " + name});
        }
        std::set<std::string> mnames;
        for (const auto& m : cls.methods) {
            if (!mnames.insert(m.name).second)
                diags.push_back({m.span, "duplicate method '" + m.name + "' in class " + name});
            std::set<std::string> pnames;
            for (const auto& [pname, cap] : m.params) {
                (void)cap;
                if (pname == "this")
                    diags.push_back({m.span, "parameter named 'this' in method " + m.name});
                if (!pnames.insert(pname).second)
                    diags.push_back(
                        {m.span, "duplicate parameter '" + pname + "' in method " + m.name});
            }
            collect_class_refs(*m.body, refs);
        }
    }
    collect_class_refs(*p.main, refs);
    for (const auto& [cls, span] : refs) {
        if (!p.classes.contains(cls)) diags.push_back({span, "unknown class " + cls});
    }

    if (contains_this(*p.main))
        diags.push_back({p.main->span, "'this' outside of a method body"});
    for (const auto& v : free_vars(*p.main))
        diags.push_back({p.main->span, "unbound variable '" + v + "' in main"});

    return diags;
}

ExprPtr erase_capabilities(const ExprPtr& e) {
    if (const auto* x = e->get_if<CallExpr>()) {
        std::vector<ExprPtr> args;
        args.reserve(x->args.size());
        for (const auto& a : x->args) args.push_back(erase_capabilities(a));
        return make_expr(CallExpr{erase_capabilities(x->recv), x->method, std::move(args)}, e->span);
    }
    if (const auto* x = e->get_if<FieldGetExpr>())
        return make_expr(FieldGetExpr{erase_capabilities(x->recv), x->field}, e->span);
    if (const auto* x = e->get_if<FieldSetExpr>())
        return make_expr(FieldSetExpr{erase_capabilities(x->recv), x->field, erase_capabilities(x->rhs)},
                         e->span);
    if (const auto* x = e->get_if<LetExpr>())
        return make_expr(LetExpr{Capability::Dyn, x->var, erase_capabilities(x->rhs),
                                 erase_capabilities(x->body)},
                         e->span);
    if (const auto* x = e->get_if<NewExpr>()) {
        std::vector<ExprPtr> args;
        args.reserve(x->args.size());
        for (const auto& a : x->args) args.push_back(erase_capabilities(a));
        return make_expr(NewExpr{x->cls, std::move(args)}, e->span);
    }
    if (const auto* x = e->get_if<SpawnExpr>())
        return make_expr(SpawnExpr{erase_capabilities(x->body)}, e->span);
    if (const auto* x = e->get_if<SendExpr>())
        return make_expr(SendExpr{erase_capabilities(x->target), erase_capabilities(x->payload)},
                         e->span);
    return e; // Val, Var, This, Receive carry no annotations or children
}

Program erase_capabilities(const Program& p) {
    Program out;
    out.main = erase_capabilities(p.main);
    for (const auto& [name, cls] : p.classes) {
        ClassDecl ec;
        ec.name = cls.name;
        ec.span = cls.span;
        for (const auto& [fname, cap] : cls.fields) {
            (void)cap;
            ec.fields.emplace_back(fname, Capability::Dyn);
        }
        for (const auto& m : cls.methods) {
            MethodDecl em;
            em.recv_cap = Capability::Dyn;
            em.name = m.name;
            em.ret_cap = Capability::Dyn;
            em.span = m.span;
            for (const auto& [pname, cap] : m.params) {
                (void)cap;
                em.params.emplace_back(pname, Capability::Dyn);
            }
            em.body = erase_capabilities(m.body);
            ec.methods.push_back(std::move(em));
        }
        out.classes.emplace(name, std::move(ec));
    }
    return out;
}

} // namespace gradcap
