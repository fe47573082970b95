#include "gradcap/printer.hpp"

#include <sstream>

namespace gradcap {

namespace {

// Printing levels mirror the parser: statement level admits let/sequences,
// simple level admits postfix chains, primary is atomic. Children that sit
// below their position's level get parenthesized.

void print_stmt(const Expr& e, std::ostream& os);
void print_simple(const Expr& e, std::ostream& os);

bool is_postfix_composable(const Expr& e) {
    return !e.get_if<LetExpr>() && !e.get_if<FieldSetExpr>();
}

void print_value_expr(const Value& v, std::ostream& os) {
    // Only unit has a surface form; locations and errors print in the trace
    // notation.
    os << to_string(v);
}

void print_recv(const Expr& e, std::ostream& os) {
    if (is_postfix_composable(e)) {
        print_simple(e, os);
    } else {
        os << '(';
        print_stmt(e, os);
        os << ')';
    }
}

void print_args(const std::vector<ExprPtr>& args, std::ostream& os) {
    os << '(';
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (i) os << ", ";
        print_stmt(*args[i], os);
    }
    os << ')';
}

void print_simple(const Expr& e, std::ostream& os) {
    if (const auto* x = e.get_if<CallExpr>()) {
        print_recv(*x->recv, os);
        os << '.' << x->method;
        print_args(x->args, os);
        return;
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) {
        print_recv(*x->recv, os);
        os << '.' << x->field;
        return;
    }
    if (const auto* x = e.get_if<FieldSetExpr>()) {
        print_recv(*x->recv, os);
        os << '.' << x->field << " := ";
        if (x->rhs->get_if<LetExpr>()) {
            os << '(';
            print_stmt(*x->rhs, os);
            os << ')';
        } else {
            print_simple(*x->rhs, os);
        }
        return;
    }
    if (const auto* x = e.get_if<NewExpr>()) {
        os << "new " << x->cls;
        print_args(x->args, os);
        return;
    }
    if (const auto* x = e.get_if<SpawnExpr>()) {
        os << "spawn { ";
        print_stmt(*x->body, os);
        os << " }";
        return;
    }
    if (e.get_if<ReceiveExpr>()) {
        os << "receive";
        return;
    }
    if (const auto* x = e.get_if<SendExpr>()) {
        os << "send(";
        print_stmt(*x->target, os);
        os << ", ";
        print_stmt(*x->payload, os);
        os << ')';
        return;
    }
    if (const auto* x = e.get_if<ValExpr>()) {
        print_value_expr(x->value, os);
        return;
    }
    if (const auto* x = e.get_if<VarExpr>()) {
        os << x->name;
        return;
    }
    if (e.get_if<ThisExpr>()) {
        os << "this";
        return;
    }
    // LetExpr in a simple position: parenthesize.
    os << '(';
    print_stmt(e, os);
    os << ')';
}

void print_stmt(const Expr& e, std::ostream& os) {
    if (const auto* x = e.get_if<LetExpr>()) {
        os << "let ";
        if (x->cap != Capability::Dyn) os << to_string(x->cap) << ' ';
        os << x->var << " = ";
        if (x->rhs->get_if<LetExpr>()) {
            os << '(';
            print_stmt(*x->rhs, os);
            os << ')';
        } else {
            print_simple(*x->rhs, os);
        }
        os << "; ";
        print_stmt(*x->body, os);
        return;
    }
    print_simple(e, os);
}

void print_cap_prefix(Capability k, std::ostream& os) {
    if (k != Capability::Dyn) os << to_string(k) << ' ';
}

} // namespace

std::string print_expr(const Expr& e) {
    std::ostringstream os;
    print_stmt(e, os);
    return os.str();
}

std::string print_program(const Program& p) {
    std::ostringstream os;
    for (const auto& [name, cls] : p.classes) {
        os << "class " << name << '(';
        for (std::size_t i = 0; i < cls.fields.size(); ++i) {
            if (i) os << ", ";
            print_cap_prefix(cls.fields[i].second, os);
            os << cls.fields[i].first;
        }
        os << ") {\n";
        for (const auto& m : cls.methods) {
            os << "  ";
            print_cap_prefix(m.recv_cap, os);
            os << "method " << m.name << '(';
            for (std::size_t i = 0; i < m.params.size(); ++i) {
                if (i) os << ", ";
                os << m.params[i].first;
                if (m.params[i].second != Capability::Dyn)
                    os << " : " << to_string(m.params[i].second);
            }
            os << ')';
            if (m.ret_cap != Capability::Dyn) os << " -> " << to_string(m.ret_cap);
            os << " {\n    ";
            print_stmt(*m.body, os);
            os << "\n  }\n";
        }
        os << "}\n\n";
    }
    os << "main {\n  ";
    print_stmt(*p.main, os);
    os << "\n}\n";
    return os.str();
}

} // namespace gradcap
