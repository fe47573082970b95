#include "gradcap/runtime.hpp"

#include <algorithm>
#include <cassert>
#include <sstream>

#include "gradcap/printer.hpp"

namespace gradcap {

std::string to_string(Termination t) {
    switch (t) {
    case Termination::AllDone: return "all-done";
    case Termination::FaultStop: return "fault-stop";
    case Termination::Deadlock: return "deadlock";
    case Termination::StepLimit: return "step-limit";
    }
    return "?";
}

namespace {

// splitmix64: fixed output sequence on every platform, unlike the standard
// distributions.
std::uint64_t next_rand(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

bool actor_equal(const ActorState& a, const ActorState& b) {
    return a.id == b.id && a.queue == b.queue && a.status == b.status &&
           ((!a.expr && !b.expr) || (a.expr && b.expr && expr_equal(*a.expr, *b.expr)));
}

void collect_expr_values(const Expr& e, std::vector<Value>& out) {
    if (const auto* x = e.get_if<ValExpr>()) {
        out.push_back(x->value);
        return;
    }
    if (const auto* x = e.get_if<CallExpr>()) {
        collect_expr_values(*x->recv, out);
        for (const auto& a : x->args) collect_expr_values(*a, out);
        return;
    }
    if (const auto* x = e.get_if<FieldGetExpr>()) return collect_expr_values(*x->recv, out);
    if (const auto* x = e.get_if<FieldSetExpr>()) {
        collect_expr_values(*x->recv, out);
        collect_expr_values(*x->rhs, out);
        return;
    }
    if (const auto* x = e.get_if<LetExpr>()) {
        collect_expr_values(*x->rhs, out);
        collect_expr_values(*x->body, out);
        return;
    }
    if (const auto* x = e.get_if<NewExpr>()) {
        for (const auto& a : x->args) collect_expr_values(*a, out);
        return;
    }
    if (const auto* x = e.get_if<SpawnExpr>()) return collect_expr_values(*x->body, out);
    if (const auto* x = e.get_if<SendExpr>()) {
        collect_expr_values(*x->target, out);
        collect_expr_values(*x->payload, out);
        return;
    }
}

} // namespace

// --- actor-level operations ---

std::variant<SpawnOk, Fault> spawn_actor(const Store& s, const ExprPtr& body, const SourceSpan& span,
                                         const MoveObserver* obs) {
    const std::vector<std::string> captured = free_vars(*body);
    std::vector<Value> values;
    values.reserve(captured.size());
    for (const auto& name : captured) {
        auto it = s.vars.find(name);
        if (it == s.vars.end())
            return Fault{FaultKind::UnboundVariable, "spawn captures unbound '" + name + "'", span};
        values.push_back(it->second);
    }

    Store out = s;
    // Every capture is moved first; the child then gets fresh bindings to
    // the original values, so it keeps live references while the rest of
    // the store is erred.
    for (const Value& v : values) {
        if (!apply_capability_observed(out, Capability::Moved, v, obs))
            return Fault{FaultKind::CapabilityViolation,
                         "spawn { ... }: capture moves an unmov reference", span};
    }
    Subst subst;
    for (std::size_t i = 0; i < captured.size(); ++i)
        subst.emplace(captured[i], bind_fresh_in(out, captured[i], values[i]));

    ActorState child;
    child.id = out.next_actor++;
    child.expr = substitute(body, subst);
    if (const auto* val = child.expr->get_if<ValExpr>()) child.status = StatusDone{val->value};
    ActorId id = child.id;
    out.actors.emplace(id, std::move(child));
    return SpawnOk{std::move(out), id};
}

std::variant<Store, Fault> deliver_send(const Store& s, const Value& target, const Value& payload,
                                        const SourceSpan& span, bool literal_lifo,
                                        const MoveObserver* obs) {
    std::string summary = "send(" + to_string(target) + ", " + to_string(payload) + ")";
    if (target.is_err())
        return Fault{FaultKind::UninitializedUse, summary + ": target is uninitialised", span};
    const auto* a = target.as_actor();
    if (!a) return Fault{FaultKind::NotAnActor, summary, span};

    Store out = s;
    auto it = out.actors.find(a->id);
    if (it == out.actors.end()) return Fault{FaultKind::NotAnActor, summary, span};
    if (!apply_capability_observed(out, Capability::Moved, payload, obs))
        return Fault{FaultKind::CapabilityViolation, summary + ": payload is an unmov reference",
                     span};
    if (literal_lifo) {
        it->second.queue.push_front(payload);
    } else {
        it->second.queue.push_back(payload);
    }
    if (it->second.blocked()) it->second.status = StatusRunnable{};
    return out;
}

std::variant<std::pair<ActorState, Value>, ReceiveBlocked> try_receive(const ActorState& actor) {
    if (actor.queue.empty()) return ReceiveBlocked{};
    std::optional<Decomposition> dec = decompose(actor.expr);
    assert(dec && std::holds_alternative<RedexReceive>(dec->redex.form));
    ActorState out = actor;
    Value v = out.queue.front();
    out.queue.pop_front();
    out.expr = plug(dec->ctx, make_value_expr(v, dec->redex.span));
    return std::make_pair(std::move(out), std::move(v));
}

// --- machine ---

Machine::Machine(const Program& p, RunConfig cfg)
    : classes_(std::make_shared<const ClassTable>(p.classes)), cfg_(std::move(cfg)) {
    ActorState main_actor;
    main_actor.id = 0;
    main_actor.expr = p.main;
    if (const auto* val = p.main->get_if<ValExpr>()) main_actor.status = StatusDone{val->value};
    store_.next_actor = 1;
    store_.actors.emplace(0, std::move(main_actor));
}

std::vector<ActorId> Machine::runnable_actors() const {
    std::vector<ActorId> out;
    for (const auto& [id, a] : store_.actors)
        if (a.runnable()) out.push_back(id);
    return out;
}

std::optional<ActorId> Machine::pick(std::uint64_t& rng_state) const {
    std::vector<ActorId> runnable = runnable_actors();
    if (runnable.empty()) return std::nullopt;
    switch (cfg_.policy.kind) {
    case SchedulerKind::SeededRandom:
        return runnable[next_rand(rng_state) % runnable.size()];
    case SchedulerKind::RoundRobin:
    case SchedulerKind::Exhaustive:
    default: {
        if (!stepped_once_) return runnable.front();
        // Smallest runnable id strictly after the last stepped, wrapping.
        for (ActorId id : runnable)
            if (id > last_stepped_) return id;
        return runnable.front();
    }
    }
}

void Machine::refresh_status(ActorState& actor) {
    if (actor.faulted() || actor.blocked() || actor.done()) return;
    if (const auto* val = actor.expr->get_if<ValExpr>()) actor.status = StatusDone{val->value};
}

namespace {

std::string field_name_of(const ClassTable& ct, const std::string& cls, std::size_t idx) {
    auto it = ct.find(cls);
    if (it != ct.end() && idx < it->second.fields.size()) return it->second.fields[idx].first;
    return "[" + std::to_string(idx) + "]";
}

StepDelta diff_stores(const Store& before, const Store& after, const ClassTable& ct) {
    StepDelta d;
    for (const auto& [name, v] : after.vars) {
        auto it = before.vars.find(name);
        if (it == before.vars.end()) {
            d.bound.push_back(name);
        } else if (!(it->second == v) && v.is_err()) {
            d.vars_erred.push_back(name);
        }
    }
    for (const auto& [loc, rec] : after.heap) {
        auto it = before.heap.find(loc);
        if (it == before.heap.end()) {
            d.allocated.push_back(loc.id);
            continue;
        }
        for (std::size_t i = 0; i < rec.fields.size() && i < it->second.fields.size(); ++i) {
            if (it->second.fields[i] == rec.fields[i]) continue;
            if (rec.fields[i].is_err() && it->second.fields[i].is_loc()) {
                d.fields_erred.emplace_back(loc.id, field_name_of(ct, rec.cls, i));
            } else {
                d.fields_written.emplace_back(loc.id, field_name_of(ct, rec.cls, i));
            }
        }
    }
    for (const auto& [id, a] : after.actors) {
        auto it = before.actors.find(id);
        if (it == before.actors.end()) {
            d.spawned.push_back(id);
            continue;
        }
        if (a.queue.size() > it->second.queue.size()) d.enqueued_to.push_back(id);
        if (a.queue.size() < it->second.queue.size()) d.dequeued_from.push_back(id);
    }
    return d;
}

} // namespace

TraceEvent Machine::runtime_action(ActorId self_id, const NeedsRuntime& nr) {
    TraceEvent ev;
    ev.actor = self_id;
    ev.redex = print_redex(nr.redex);
    const MoveObserver* obs = cfg_.on_move ? &cfg_.on_move : nullptr;

    auto fail = [&](const Fault& f) {
        store_.actors.at(self_id).status = StatusFaulted{f.kind};
        ev.rule = "Fault";
        ev.fault = f.kind;
        ev.redex = f.detail;
    };

    if (const auto* sp = std::get_if<RedexSpawn>(&nr.redex.form)) {
        auto res = spawn_actor(store_, sp->body, nr.redex.span, obs);
        if (auto* f = std::get_if<Fault>(&res)) {
            fail(*f);
            return ev;
        }
        auto& ok = std::get<SpawnOk>(res);
        ActorId child = ok.child;
        store_ = std::move(ok.store);
        ActorState& self = store_.actors.at(self_id);
        self.expr = plug(nr.ctx, make_value_expr(Value::actor(child), nr.redex.span));
        refresh_status(self);
        ev.rule = "E-Spawn";
        return ev;
    }

    if (const auto* sd = std::get_if<RedexSend>(&nr.redex.form)) {
        auto res = deliver_send(store_, sd->target, sd->payload, nr.redex.span, cfg_.literal_lifo,
                                obs);
        if (auto* f = std::get_if<Fault>(&res)) {
            fail(*f);
            return ev;
        }
        store_ = std::move(std::get<Store>(res));
        ActorState& self = store_.actors.at(self_id);
        self.expr = plug(nr.ctx, make_value_expr(Value::unit(), nr.redex.span));
        refresh_status(self);
        ev.rule = "E-Send";
        return ev;
    }

    assert(std::holds_alternative<RedexReceive>(nr.redex.form));
    ActorState& actor = store_.actors.at(self_id);
    auto res = try_receive(actor);
    if (std::holds_alternative<ReceiveBlocked>(res)) {
        actor.status = StatusBlocked{};
        ev.rule = "Block";
        return ev;
    }
    actor = std::move(std::get<std::pair<ActorState, Value>>(res).first);
    refresh_status(actor);
    ev.rule = "E-Receive";
    return ev;
}

TraceEvent Machine::step_actor(ActorId chosen) {
    ActorState& actor = store_.actors.at(chosen);
    assert(actor.runnable());

    std::optional<Store> before;
    if (cfg_.collect_trace) before = store_;

    const MoveObserver* obs = cfg_.on_move ? &cfg_.on_move : nullptr;
    StepResult res = step_local(store_, actor.expr, *classes_, obs);

    TraceEvent ev;
    ev.actor = chosen;

    if (auto* st = std::get_if<Stepped>(&res)) {
        // Redex summary comes from the pre-step expression.
        if (cfg_.collect_trace) {
            auto dec = decompose(actor.expr);
            ev.redex = print_redex(dec->redex);
        }
        ev.rule = st->rule;
        ExprPtr next = st->expr;
        store_ = std::move(st->store);
        ActorState& self = store_.actors.at(chosen);
        self.expr = std::move(next);
        refresh_status(self);
    } else if (auto* f = std::get_if<Fault>(&res)) {
        actor.status = StatusFaulted{f->kind};
        ev.rule = "Fault";
        ev.fault = f->kind;
        ev.redex = f->detail;
    } else if (auto* nr = std::get_if<NeedsRuntime>(&res)) {
        ev = runtime_action(chosen, *nr);
    } else {
        // Value expressions are marked done eagerly and never selected.
        assert(false && "stepped an already-done actor");
    }

    ev.step = steps_++;
    last_stepped_ = chosen;
    stepped_once_ = true;
    if (before) ev.delta = diff_stores(*before, store_, *classes_);
    assert(store_invariants_ok(store_));
    return ev;
}

bool Machine::any_fault() const {
    for (const auto& [id, a] : store_.actors)
        if (a.faulted()) return true;
    return false;
}

Termination Machine::classify_quiescence() const {
    bool any_blocked = false, any_faulted = false;
    for (const auto& [id, a] : store_.actors) {
        if (a.blocked()) any_blocked = true;
        if (a.faulted()) any_faulted = true;
    }
    if (any_blocked) return Termination::Deadlock;
    if (any_faulted) return Termination::FaultStop;
    return Termination::AllDone;
}

// --- drivers ---

RunResult run_program(const Program& p, RunConfig cfg) {
    RunResult result;
    Machine m(p, cfg);
    std::uint64_t rng = cfg.policy.seed;

    for (;;) {
        std::optional<ActorId> choice = m.pick(rng);
        if (!choice) {
            result.outcome.termination = m.classify_quiescence();
            break;
        }
        if (m.steps() >= cfg.max_steps) {
            result.outcome.termination = Termination::StepLimit;
            break;
        }
        TraceEvent ev = m.step_actor(*choice);
        bool faulted = ev.rule == "Fault";
        if (cfg.collect_trace) result.trace.push_back(std::move(ev));
        if (cfg.fail_fast && faulted) {
            result.outcome.termination = Termination::FaultStop;
            break;
        }
    }
    result.outcome.steps = m.steps();
    result.outcome.final_store = m.store();
    return result;
}

int RunOutcome::exit_code() const {
    bool cap = false, uninit = false, other = false;
    for (const auto& [id, a] : final_store.actors) {
        if (const auto* f = std::get_if<StatusFaulted>(&a.status)) {
            if (f->kind == FaultKind::CapabilityViolation) cap = true;
            else if (f->kind == FaultKind::UninitializedUse) uninit = true;
            else other = true;
        }
    }
    if (cap) return 2;
    if (uninit) return 3;
    if (termination == Termination::Deadlock) return 4;
    if (termination == Termination::StepLimit) return 5;
    if (other) return 6;
    return 0;
}

namespace {

OutcomeSummary summarize_machine(const Machine& m, std::uint64_t max_steps) {
    OutcomeSummary s;
    const bool runnable_left = !m.runnable_actors().empty();
    s.termination = (m.steps() >= max_steps && runnable_left) ? Termination::StepLimit
                                                              : m.classify_quiescence();
    for (const auto& [id, a] : m.store().actors) {
        std::string st = status_name(a.status);
        if (const auto* f = std::get_if<StatusFaulted>(&a.status))
            st += "(" + to_string(f->kind) + ")";
        s.actor_status.emplace_back(id, std::move(st));
    }
    s.store_hash = canonical_state_hash(m.store());
    return s;
}

void note_outcome(ExploreResult& res, const Machine& m, const OutcomeSummary& s) {
    if (s.termination == Termination::Deadlock) res.any_deadlock = true;
    if (s.termination == Termination::StepLimit) res.any_step_limit = true;
    for (const auto& [id, a] : m.store().actors)
        if (const auto* f = std::get_if<StatusFaulted>(&a.status))
            if (std::find(res.faults_seen.begin(), res.faults_seen.end(), f->kind) ==
                res.faults_seen.end())
                res.faults_seen.push_back(f->kind);
}

} // namespace

ExploreResult explore_exhaustive(const Program& p, std::uint64_t max_steps,
                                 std::uint64_t max_nodes, bool literal_lifo) {
    RunConfig cfg;
    cfg.policy.kind = SchedulerKind::Exhaustive;
    cfg.max_steps = max_steps;
    cfg.literal_lifo = literal_lifo;
    cfg.collect_trace = false;

    ExploreResult res;

    // Runs forced single choices in place; returns true when the path ended.
    auto advance_linear = [&](Machine& m) -> bool {
        for (;;) {
            if (m.steps() >= max_steps) return true;
            std::vector<ActorId> runnable = m.runnable_actors();
            if (runnable.empty()) return true;
            if (runnable.size() > 1) return false;
            if (res.nodes >= max_nodes) {
                res.truncated = true;
                return true;
            }
            m.step_actor(runnable.front());
            ++res.nodes;
        }
    };

    auto finish_path = [&](const Machine& m) {
        OutcomeSummary s = summarize_machine(m, max_steps);
        note_outcome(res, m, s);
        res.summaries.insert(std::move(s));
        ++res.paths;
    };

    struct Frame {
        Machine m;
        std::vector<ActorId> choices;
        std::size_t next = 0;
    };

    Machine root(p, cfg);
    if (advance_linear(root)) {
        if (!res.truncated) finish_path(root);
        return res;
    }
    std::vector<Frame> stack;
    std::vector<ActorId> root_choices = root.runnable_actors();
    stack.push_back({std::move(root), std::move(root_choices), 0});

    while (!stack.empty() && !res.truncated) {
        Frame& f = stack.back();
        if (f.next >= f.choices.size()) {
            stack.pop_back();
            continue;
        }
        if (res.nodes >= max_nodes) {
            res.truncated = true;
            break;
        }
        ActorId id = f.choices[f.next++];
        Machine child = f.m;
        child.step_actor(id);
        ++res.nodes;
        if (advance_linear(child)) {
            if (!res.truncated) finish_path(child);
            continue;
        }
        std::vector<ActorId> choices = child.runnable_actors();
        stack.push_back({std::move(child), std::move(choices), 0});
    }
    return res;
}

// --- checkers ---

bool check_move_postcondition(const Store& before, const Store& after, const Value& moved_root) {
    const std::set<Location> rog = movable_rog(before, moved_root);

    for (const auto& [loc, rec] : after.heap) {
        const bool inside = rog.contains(loc);
        for (const Value& fv : rec.fields) {
            const auto* fl = fv.as_loc();
            if (!fl) continue;
            if (inside && !rog.contains(fl->loc)) return false;  // inside points out
            if (!inside && rog.contains(fl->loc)) return false;  // outside points in
        }
    }
    for (const auto& [name, v] : after.vars) {
        const auto* l = v.as_loc();
        if (l && rog.contains(l->loc)) return false;
    }
    if (before.actors.size() != after.actors.size()) return false;
    for (const auto& [id, a] : before.actors) {
        auto it = after.actors.find(id);
        if (it == after.actors.end() || !actor_equal(a, it->second)) return false;
    }
    return true;
}

namespace {

std::set<Location> reach_closure(const Store& s, const std::vector<Value>& roots) {
    std::set<Location> seen;
    std::vector<Location> work;
    for (const Value& v : roots)
        if (const auto* l = v.as_loc()) work.push_back(l->loc);
    while (!work.empty()) {
        Location l = work.back();
        work.pop_back();
        if (!seen.insert(l).second) continue;
        const ObjectRecord* rec = s.find_record(l);
        if (!rec) continue;
        for (const Value& fv : rec->fields)
            if (const auto* fl = fv.as_loc())
                if (!seen.contains(fl->loc)) work.push_back(fl->loc);
    }
    return seen;
}

} // namespace

bool check_actor_isolation(const Store& s) {
    std::vector<std::set<Location>> closures;
    for (const auto& [id, a] : s.actors) {
        if (a.done()) continue;
        std::vector<Value> roots(a.queue.begin(), a.queue.end());
        if (a.expr) collect_expr_values(*a.expr, roots);
        closures.push_back(reach_closure(s, roots));
    }
    for (std::size_t i = 0; i < closures.size(); ++i)
        for (std::size_t j = i + 1; j < closures.size(); ++j)
            for (Location l : closures[i])
                if (closures[j].contains(l)) return false;
    return true;
}

// --- canonical hashing ---

namespace {

// Renames locations and fresh variables in first-seen order over a fixed
// traversal (actors by id, then live variable bindings, then the reachable
// heap), so equivalent end states serialize identically regardless of
// allocation interleaving. Dead variable bindings are unobservable and
// excluded.
struct Canonicalizer {
    const Store& s;
    std::map<Location, std::size_t> loc_ids{};
    std::vector<Location> loc_order{};
    std::map<std::string, std::size_t> var_ids{};
    std::vector<std::string> var_order{};

    std::size_t loc_id(Location l) {
        auto it = loc_ids.find(l);
        if (it != loc_ids.end()) return it->second;
        std::size_t id = loc_order.size();
        loc_ids.emplace(l, id);
        loc_order.push_back(l);
        return id;
    }
    std::size_t var_id(const std::string& name) {
        auto it = var_ids.find(name);
        if (it != var_ids.end()) return it->second;
        std::size_t id = var_order.size();
        var_ids.emplace(name, id);
        var_order.push_back(name);
        return id;
    }

    std::string value(const Value& v) {
        if (v.is_unit()) return "unit";
        if (const auto* a = v.as_actor()) return "actor:" + std::to_string(a->id);
        if (const auto* e = v.as_err()) return "err:" + to_string(e->perm);
        const auto* l = v.as_loc();
        return "loc:" + std::to_string(loc_id(l->loc)) + ":" + to_string(l->perm);
    }

    void expr(const Expr& e, std::string& out) {
        if (const auto* x = e.get_if<ValExpr>()) {
            out += value(x->value);
            return;
        }
        if (const auto* x = e.get_if<VarExpr>()) {
            // Fresh names ('#') are renamed; source names are stable text.
            if (x->name.find('#') != std::string::npos) {
                out += "v" + std::to_string(var_id(x->name));
            } else {
                out += x->name;
            }
            return;
        }
        if (const auto* x = e.get_if<CallExpr>()) {
            expr(*x->recv, out);
            out += "." + x->method + "(";
            for (std::size_t i = 0; i < x->args.size(); ++i) {
                if (i) out += ",";
                expr(*x->args[i], out);
            }
            out += ")";
            return;
        }
        if (const auto* x = e.get_if<FieldGetExpr>()) {
            expr(*x->recv, out);
            out += "." + x->field;
            return;
        }
        if (const auto* x = e.get_if<FieldSetExpr>()) {
            expr(*x->recv, out);
            out += "." + x->field + ":=";
            expr(*x->rhs, out);
            return;
        }
        if (const auto* x = e.get_if<LetExpr>()) {
            out += "let[" + to_string(x->cap) + "]" + x->var + "=";
            expr(*x->rhs, out);
            out += ";";
            expr(*x->body, out);
            return;
        }
        if (const auto* x = e.get_if<NewExpr>()) {
            out += "new " + x->cls + "(";
            for (std::size_t i = 0; i < x->args.size(); ++i) {
                if (i) out += ",";
                expr(*x->args[i], out);
            }
            out += ")";
            return;
        }
        if (const auto* x = e.get_if<SpawnExpr>()) {
            out += "spawn{";
            expr(*x->body, out);
            out += "}";
            return;
        }
        if (e.get_if<ReceiveExpr>()) {
            out += "receive";
            return;
        }
        if (const auto* x = e.get_if<SendExpr>()) {
            out += "send(";
            expr(*x->target, out);
            out += ",";
            expr(*x->payload, out);
            out += ")";
            return;
        }
        out += "this";
    }
};

std::uint64_t fnv1a(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace

std::string canonical_state_hash(const Store& s) {
    Canonicalizer c{s};
    std::string out = "actors[";
    for (const auto& [id, a] : s.actors) {
        out += "(" + std::to_string(id) + ":" + status_name(a.status);
        if (const auto* f = std::get_if<StatusFaulted>(&a.status))
            out += ":" + to_string(f->kind);
        if (const auto* d = std::get_if<StatusDone>(&a.status)) out += ":" + c.value(d->value);
        out += ":q[";
        for (std::size_t i = 0; i < a.queue.size(); ++i) {
            if (i) out += ",";
            out += c.value(a.queue[i]);
        }
        out += "]:";
        if (a.expr) c.expr(*a.expr, out);
        out += ")";
    }
    out += "]vars[";
    // Live variables only: those reachable from some actor expression.
    for (std::size_t i = 0; i < c.var_order.size(); ++i) {
        out += "v" + std::to_string(i) + "=";
        auto it = s.vars.find(c.var_order[i]);
        out += it == s.vars.end() ? std::string("?") : c.value(it->second);
        out += ";";
    }
    out += "]heap[";
    for (std::size_t i = 0; i < c.loc_order.size(); ++i) { // grows during the loop
        const ObjectRecord* rec = s.find_record(c.loc_order[i]);
        out += std::to_string(i) + "=";
        if (!rec) {
            out += "?;";
            continue;
        }
        out += rec->cls + "(";
        for (std::size_t j = 0; j < rec->fields.size(); ++j) {
            if (j) out += ",";
            out += c.value(rec->fields[j]);
        }
        out += ");";
    }
    out += "]";

    std::uint64_t h = fnv1a(out);
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

bool store_invariants_ok(const Store& s) {
    auto loc_known = [&](const Value& v) {
        const auto* l = v.as_loc();
        return !l || s.heap.contains(l->loc);
    };
    for (const auto& [name, v] : s.vars)
        if (!loc_known(v)) return false;
    for (const auto& [loc, rec] : s.heap)
        for (const auto& fv : rec.fields)
            if (!loc_known(fv)) return false;
    for (const auto& [id, a] : s.actors) {
        for (const auto& m : a.queue)
            if (!loc_known(m)) return false;
        std::vector<Value> embedded;
        if (a.expr) collect_expr_values(*a.expr, embedded);
        for (const auto& v : embedded)
            if (!loc_known(v)) return false;
        if (a.blocked()) {
            if (!a.queue.empty()) return false;
            auto dec = decompose(a.expr);
            if (!dec || !std::holds_alternative<RedexReceive>(dec->redex.form)) return false;
        }
    }
    return true;
}

std::vector<std::pair<ActorId, std::string>> trace_skeleton(const std::vector<TraceEvent>& trace) {
    std::vector<std::pair<ActorId, std::string>> out;
    out.reserve(trace.size());
    for (const auto& ev : trace) out.emplace_back(ev.actor, ev.rule);
    return out;
}

// --- JSON ---

nlohmann::json StepDelta::to_json() const {
    nlohmann::json j = nlohmann::json::object();
    if (!bound.empty()) j["bind"] = bound;
    if (!vars_erred.empty()) j["vars-erred"] = vars_erred;
    if (!fields_erred.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [loc, f] : fields_erred) arr.push_back({loc, f});
        j["fields-erred"] = arr;
    }
    if (!fields_written.empty()) {
        nlohmann::json arr = nlohmann::json::array();
        for (const auto& [loc, f] : fields_written) arr.push_back({loc, f});
        j["fields-written"] = arr;
    }
    if (!allocated.empty()) j["alloc"] = allocated;
    if (!enqueued_to.empty()) j["enqueued"] = enqueued_to;
    if (!dequeued_from.empty()) j["dequeued"] = dequeued_from;
    if (!spawned.empty()) j["spawned"] = spawned;
    return j;
}

nlohmann::json TraceEvent::to_json() const {
    nlohmann::json j{{"step", step}, {"actor", actor}, {"rule", rule}, {"redex", redex},
                     {"delta", delta.to_json()}};
    if (fault) j["fault"] = to_string(*fault);
    return j;
}

nlohmann::json outcome_to_json(const RunOutcome& outcome) {
    return nlohmann::json{{"termination", to_string(outcome.termination)},
                          {"exit-code", outcome.exit_code()},
                          {"steps", outcome.steps},
                          {"store", store_to_json(outcome.final_store)}};
}

nlohmann::json explore_to_json(const ExploreResult& r) {
    nlohmann::json summaries = nlohmann::json::array();
    for (const auto& s : r.summaries) {
        nlohmann::json actors = nlohmann::json::array();
        for (const auto& [id, st] : s.actor_status) actors.push_back({id, st});
        summaries.push_back({{"termination", to_string(s.termination)},
                             {"actors", actors},
                             {"hash", s.store_hash}});
    }
    return nlohmann::json{{"summaries", summaries},
                          {"distinct-outcomes", r.summaries.size()},
                          {"paths", r.paths},
                          {"nodes", r.nodes},
                          {"truncated", r.truncated},
                          {"exit-code", explore_exit_code(r)}};
}

int explore_exit_code(const ExploreResult& r) {
    bool cap = false, uninit = false, other = false;
    for (FaultKind k : r.faults_seen) {
        if (k == FaultKind::CapabilityViolation) cap = true;
        else if (k == FaultKind::UninitializedUse) uninit = true;
        else other = true;
    }
    if (cap) return 2;
    if (uninit) return 3;
    if (r.any_deadlock) return 4;
    if (r.any_step_limit || r.truncated) return 5;
    if (other) return 6;
    return 0;
}

} // namespace gradcap
