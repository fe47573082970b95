#include "gradcap/store.hpp"

#include <cassert>
#include <vector>

#include "gradcap/printer.hpp"

namespace gradcap {

std::string to_string(FaultKind k) {
    switch (k) {
    case FaultKind::UninitializedUse: return "uninitialized-use";
    case FaultKind::CapabilityViolation: return "capability-violation";
    case FaultKind::UnknownClass: return "unknown-class";
    case FaultKind::UnknownMethod: return "unknown-method";
    case FaultKind::UnknownField: return "unknown-field";
    case FaultKind::ArityMismatch: return "arity-mismatch";
    case FaultKind::NotAnObject: return "not-an-object";
    case FaultKind::NotAnActor: return "not-an-actor";
    case FaultKind::UnboundVariable: return "unbound-variable";
    }
    return "?";
}

std::string status_name(const ActorStatus& s) {
    if (std::holds_alternative<StatusRunnable>(s)) return "runnable";
    if (std::holds_alternative<StatusBlocked>(s)) return "blocked";
    if (std::holds_alternative<StatusDone>(s)) return "done";
    return "faulted";
}

std::optional<Value> cast(Capability k, const Value& v) {
    if (const auto* l = v.as_loc()) {
        if (k == Capability::Lent && l->perm == Permission::Movable)
            return Value::loc(Permission::Unmov, l->loc);
        if (k == Capability::Moved && l->perm == Permission::Unmov) return std::nullopt;
    }
    return v; // fall-through clause: the value is unaffected
}

std::set<Location> movable_rog(const Store& s, const Value& v) {
    std::set<Location> rog;
    const auto* root = v.as_loc();
    if (!root || root->perm != Permission::Movable) return rog;

    std::vector<Location> work{root->loc};
    while (!work.empty()) {
        Location l = work.back();
        work.pop_back();
        if (!rog.insert(l).second) continue;
        const ObjectRecord* rec = s.find_record(l);
        if (!rec) continue;
        for (const Value& fv : rec->fields) {
            const auto* fl = fv.as_loc();
            if (fl && fl->perm == Permission::Movable && !rog.contains(fl->loc))
                work.push_back(fl->loc);
        }
    }
    return rog;
}

bool apply_capability_in(Store& s, Capability k, const Value& v) {
    if (k != Capability::Moved) return true;
    const auto* l = v.as_loc();
    if (!l) return true; // unit, actor ids and errs carry nothing to move
    if (l->perm == Permission::Unmov) return false;

    const std::set<Location> rog = movable_rog(s, v);

    // Heap: err every location-valued field that crosses the rog boundary,
    // in either direction, keeping the field's original permission.
    for (auto& [loc, rec] : s.heap) {
        const bool inside = rog.contains(loc);
        for (Value& fv : rec.fields) {
            const auto* fl = fv.as_loc();
            if (!fl) continue;
            if (rog.contains(fl->loc) != inside) fv = Value::err(fl->perm);
        }
    }
    // Variables: every binding to a location inside the rog becomes err.
    for (auto& [name, bv] : s.vars) {
        const auto* bl = bv.as_loc();
        if (bl && rog.contains(bl->loc)) bv = Value::err(bl->perm);
    }
    // Actor queues and in-flight expressions are deliberately untouched:
    // values already held by an actor stay live until they are used.
    return true;
}

std::optional<Store> apply_capability(const Store& s, Capability k, const Value& v) {
    Store out = s;
    if (!apply_capability_in(out, k, v)) return std::nullopt;
    return out;
}

bool apply_capability_observed(Store& s, Capability k, const Value& v, const MoveObserver* obs) {
    const auto* l = v.as_loc();
    const bool is_move = k == Capability::Moved && l && l->perm == Permission::Movable;
    if (!is_move || !obs || !*obs) return apply_capability_in(s, k, v);
    Store before = s;
    if (!apply_capability_in(s, k, v)) return false;
    (*obs)(before, s, v);
    return true;
}

Location alloc_in(Store& s, ObjectRecord o) {
    Location l{s.next_loc++};
    s.heap.emplace(l, std::move(o));
    return l;
}

std::pair<Store, Location> alloc(const Store& s, ObjectRecord o) {
    Store out = s;
    Location l = alloc_in(out, std::move(o));
    return {std::move(out), l};
}

std::string bind_fresh_in(Store& s, const std::string& hint, const Value& v) {
    // '#' cannot occur in a source identifier, so fresh names never collide
    // with user variables. Hints that are themselves fresh names are
    // trimmed back to their stem.
    std::string name = hint.substr(0, hint.find('#')) + "#" + std::to_string(s.next_fresh++);
    [[maybe_unused]] auto [it, inserted] = s.vars.emplace(name, v);
    assert(inserted && "fresh names are never rebound");
    return name;
}

std::pair<Store, std::string> bind_fresh(const Store& s, const std::string& hint, const Value& v) {
    Store out = s;
    std::string name = bind_fresh_in(out, hint, v);
    return {std::move(out), name};
}

nlohmann::json value_to_json(const Value& v) {
    nlohmann::json j;
    if (v.is_unit()) {
        j["type"] = "unit";
    } else if (const auto* a = v.as_actor()) {
        j["type"] = "actor";
        j["id"] = a->id;
    } else if (const auto* l = v.as_loc()) {
        j["type"] = "loc";
        j["perm"] = to_string(l->perm);
        j["loc"] = l->loc.id;
    } else {
        j["type"] = "err";
        j["perm"] = to_string(v.as_err()->perm);
    }
    return j;
}

nlohmann::json store_to_json(const Store& s) {
    nlohmann::json vars = nlohmann::json::object();
    for (const auto& [name, v] : s.vars) vars[name] = value_to_json(v);

    nlohmann::json heap = nlohmann::json::array();
    for (const auto& [loc, rec] : s.heap) {
        nlohmann::json fields = nlohmann::json::array();
        for (const auto& fv : rec.fields) fields.push_back(value_to_json(fv));
        heap.push_back({loc.id, {{"class", rec.cls}, {"fields", fields}}});
    }

    nlohmann::json actors = nlohmann::json::array();
    for (const auto& [id, actor] : s.actors) {
        nlohmann::json queue = nlohmann::json::array();
        for (const auto& m : actor.queue) queue.push_back(value_to_json(m));
        nlohmann::json a{{"status", status_name(actor.status)},
                         {"queue", queue},
                         {"expr", actor.expr ? print_expr(*actor.expr) : ""}};
        if (const auto* d = std::get_if<StatusDone>(&actor.status))
            a["value"] = value_to_json(d->value);
        if (const auto* f = std::get_if<StatusFaulted>(&actor.status))
            a["fault"] = to_string(f->kind);
        actors.push_back({id, a});
    }

    return nlohmann::json{{"vars", vars}, {"heap", heap}, {"actors", actors}};
}

} // namespace gradcap
