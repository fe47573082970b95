#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>

#include <json.hpp>

#include "gradcap/ast.hpp"
#include "gradcap/fault.hpp"

namespace gradcap {

/// Heap record: class name plus field values positionally matching the
/// declared fields. Constructed only after an arity check.
struct ObjectRecord {
    std::string cls;
    std::vector<Value> fields;

    friend bool operator==(const ObjectRecord&, const ObjectRecord&) = default;
};

// Actor status. Done and Faulted actors never step again; BlockedOnReceive
// clears when a message arrives.
struct StatusRunnable {
    friend bool operator==(const StatusRunnable&, const StatusRunnable&) = default;
};
struct StatusBlocked {
    friend bool operator==(const StatusBlocked&, const StatusBlocked&) = default;
};
struct StatusDone {
    Value value;
    friend bool operator==(const StatusDone&, const StatusDone&) = default;
};
struct StatusFaulted {
    FaultKind kind;
    friend bool operator==(const StatusFaulted&, const StatusFaulted&) = default;
};

using ActorStatus = std::variant<StatusRunnable, StatusBlocked, StatusDone, StatusFaulted>;

std::string status_name(const ActorStatus& s);

struct ActorState {
    ActorId id = 0;
    std::deque<Value> queue; // pending messages, head is next to deliver
    ExprPtr expr;            // current expression including its context
    ActorStatus status = StatusRunnable{};

    bool runnable() const { return std::holds_alternative<StatusRunnable>(status); }
    bool blocked() const { return std::holds_alternative<StatusBlocked>(status); }
    bool done() const { return std::holds_alternative<StatusDone>(status); }
    bool faulted() const { return std::holds_alternative<StatusFaulted>(status); }
};

/// The global store: variable bindings, heap, and the actor table. Variables
/// are globally unique and never rebound; fresh names use '#', which cannot
/// appear in a source identifier. Copying a Store is a full snapshot —
/// exploration relies on that.
struct Store {
    std::map<std::string, Value> vars;
    std::map<Location, ObjectRecord> heap;
    std::map<ActorId, ActorState> actors;

    std::uint64_t next_loc = 0;
    std::uint64_t next_actor = 0;
    std::uint64_t next_fresh = 0;

    const ObjectRecord* find_record(Location l) const {
        auto it = heap.find(l);
        return it == heap.end() ? nullptr : &it->second;
    }
};

/// Casts a value to a capability:
///   lent on a movable location yields the same location as unmov;
///   moved on an unmov location is undefined (nullopt);
///   every other pair returns the value unchanged.
std::optional<Value> cast(Capability k, const Value& v);

/// The movable reachable object graph: least set containing l when
/// v = movable l, closed over movable-permission fields. Empty for every
/// other value shape. Terminates on cyclic heaps (visited-set traversal).
std::set<Location> movable_rog(const Store& s, const Value& v);

/// Store update for a value used at capability k.
///   k != moved: unchanged.
///   moved on unmov location: undefined (nullopt) — the caller faults.
///   moved on movable location: every heap field crossing the rog boundary
///   (in either direction) becomes err with the field's original permission,
///   and every variable bound to a location inside the rog becomes err with
///   its original permission. Actor queues and expressions are untouched.
///   moved on unit / actor id / err: unchanged, nothing to move.
std::optional<Store> apply_capability(const Store& s, Capability k, const Value& v);

/// In-place variant of apply_capability; returns false on the undefined case
/// and leaves the store unchanged in that case.
bool apply_capability_in(Store& s, Capability k, const Value& v);

/// Observer invoked after every successful moved application of a movable
/// location, with the store before, the store after, and the moved root.
/// Drives the move-postcondition property suites; unset in normal runs.
using MoveObserver = std::function<void(const Store& before, const Store& after, const Value& root)>;

/// apply_capability_in, additionally reporting actual moves to obs (may be
/// null or empty).
bool apply_capability_observed(Store& s, Capability k, const Value& v, const MoveObserver* obs);

/// Extends the heap with a fresh location mapped to o.
std::pair<Store, Location> alloc(const Store& s, ObjectRecord o);
Location alloc_in(Store& s, ObjectRecord o);

/// Binds a globally fresh name derived from hint ("hint#N") to v.
std::pair<Store, std::string> bind_fresh(const Store& s, const std::string& hint, const Value& v);
std::string bind_fresh_in(Store& s, const std::string& hint, const Value& v);

/// Canonical JSON snapshot: vars as an object with sorted keys, heap and
/// actors as arrays of [id, record] pairs in ascending id order, locations
/// as plain integers. Stable across runs for identical stores.
nlohmann::json store_to_json(const Store& s);
nlohmann::json value_to_json(const Value& v);

} // namespace gradcap
