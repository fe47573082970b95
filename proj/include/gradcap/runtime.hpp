#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "gradcap/ast.hpp"
#include "gradcap/eval.hpp"
#include "gradcap/store.hpp"

namespace gradcap {

enum class SchedulerKind { RoundRobin, SeededRandom, Exhaustive };

struct SchedulerPolicy {
    SchedulerKind kind = SchedulerKind::RoundRobin;
    std::uint64_t seed = 0; // SeededRandom only

    static SchedulerPolicy round_robin() { return {SchedulerKind::RoundRobin, 0}; }
    static SchedulerPolicy seeded(std::uint64_t seed) { return {SchedulerKind::SeededRandom, seed}; }
};

/// Summary of what one step changed in the store; empty fields are omitted
/// from the JSON form.
struct StepDelta {
    std::vector<std::string> bound;                           // variables added
    std::vector<std::string> vars_erred;                      // bindings replaced by err
    std::vector<std::pair<std::uint64_t, std::string>> fields_erred;   // (loc, field)
    std::vector<std::pair<std::uint64_t, std::string>> fields_written; // (loc, field)
    std::vector<std::uint64_t> allocated;                     // locations
    std::vector<ActorId> enqueued_to;
    std::vector<ActorId> dequeued_from;
    std::vector<ActorId> spawned;

    nlohmann::json to_json() const;
};

struct TraceEvent {
    std::uint64_t step = 0;
    ActorId actor = 0;
    std::string rule;  // a runtime rule name, or "Fault" / "Block"
    std::string redex; // printed redex
    StepDelta delta;
    std::optional<FaultKind> fault;

    nlohmann::json to_json() const;
};

enum class Termination { AllDone, FaultStop, Deadlock, StepLimit };

std::string to_string(Termination t);

struct RunOutcome {
    Store final_store;
    std::uint64_t steps = 0;
    Termination termination = Termination::AllDone;

    /// Lowest applicable process exit code for this outcome.
    int exit_code() const;
};

struct RunConfig {
    SchedulerPolicy policy;
    std::uint64_t max_steps = 100000;
    bool literal_lifo = false; // paper-notation queue mode: enqueue at the head
    bool fail_fast = false;    // stop the whole run at the first fault
    bool collect_trace = true;
    MoveObserver on_move; // optional
};

/// One interpreter instance: a store plus the immutable class table and the
/// run configuration. Copyable; exhaustive exploration copies per branch.
class Machine {
  public:
    Machine(const Program& p, RunConfig cfg);

    const Store& store() const { return store_; }
    Store& mutable_store() { return store_; }
    const ClassTable& classes() const { return *classes_; }
    const RunConfig& config() const { return cfg_; }
    std::uint64_t steps() const { return steps_; }

    /// Runnable actor ids in ascending order.
    std::vector<ActorId> runnable_actors() const;

    /// Performs exactly one step of the chosen actor, which must be
    /// runnable. Returns the trace event describing it.
    TraceEvent step_actor(ActorId chosen);

    /// Picks the next actor per policy; nullopt when none is runnable.
    std::optional<ActorId> pick(std::uint64_t& rng_state) const;

    bool any_fault() const;
    Termination classify_quiescence() const;

  private:
    std::shared_ptr<const ClassTable> classes_;
    Store store_;
    RunConfig cfg_;
    std::uint64_t steps_ = 0;
    ActorId last_stepped_ = 0;
    bool stepped_once_ = false;

    TraceEvent runtime_action(ActorId self_id, const NeedsRuntime& nr);
    void refresh_status(ActorState& actor);
};

// --- actor-level operations (exposed for unit tests) ---

/// Spawns an actor running `body`. Captured free variables are looked up,
/// each value is moved (erring the rest of the store), and fresh names bound
/// to the original values are substituted into the body. The parent receives
/// the child's actor id.
struct SpawnOk {
    Store store;
    ActorId child;
};
std::variant<SpawnOk, Fault> spawn_actor(const Store& s, const ExprPtr& body, const SourceSpan& span,
                                         const MoveObserver* obs = nullptr);

/// Sends payload to target: the payload is moved, then enqueued (tail by
/// default, head under literal_lifo). The sender's result is unit. A blocked
/// target becomes runnable.
std::variant<Store, Fault> deliver_send(const Store& s, const Value& target, const Value& payload,
                                        const SourceSpan& span, bool literal_lifo = false,
                                        const MoveObserver* obs = nullptr);

/// Dequeues the head message, or signals an empty queue.
struct ReceiveBlocked {};
std::variant<std::pair<ActorState, Value>, ReceiveBlocked> try_receive(const ActorState& actor);

// --- whole-program drivers ---

struct RunResult {
    RunOutcome outcome;
    std::vector<TraceEvent> trace;
};

RunResult run_program(const Program& p, RunConfig cfg);

/// One deduplicated end state of the exploration.
struct OutcomeSummary {
    Termination termination;
    std::vector<std::pair<ActorId, std::string>> actor_status; // (id, printed status)
    std::string store_hash; // canonical hash, locations/variables renamed

    friend bool operator==(const OutcomeSummary&, const OutcomeSummary&) = default;
    friend auto operator<=>(const OutcomeSummary&, const OutcomeSummary&) = default;
};

struct ExploreResult {
    std::set<OutcomeSummary> summaries;
    std::uint64_t paths = 0;      // complete interleavings examined
    std::uint64_t nodes = 0;      // scheduler steps taken across all branches
    bool truncated = false;       // node budget exceeded
    std::vector<FaultKind> faults_seen;
    bool any_deadlock = false;
    bool any_step_limit = false;
};

/// Depth-first enumeration of every scheduling choice up to max_steps per
/// path. Stops expanding once `max_nodes` steps have been taken and reports
/// truncation.
ExploreResult explore_exhaustive(const Program& p, std::uint64_t max_steps,
                                 std::uint64_t max_nodes = 1u << 20, bool literal_lifo = false);

// --- checkers used by the property suites ---

/// Definition-1 postcondition over a successful moved application:
/// no outside field points into the moved graph, inside location fields stay
/// inside, no variable binding points into the graph, actors untouched.
bool check_move_postcondition(const Store& before, const Store& after, const Value& moved_root);

/// Heap-reachability isolation: the closures of distinct non-done actors'
/// roots (queues plus expression-embedded values) are pairwise disjoint.
bool check_actor_isolation(const Store& s);

/// Canonical content hash of the observable store state: actors in id
/// order, reachable heap locations and live variables renamed in first-seen
/// order. Equivalent end states hash equal regardless of allocation order.
std::string canonical_state_hash(const Store& s);

/// Whole-store invariants: every location occurring in any value (vars,
/// heap fields, actor queues and expressions) is in the heap domain, and a
/// blocked actor sits exactly on a receive with an empty queue. Asserted in
/// debug builds after every scheduler step.
bool store_invariants_ok(const Store& s);

/// (actor, rule) skeleton of a trace, for the gradual-guarantee comparison.
std::vector<std::pair<ActorId, std::string>> trace_skeleton(const std::vector<TraceEvent>& trace);

nlohmann::json outcome_to_json(const RunOutcome& outcome);
nlohmann::json explore_to_json(const ExploreResult& r);
int explore_exit_code(const ExploreResult& r);

} // namespace gradcap
