#include <doctest.h>

#include <set>

#include "gradcap/parser.hpp"
#include "gradcap/printer.hpp"
#include "gradcap/runtime.hpp"

#include "../support/gen.hpp"
#include "../support/oracles.hpp"
#include "test_util.hpp"

using namespace gradcap;
using gradcap::testing::load_corpus;

namespace {

Value mloc(std::uint64_t id) { return Value::loc(Permission::Movable, Location{id}); }
Value uloc(std::uint64_t id) { return Value::loc(Permission::Unmov, Location{id}); }

RunResult run_text(const std::string& text, RunConfig cfg = {}) {
    Program p = parse_program(text);
    REQUIRE(validate_program(p).empty());
    return run_program(p, cfg);
}

const ActorState& actor(const RunOutcome& o, ActorId id) { return o.final_store.actors.at(id); }

bool faulted_with(const RunOutcome& o, ActorId id, FaultKind k) {
    const auto* f = std::get_if<StatusFaulted>(&actor(o, id).status);
    return f && f->kind == k;
}

std::string trace_string(const std::vector<TraceEvent>& trace) {
    std::string out;
    for (const auto& ev : trace) out += ev.to_json().dump() + "\n";
    return out;
}

} // namespace

TEST_CASE("spawning with no captures leaves the rest of the store alone") {
    Store s;
    ExprPtr body = make_expr(ReceiveExpr{});
    auto res = spawn_actor(s, body, {});
    REQUIRE(std::holds_alternative<SpawnOk>(res));
    const auto& ok = std::get<SpawnOk>(res);
    CHECK(ok.child == 0);
    CHECK(ok.store.vars.empty());
    CHECK(ok.store.heap.empty());
    CHECK(ok.store.actors.at(ok.child).queue.empty());
    CHECK(ok.store.actors.at(ok.child).runnable());
}

TEST_CASE("spawn capture of a lent reference is rejected") {
    RunResult r = run_text("class File() { ? method close() -> ? { unit } }\n"
                           "main { let lent h = new File(); spawn { h.close() } }");
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(faulted_with(r.outcome, 0, FaultKind::CapabilityViolation));
    CHECK(r.outcome.exit_code() == 2);
}

TEST_CASE("spawn capture moves the graph away from the parent") {
    RunResult r = run_text("class File() { ? method close() -> ? { unit } }\n"
                           "main { let ? h = new File(); spawn { h.close() }; h.close() }");
    // The child closes its captured handle; the parent's own binding was
    // erred by the capture and its later use faults.
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(faulted_with(r.outcome, 0, FaultKind::UninitializedUse));
    CHECK(std::holds_alternative<StatusDone>(actor(r.outcome, 1).status));
}

TEST_CASE("sending a movable object moves it and enqueues the original value") {
    Store s;
    alloc_in(s, ObjectRecord{"File", {}});
    bind_fresh_in(s, "x", mloc(0));
    ActorState target;
    target.id = 0;
    target.expr = make_expr(ReceiveExpr{});
    s.actors.emplace(0, target);
    s.next_actor = 1;

    auto res = deliver_send(s, Value::actor(0), mloc(0), {});
    REQUIRE(std::holds_alternative<Store>(res));
    const Store& out = std::get<Store>(res);
    CHECK(out.actors.at(0).queue.back() == mloc(0));
    CHECK(out.vars.at("x#0") == Value::err(Permission::Movable));
}

TEST_CASE("sending a lent reference is rejected by the runtime") {
    Store s;
    alloc_in(s, ObjectRecord{"File", {}});
    ActorState target;
    target.id = 0;
    target.expr = make_expr(ReceiveExpr{});
    s.actors.emplace(0, target);

    auto res = deliver_send(s, Value::actor(0), uloc(0), {});
    REQUIRE(std::holds_alternative<Fault>(res));
    CHECK(std::get<Fault>(res).kind == FaultKind::CapabilityViolation);
}

TEST_CASE("sending unit changes nothing but the queue") {
    Store s;
    ActorState target;
    target.id = 0;
    target.expr = make_expr(ReceiveExpr{});
    s.actors.emplace(0, target);
    auto res = deliver_send(s, Value::actor(0), Value::unit(), {});
    REQUIRE(std::holds_alternative<Store>(res));
    const Store& out = std::get<Store>(res);
    CHECK(out.actors.at(0).queue.size() == 1);
    CHECK(out.vars == s.vars);
    CHECK(out.heap == s.heap);
}

TEST_CASE("send faults on non-actor and uninitialised targets") {
    Store s;
    auto r1 = deliver_send(s, Value::unit(), Value::unit(), {});
    REQUIRE(std::holds_alternative<Fault>(r1));
    CHECK(std::get<Fault>(r1).kind == FaultKind::NotAnActor);
    auto r2 = deliver_send(s, Value::err(Permission::Movable), Value::unit(), {});
    REQUIRE(std::holds_alternative<Fault>(r2));
    CHECK(std::get<Fault>(r2).kind == FaultKind::UninitializedUse);
}

TEST_CASE("sending to a finished actor is allowed and harmless") {
    RunResult r = run_text("main { let ? c = spawn { unit }; send(c, unit) }");
    CHECK(r.outcome.termination == Termination::AllDone);
    CHECK(r.outcome.final_store.actors.at(1).queue.size() == 1);
    CHECK(r.outcome.exit_code() == 0);
}

TEST_CASE("a send wakes a blocked receiver") {
    Store s;
    ActorState target;
    target.id = 3;
    target.expr = make_expr(ReceiveExpr{});
    target.status = StatusBlocked{};
    s.actors.emplace(3, target);
    auto res = deliver_send(s, Value::actor(3), Value::unit(), {});
    REQUIRE(std::holds_alternative<Store>(res));
    CHECK(std::get<Store>(res).actors.at(3).runnable());
}

TEST_CASE("receive dequeues the head of the queue") {
    ActorState a;
    a.id = 0;
    a.expr = make_expr(ReceiveExpr{});
    a.queue.push_back(Value::actor(1));
    a.queue.push_back(Value::actor(2));

    auto res = try_receive(a);
    auto* pair = std::get_if<std::pair<ActorState, Value>>(&res);
    REQUIRE(pair != nullptr);
    CHECK(pair->second == Value::actor(1));
    REQUIRE(pair->first.queue.size() == 1);
    CHECK(pair->first.queue.front() == Value::actor(2));
    CHECK(pair->first.expr->get_if<ValExpr>()->value == Value::actor(1));
}

TEST_CASE("receive blocks on an empty queue") {
    ActorState a;
    a.id = 0;
    a.expr = make_expr(ReceiveExpr{});
    CHECK(std::holds_alternative<ReceiveBlocked>(try_receive(a)));
}

TEST_CASE("a program whose main is a value finishes in zero steps") {
    RunResult r = run_text("main { unit }");
    CHECK(r.outcome.termination == Termination::AllDone);
    CHECK(r.outcome.steps == 0);
    CHECK(r.trace.empty());
    CHECK(r.outcome.exit_code() == 0);
}

TEST_CASE("round robin alternates between runnable actors") {
    // Both actors spin through several pure steps.
    RunResult r = run_text(
        "main { let ? a = spawn { let x = unit; let y = unit; let z = unit; unit }; "
        "let x = unit; let y = unit; let z = unit; unit }");
    CHECK(r.outcome.termination == Termination::AllDone);
    std::set<ActorId> seen;
    bool alternated = false;
    for (std::size_t i = 1; i < r.trace.size(); ++i) {
        seen.insert(r.trace[i].actor);
        if (r.trace[i].actor != r.trace[i - 1].actor) alternated = true;
    }
    CHECK(seen.size() == 2);
    CHECK(alternated);
}

TEST_CASE("a lone receive deadlocks") {
    RunResult r = run_text("main { receive }");
    CHECK(r.outcome.termination == Termination::Deadlock);
    CHECK(r.outcome.steps == 1); // the single Block step
    CHECK(r.trace.back().rule == "Block");
    CHECK(actor(r.outcome, 0).blocked());
    CHECK(r.outcome.exit_code() == 4);
}

TEST_CASE("the moved corpus program faults the sender at the post-send use") {
    RunResult r = run_program(load_corpus("moved_filehandle.gcap"), {});
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(faulted_with(r.outcome, 0, FaultKind::UninitializedUse));
    CHECK(std::holds_alternative<StatusDone>(actor(r.outcome, 1).status));
    CHECK(r.outcome.exit_code() == 3);
}

TEST_CASE("the lent corpus program faults the sender at the send") {
    RunResult r = run_program(load_corpus("lent_send.gcap"), {});
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(faulted_with(r.outcome, 0, FaultKind::CapabilityViolation));
    CHECK(r.outcome.exit_code() == 2);
    // The fault event sits at the send redex.
    CHECK(r.trace.back().rule == "Fault");
    CHECK(r.trace.back().redex.find("send") != std::string::npos);
}

TEST_CASE("the borrowed-field corpus program faults only the receiver") {
    RunResult r = run_program(load_corpus("borrowed_field.gcap"), {});
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(std::holds_alternative<StatusDone>(actor(r.outcome, 0).status));
    CHECK(faulted_with(r.outcome, 1, FaultKind::UninitializedUse));

    bool sent = false, shared_read = false;
    for (const auto& ev : r.trace) {
        if (ev.actor == 0 && ev.rule == "E-Send") sent = true;
        if (ev.actor == 1 && ev.rule == "E-FieldAccess" && ev.redex.find(".shared") != std::string::npos)
            shared_read = true;
    }
    CHECK(sent);
    CHECK(shared_read);
}

TEST_CASE("fail-fast stops the run at the first fault") {
    RunConfig cfg;
    cfg.fail_fast = true;
    RunResult r = run_program(load_corpus("lent_send.gcap"), cfg);
    CHECK(r.outcome.termination == Termination::FaultStop);
    CHECK(r.trace.back().rule == "Fault");
}

TEST_CASE("the step limit is reported") {
    RunConfig cfg;
    cfg.max_steps = 3;
    RunResult r = run_program(load_corpus("fifo_pair.gcap"), cfg);
    CHECK(r.outcome.termination == Termination::StepLimit);
    CHECK(r.outcome.steps == 3);
    CHECK(r.outcome.exit_code() == 5);
}

TEST_CASE("messages from one sender arrive in send order") {
    RunResult r = run_program(load_corpus("fifo_pair.gcap"), {});
    CHECK(r.outcome.termination == Termination::AllDone);
    // Find the Box record and check the field classes.
    const Store& s = r.outcome.final_store;
    for (const auto& [loc, rec] : s.heap) {
        if (rec.cls != "Box") continue;
        REQUIRE(rec.fields[0].is_loc());
        REQUIRE(rec.fields[1].is_loc());
        CHECK(s.heap.at(rec.fields[0].as_loc()->loc).cls == "A");
        CHECK(s.heap.at(rec.fields[1].as_loc()->loc).cls == "B");
    }
}

TEST_CASE("the literal queue mode dequeues in reverse order") {
    RunConfig cfg;
    cfg.literal_lifo = true;
    RunResult r = run_program(load_corpus("fifo_pair.gcap"), cfg);
    CHECK(r.outcome.termination == Termination::AllDone);
    const Store& s = r.outcome.final_store;
    bool checked = false;
    for (const auto& [loc, rec] : s.heap) {
        if (rec.cls != "Box") continue;
        // Both messages were already queued when the receiver started, so
        // the stack discipline hands them over newest first.
        CHECK(s.heap.at(rec.fields[0].as_loc()->loc).cls == "B");
        CHECK(s.heap.at(rec.fields[1].as_loc()->loc).cls == "A");
        checked = true;
    }
    CHECK(checked);
}

TEST_CASE("seeded random runs are reproducible") {
    Program p = load_corpus("fifo_pair.gcap");
    RunConfig cfg;
    cfg.policy = SchedulerPolicy::seeded(42);
    RunResult a = run_program(p, cfg);
    RunResult b = run_program(p, cfg);
    CHECK(trace_string(a.trace) == trace_string(b.trace));
    CHECK(outcome_to_json(a.outcome) == outcome_to_json(b.outcome));
    // A different seed is allowed to schedule differently but must still
    // reach the same quiescent classification for this program.
    cfg.policy = SchedulerPolicy::seeded(7);
    RunResult c = run_program(p, cfg);
    CHECK(c.outcome.termination == Termination::AllDone);
}

TEST_CASE("round-robin runs are bit-identical across repetitions") {
    Program p = load_corpus("moved_filehandle.gcap");
    RunResult a = run_program(p, {});
    RunResult b = run_program(p, {});
    CHECK(trace_string(a.trace) == trace_string(b.trace));
    CHECK(outcome_to_json(a.outcome).dump() == outcome_to_json(b.outcome).dump());
}

TEST_CASE("the lowest-numbered applicable exit code wins across actors") {
    // c1 takes the handle and closes it; c2 captured the already-erred
    // binding and faults uninitialized-use; main then faults with a
    // capability violation. 2 beats 3.
    RunResult r = run_text(
        "class File() { ? method close() -> ? { unit } }\n"
        "main {\n"
        "  let ? h = new File();\n"
        "  let ? c1 = spawn { h.close() };\n"
        "  let ? c2 = spawn { h.close() };\n"
        "  let lent g = new File();\n"
        "  send(c2, g)\n"
        "}");
    CHECK(std::holds_alternative<StatusDone>(actor(r.outcome, 1).status));
    CHECK(faulted_with(r.outcome, 2, FaultKind::UninitializedUse));
    CHECK(faulted_with(r.outcome, 0, FaultKind::CapabilityViolation));
    CHECK(r.outcome.exit_code() == 2);
}

TEST_CASE("a blocked actor classifies the run as deadlock even beside a fault") {
    RunResult r = run_text(
        "class File() { ? method close() -> ? { unit } }\n"
        "main { let ? c = spawn { receive }; let lent g = new File(); send(c, g) }");
    CHECK(r.outcome.termination == Termination::Deadlock);
    CHECK(faulted_with(r.outcome, 0, FaultKind::CapabilityViolation));
    CHECK(actor(r.outcome, 1).blocked());
    // The fault code still wins over the deadlock code.
    CHECK(r.outcome.exit_code() == 2);
}

TEST_CASE("exploration of a deterministic program yields one summary") {
    ExploreResult r = explore_exhaustive(parse_program("main { let x = unit; x }"), 100);
    CHECK(r.summaries.size() == 1);
    CHECK(r.paths == 1);
    CHECK(!r.truncated);
    CHECK(r.summaries.begin()->termination == Termination::AllDone);
}

TEST_CASE("every interleaving of the lent corpus program is rejected") {
    ExploreResult r = explore_exhaustive(load_corpus("lent_send.gcap"), 200);
    CHECK(!r.truncated);
    CHECK(r.paths >= 1);
    for (const auto& s : r.summaries) {
        CHECK(s.termination == Termination::FaultStop);
        CHECK(s.actor_status[0].second == "faulted(capability-violation)");
    }
    CHECK(explore_exit_code(r) == 2);
}

TEST_CASE("a two-sender race shows at least two distinct outcomes") {
    // Hand-enumerated: the receiver finishes holding an A or a B depending
    // on which sender's message arrives first, and the unread message left
    // in its queue differs accordingly. Exactly these two end states exist
    // modulo renaming.
    Program p = parse_program(
        "class A() {} class B() {}\n"
        "main {\n"
        "  let ? r = spawn { receive };\n"
        "  let ? s = spawn { send(r, new B()) };\n"
        "  send(r, new A())\n"
        "}");
    REQUIRE(validate_program(p).empty());
    ExploreResult r = explore_exhaustive(p, 400);
    CHECK(!r.truncated);
    CHECK(r.summaries.size() == 2);
    for (const auto& s : r.summaries) CHECK(s.termination == Termination::AllDone);
}

TEST_CASE("exploration respects the node budget") {
    ExploreResult r = explore_exhaustive(load_corpus("moved_filehandle.gcap"), 200, 5);
    CHECK(r.truncated);
    CHECK(r.nodes <= 6);
}

TEST_CASE("the move postcondition holds for every move in a corpus run") {
    std::size_t moves = 0;
    RunConfig cfg;
    cfg.on_move = [&](const Store& before, const Store& after, const Value& root) {
        ++moves;
        CHECK(check_move_postcondition(before, after, root));
    };
    for (const char* name : {"moved_filehandle.gcap", "borrowed_field.gcap", "fifo_pair.gcap",
                             "spawn_reply.gcap"}) {
        CAPTURE(name);
        run_program(load_corpus(name), cfg);
    }
    CHECK(moves >= 4);
}

TEST_CASE("the postcondition checker rejects a mutant that keeps variables") {
    Store s;
    alloc_in(s, ObjectRecord{"File", {}});
    bind_fresh_in(s, "x", mloc(0));
    auto good = apply_capability(s, Capability::Moved, mloc(0));
    REQUIRE(good.has_value());
    CHECK(check_move_postcondition(s, *good, mloc(0)));

    auto mutant = gradcap::testing::apply_moved_mutant_no_var_erase(s, mloc(0));
    REQUIRE(mutant.has_value());
    CHECK(!check_move_postcondition(s, *mutant, mloc(0)));
}

TEST_CASE("the postcondition checker rejects touched actor state") {
    Store s;
    alloc_in(s, ObjectRecord{"File", {}});
    ActorState a;
    a.id = 0;
    a.expr = make_expr(ReceiveExpr{});
    s.actors.emplace(0, a);
    auto good = apply_capability(s, Capability::Moved, mloc(0));
    REQUIRE(good.has_value());
    Store tampered = *good;
    tampered.actors.at(0).queue.push_back(Value::unit());
    CHECK(!check_move_postcondition(s, tampered, mloc(0)));
}

TEST_CASE("randomized moves always satisfy the postcondition") {
    using namespace gradcap::testing;
    for (std::uint64_t seed = 0; seed < 300; ++seed) {
        CAPTURE(seed);
        GenRng rng(seed + 99);
        Store s = random_heap(rng);
        Value q = Value::loc(Permission::Movable, Location{rng.below(s.heap.size())});
        auto out = apply_capability(s, Capability::Moved, q);
        REQUIRE(out.has_value());
        CHECK(check_move_postcondition(s, *out, q));
    }
}

TEST_CASE("actor closures stay disjoint after every step of every corpus program") {
    for (const char* name : {"moved_filehandle.gcap", "lent_send.gcap", "borrowed_field.gcap",
                             "hello_unit.gcap", "deadlock_receive.gcap", "spawn_reply.gcap",
                             "fifo_pair.gcap", "lent_local_ok.gcap"}) {
        CAPTURE(name);
        Machine m(load_corpus(name), {});
        std::uint64_t rng = 0;
        CHECK(check_actor_isolation(m.store()));
        while (auto choice = m.pick(rng)) {
            m.step_actor(*choice);
            CHECK(check_actor_isolation(m.store()));
        }
    }
}

TEST_CASE("actor isolation detects shared reachable state") {
    Store s;
    alloc_in(s, ObjectRecord{"File", {}});
    ActorState a0;
    a0.id = 0;
    a0.expr = make_value_expr(mloc(0));
    a0.status = StatusRunnable{}; // embedded value keeps the location live
    ActorState a1;
    a1.id = 1;
    a1.expr = make_expr(ReceiveExpr{});
    a1.queue.push_back(mloc(0));
    s.actors.emplace(0, a0);
    s.actors.emplace(1, a1);
    CHECK(!check_actor_isolation(s));
    // Disjoint roots pass.
    Store t;
    alloc_in(t, ObjectRecord{"File", {}});
    alloc_in(t, ObjectRecord{"File", {}});
    ActorState b0 = a0;
    ActorState b1 = a1;
    b1.queue.clear();
    b1.queue.push_back(mloc(1));
    t.actors.emplace(0, b0);
    t.actors.emplace(1, b1);
    CHECK(check_actor_isolation(t));
}

TEST_CASE("store invariants hold after every step of a corpus run") {
    for (const char* name : {"moved_filehandle.gcap", "borrowed_field.gcap", "fifo_pair.gcap"}) {
        CAPTURE(name);
        Machine m(load_corpus(name), {});
        std::uint64_t rng = 0;
        CHECK(store_invariants_ok(m.store()));
        while (auto choice = m.pick(rng)) {
            m.step_actor(*choice);
            CHECK(store_invariants_ok(m.store()));
        }
    }
}

TEST_CASE("the invariant checker notices dangling locations and bad blocks") {
    Store s;
    bind_fresh_in(s, "x", mloc(99)); // no such heap location
    CHECK(!store_invariants_ok(s));

    Store t;
    ActorState a;
    a.id = 0;
    a.expr = make_expr(ReceiveExpr{});
    a.status = StatusBlocked{};
    a.queue.push_back(Value::unit()); // blocked actors must have empty queues
    t.actors.emplace(0, a);
    CHECK(!store_invariants_ok(t));
}

TEST_CASE("equivalent end states hash equal under renaming") {
    auto build = [](std::uint64_t skip_locs, std::uint64_t skip_vars) {
        Store s;
        for (std::uint64_t i = 0; i < skip_locs; ++i) alloc_in(s, ObjectRecord{"Junk", {}});
        s.next_fresh = skip_vars;
        Location l = alloc_in(s, ObjectRecord{"File", {}});
        std::string x = bind_fresh_in(s, "x", Value::loc(Permission::Movable, l));
        ActorState a;
        a.id = 0;
        a.expr = make_expr(CallExpr{make_expr(VarExpr{x}), "close", {}});
        s.actors.emplace(0, a);
        // The junk objects are unreachable from the actor and do not count.
        return s;
    };
    CHECK(canonical_state_hash(build(0, 0)) == canonical_state_hash(build(3, 7)));
    // Different observable content hashes differently.
    Store other = build(0, 0);
    other.actors.at(0).queue.push_back(Value::unit());
    CHECK(canonical_state_hash(other) != canonical_state_hash(build(0, 0)));
}

TEST_CASE("erasing annotations preserves fault-free round-robin behaviour") {
    for (const char* name :
         {"hello_unit.gcap", "spawn_reply.gcap", "fifo_pair.gcap", "lent_local_ok.gcap"}) {
        CAPTURE(name);
        Program p = load_corpus(name);
        RunResult orig = run_program(p, {});
        REQUIRE(orig.outcome.termination == Termination::AllDone);
        RunResult erased = run_program(erase_capabilities(p), {});
        CHECK(erased.outcome.termination == Termination::AllDone);
        CHECK(trace_skeleton(orig.trace) == trace_skeleton(erased.trace));
        for (const auto& [id, a] : orig.outcome.final_store.actors)
            CHECK(status_name(erased.outcome.final_store.actors.at(id).status) ==
                  status_name(a.status));
    }
}

TEST_CASE("random programs run to a classified end under every policy") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CAPTURE(seed);
        Program p = gradcap::testing::random_program(seed);
        for (std::uint64_t s : {0ull, 1ull}) {
            RunConfig cfg;
            cfg.policy = SchedulerPolicy::seeded(seed * 2 + s);
            cfg.max_steps = 200;
            RunResult r = run_program(p, cfg);
            CHECK(store_invariants_ok(r.outcome.final_store));
            if (r.outcome.termination == Termination::Deadlock) {
                bool any_blocked = false;
                for (const auto& [id, a] : r.outcome.final_store.actors)
                    any_blocked |= a.blocked();
                CHECK(any_blocked);
            }
        }
    }
}

TEST_CASE("randomized fault-free programs survive erasure") {
    std::size_t completed = 0;
    for (std::uint64_t seed = 0; seed < 60; ++seed) {
        CAPTURE(seed);
        Program p = gradcap::testing::random_program(seed);
        RunConfig cfg;
        cfg.max_steps = 300;
        RunResult orig = run_program(p, cfg);
        if (orig.outcome.termination != Termination::AllDone) continue;
        ++completed;
        RunResult erased = run_program(erase_capabilities(p), cfg);
        CHECK(erased.outcome.termination == Termination::AllDone);
        CHECK(trace_skeleton(orig.trace) == trace_skeleton(erased.trace));
    }
    CHECK(completed >= 10); // the generator must produce enough clean programs
}
