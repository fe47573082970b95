#include <doctest.h>

#include "gradcap/store.hpp"

#include "../support/oracles.hpp"

using namespace gradcap;
using gradcap::testing::GenRng;

namespace {

Value mloc(std::uint64_t id) { return Value::loc(Permission::Movable, Location{id}); }
Value uloc(std::uint64_t id) { return Value::loc(Permission::Unmov, Location{id}); }

Store heap_of(std::vector<ObjectRecord> records) {
    Store s;
    for (auto& r : records) alloc_in(s, std::move(r));
    return s;
}

} // namespace

TEST_CASE("cast implements all four clauses") {
    // lent on movable demotes the permission
    CHECK(cast(Capability::Lent, mloc(1)) == uloc(1));
    // dynamic cast is the identity
    CHECK(cast(Capability::Dyn, uloc(1)) == uloc(1));
    // moved on unmov is undefined
    CHECK(!cast(Capability::Moved, uloc(1)).has_value());
    // the fall-through clause leaves non-locations alone
    CHECK(cast(Capability::Moved, Value::unit()) == Value::unit());
}

TEST_CASE("cast fall-through covers every remaining pair") {
    CHECK(cast(Capability::Moved, mloc(7)) == mloc(7));
    CHECK(cast(Capability::Lent, uloc(7)) == uloc(7));
    CHECK(cast(Capability::Dyn, mloc(7)) == mloc(7));
    for (Capability k : {Capability::Dyn, Capability::Moved, Capability::Lent}) {
        CHECK(cast(k, Value::unit()) == Value::unit());
        CHECK(cast(k, Value::actor(3)) == Value::actor(3));
        CHECK(cast(k, Value::err(Permission::Movable)) == Value::err(Permission::Movable));
        CHECK(cast(k, Value::err(Permission::Unmov)) == Value::err(Permission::Unmov));
    }
}

TEST_CASE("cast is idempotent on every defined case") {
    std::vector<Value> values{Value::unit(),          Value::actor(0),
                              mloc(0),                uloc(0),
                              Value::err(Permission::Movable), Value::err(Permission::Unmov)};
    for (Capability k : {Capability::Dyn, Capability::Moved, Capability::Lent}) {
        for (const Value& v : values) {
            auto once = cast(k, v);
            if (!once) continue;
            auto twice = cast(k, *once);
            REQUIRE(twice.has_value());
            CHECK(*twice == *once);
        }
    }
}

TEST_CASE("cast never promotes unmov to movable") {
    for (Capability k : {Capability::Dyn, Capability::Moved, Capability::Lent}) {
        auto out = cast(k, uloc(5));
        if (out) CHECK(out->as_loc()->perm == Permission::Unmov);
    }
}

TEST_CASE("movable graphs follow movable edges only") {
    Store s = heap_of({{"C", {mloc(1)}}, {"D", {}}});
    CHECK(movable_rog(s, mloc(0)) == std::set<Location>{Location{0}, Location{1}});
    CHECK(movable_rog(s, uloc(0)).empty());
    CHECK(movable_rog(s, Value::unit()).empty());
    CHECK(movable_rog(s, Value::actor(1)).empty());
    CHECK(movable_rog(s, Value::err(Permission::Movable)).empty());
}

TEST_CASE("movable graphs terminate on cycles") {
    Store s = heap_of({{"C", {mloc(1)}}, {"C", {mloc(0)}}});
    auto rog = movable_rog(s, mloc(0));
    CHECK(rog == std::set<Location>{Location{0}, Location{1}});
    CHECK(rog == gradcap::testing::rog_oracle(s, mloc(0)));
}

TEST_CASE("movable graphs stop at unmov edges") {
    Store s = heap_of({{"C", {uloc(1)}}, {"D", {}}});
    auto rog = movable_rog(s, mloc(0));
    CHECK(rog == std::set<Location>{Location{0}});
    CHECK(rog == gradcap::testing::rog_oracle(s, mloc(0)));
}

TEST_CASE("movable graphs agree with the brute-force oracle on random heaps") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CAPTURE(seed);
        GenRng rng(seed);
        Store s = gradcap::testing::random_heap(rng);
        Value q = gradcap::testing::random_query(rng, s);
        auto got = movable_rog(s, q);
        CHECK(got == gradcap::testing::rog_oracle(s, q));
        // Always a subset of the heap domain; contains the root iff the
        // query is a movable location.
        for (Location l : got) CHECK(s.heap.contains(l));
        const auto* lq = q.as_loc();
        if (lq && lq->perm == Permission::Movable) {
            CHECK(got.contains(lq->loc));
        } else {
            CHECK(got.empty());
        }
    }
}

TEST_CASE("moving a shared handle errs every variable bound to it") {
    Store s = heap_of({{"File", {}}});
    s.vars["x"] = mloc(0);
    s.vars["y"] = mloc(0);
    auto out = apply_capability(s, Capability::Moved, mloc(0));
    REQUIRE(out.has_value());
    CHECK(out->vars.at("x") == Value::err(Permission::Movable));
    CHECK(out->vars.at("y") == Value::err(Permission::Movable));
    CHECK(out->heap == s.heap);
}

TEST_CASE("moving an object uninitialises its borrowed fields") {
    Store s = heap_of({{"Obj", {uloc(1)}}, {"File", {}}});
    auto out = apply_capability(s, Capability::Moved, mloc(0));
    REQUIRE(out.has_value());
    CHECK(out->heap.at(Location{0}).fields[0] == Value::err(Permission::Unmov));
    CHECK(out->heap.at(Location{1}) == s.heap.at(Location{1}));
}

TEST_CASE("moving an inner object errs outside references to it") {
    Store s = heap_of({{"Holder", {mloc(1)}}, {"File", {}}});
    auto out = apply_capability(s, Capability::Moved, mloc(1));
    REQUIRE(out.has_value());
    CHECK(out->heap.at(Location{0}).fields[0] == Value::err(Permission::Movable));
}

TEST_CASE("non-moved capabilities leave the store alone") {
    Store s = heap_of({{"File", {}}});
    s.vars["x"] = mloc(0);
    auto lent = apply_capability(s, Capability::Lent, mloc(0));
    REQUIRE(lent.has_value());
    CHECK(lent->vars == s.vars);
    CHECK(lent->heap == s.heap);
    auto dyn = apply_capability(s, Capability::Dyn, mloc(0));
    REQUIRE(dyn.has_value());
    CHECK(dyn->vars == s.vars);
}

TEST_CASE("moving an unmov location is undefined") {
    Store s = heap_of({{"File", {}}});
    CHECK(!apply_capability(s, Capability::Moved, uloc(0)).has_value());
    // The in-place variant reports failure and leaves the store untouched.
    Store t = s;
    CHECK(!apply_capability_in(t, Capability::Moved, uloc(0)));
    CHECK(t.heap == s.heap);
}

TEST_CASE("moving unit, actor ids and errs is a no-op") {
    Store s = heap_of({{"File", {}}});
    s.vars["x"] = mloc(0);
    for (const Value& v :
         {Value::unit(), Value::actor(2), Value::err(Permission::Movable)}) {
        auto out = apply_capability(s, Capability::Moved, v);
        REQUIRE(out.has_value());
        CHECK(out->vars == s.vars);
        CHECK(out->heap == s.heap);
    }
}

TEST_CASE("moves preserve the heap domain, classes and actor table") {
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        CAPTURE(seed);
        GenRng rng(seed + 5000);
        Store s = gradcap::testing::random_heap(rng);
        Value q = Value::loc(Permission::Movable, Location{rng.below(s.heap.size())});
        auto out = apply_capability(s, Capability::Moved, q);
        REQUIRE(out.has_value());
        REQUIRE(out->heap.size() == s.heap.size());
        for (const auto& [loc, rec] : out->heap) {
            const ObjectRecord& old = s.heap.at(loc);
            CHECK(rec.cls == old.cls);
            REQUIRE(rec.fields.size() == old.fields.size());
            for (std::size_t i = 0; i < rec.fields.size(); ++i) {
                if (!(rec.fields[i] == old.fields[i])) {
                    CHECK(rec.fields[i].is_err());
                    CHECK(rec.fields[i].as_err()->perm == old.fields[i].as_loc()->perm);
                }
            }
        }
        // And the result agrees with the independent full-scan oracle.
        auto oracle = gradcap::testing::apply_moved_oracle(s, q);
        REQUIRE(oracle.has_value());
        CHECK(out->vars == oracle->vars);
        CHECK(out->heap == oracle->heap);
    }
}

TEST_CASE("allocation is sequential and never reuses locations") {
    Store s;
    auto [s1, l1] = alloc(s, ObjectRecord{"File", {}});
    CHECK(l1 == Location{0});
    auto [s2, l2] = alloc(s1, ObjectRecord{"File", {}});
    CHECK(l2 == Location{1});
    CHECK(l1 != l2);
    CHECK(s2.heap.at(l1).cls == "File");
    CHECK(s2.heap.at(l2).cls == "File");
}

TEST_CASE("fresh bindings are distinct and use a source-illegal separator") {
    Store s;
    auto [s1, n1] = bind_fresh(s, "x", Value::unit());
    auto [s2, n2] = bind_fresh(s1, "x", Value::actor(1));
    CHECK(n1 != n2);
    CHECK(n1.find('#') != std::string::npos);
    CHECK(s2.vars.at(n1) == Value::unit());
    CHECK(s2.vars.at(n2) == Value::actor(1));
}

TEST_CASE("store snapshots are canonical and stable") {
    auto build = [] {
        Store s;
        alloc_in(s, ObjectRecord{"B", {Value::unit()}});
        alloc_in(s, ObjectRecord{"A", {mloc(0), Value::err(Permission::Unmov)}});
        bind_fresh_in(s, "x", mloc(1));
        ActorState a;
        a.id = 0;
        a.queue.push_back(Value::actor(1));
        a.expr = make_value_expr(Value::unit());
        a.status = StatusDone{Value::unit()};
        s.actors.emplace(0, a);
        return s;
    };
    nlohmann::json j1 = store_to_json(build());
    nlohmann::json j2 = store_to_json(build());
    CHECK(j1 == j2);
    CHECK(j1.dump() == j2.dump());
    // Heap serializes as [id, record] pairs with integer locations.
    REQUIRE(j1.at("heap").is_array());
    CHECK(j1.at("heap")[0][0] == 0);
    CHECK(j1.at("heap")[1][0] == 1);
    CHECK(j1.at("heap")[1][1].at("class") == "A");
    CHECK(j1.at("vars").is_object());
    CHECK(j1.at("actors")[0][0] == 0);
}
