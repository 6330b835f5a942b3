#include <random>

#include "catch_amalgamated.hpp"
#include "support.hpp"

using namespace mcenet;
using testing::make_vars;

TEST_CASE("state bits put the last scope variable in the least significant position") {
    auto vars = make_vars(3);
    JointTable t(vars, {0, 1, 2, 3, 4, 5, 6, 7});
    CHECK(t.bit(0) == 2);
    CHECK(t.bit(2) == 0);
    CHECK(t.value_of(4, 0));
    CHECK_FALSE(t.value_of(4, 2));
    CHECK(state_bits(6, 3) == "110");
    CHECK_THROWS_AS(t.bit(9), Error);
}

TEST_CASE("table construction checks") {
    CHECK_THROWS_AS(JointTable(make_vars(2), {0.5, 0.5}), Error);
    CHECK_THROWS_AS(uniform(make_vars(kMaxTableVariables + 1)), Error);
    CHECK_THROWS_AS(uniform({}), Error);
    auto u = uniform(make_vars(3));
    CHECK(u.is_normalized());
    CHECK(u[5] == 0.125);
    JointTable z(make_vars(1), {0.0, 0.0});
    CHECK_THROWS_AS(z.normalize(), Error);
}

TEST_CASE("marginalize matches brute-force summation") {
    std::mt19937_64 rng(3);
    auto vars = make_vars(4);
    for (int trial = 0; trial < 50; ++trial) {
        auto t = testing::random_positive_table(vars, rng);
        std::vector<Variable> sub{vars[3], vars[1]};
        auto m = marginalize(t, sub);
        REQUIRE(m.scope() == sub);
        for (std::size_t k = 0; k < 4; ++k) {
            bool d = (k >> 1) & 1U, b = k & 1U;
            double want = 0.0;
            for (std::size_t s = 0; s < t.size(); ++s) {
                if (t.value_of(s, 3) == d && t.value_of(s, 1) == b) want += t[s];
            }
            CHECK(m[k] == Catch::Approx(want).margin(1e-15));
        }
    }
    CHECK_THROWS_AS(marginalize(uniform(make_vars(2)), {Variable{"Z", 7}}), Error);
}

TEST_CASE("event masks enumerate exactly the matching states") {
    std::mt19937_64 rng(5);
    auto t = uniform(make_vars(5));
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<Literal> lits;
        for (VarId v = 0; v < 5; ++v) {
            if (std::bernoulli_distribution(0.4)(rng)) lits.push_back(testing::random_literal(v, rng));
        }
        auto e = event_mask(t, lits);
        std::vector<std::size_t> seen;
        e.for_each_match(t.size(), [&](std::size_t s) { seen.push_back(s); });
        std::vector<std::size_t> want;
        for (std::size_t s = 0; s < t.size(); ++s) {
            if (e.matches(s)) want.push_back(s);
        }
        std::sort(seen.begin(), seen.end());
        CHECK(seen == want);
    }
}

TEST_CASE("contradictory literal sets have probability zero") {
    auto t = uniform(make_vars(2));
    std::vector<Literal> both{{0, true}, {0, false}};
    CHECK(event_probability(t, both) == 0.0);
    std::vector<Literal> given{{1, true}};
    CHECK(conditional(t, std::span<const Literal>(both), std::span<const Literal>(given)) == 0.0);
    CHECK_THROWS_AS(conditional(t, Literal{1, true}, both), Error);
}

TEST_CASE("initial residuals of the two-link cycle") {
    auto m = testing::load_model("two-link-cycle.cn");
    auto r = residuals(uniform(m.variables), m.constraints, m.variables);
    REQUIRE(r.entries.size() == 2);
    CHECK(std::abs(r.universal) <= 1e-12);
    CHECK(std::abs(r.entries[0].magnitude() - 0.2) <= 1e-12);
    CHECK(std::abs(r.entries[1].magnitude() - 0.3) <= 1e-12);
    CHECK(r.entries[0].text == "P(A|B)=0.7");
    CHECK(r.max_magnitude() == Catch::Approx(0.3));
    CHECK(r.entries[0].linear_magnitude() == Catch::Approx(0.1));
}

TEST_CASE("residuals report undefined conditionals and uncovered constraints") {
    auto vars = make_vars(2);
    JointTable t(vars, {0.5, 0.0, 0.5, 0.0});  // B is impossible
    ConstraintSet cs{{ConditionalConstraint{{0, true}, {{1, true}}, 0.5}}};
    auto r = residuals(t, cs, vars);
    CHECK(r.entries[0].undefined);
    CHECK(r.entries[0].magnitude() == 1.0);

    ConstraintSet wide{{MarginalConstraint{{{5, true}}, 0.5}}};
    auto more = make_vars(6);
    CHECK_THROWS_AS(residuals(t, wide, more), Error);
}

namespace {

/// p(g, x, y) proportional to f(x, g) h(y, g) with small integer weights: x and y are
/// independent given g by construction.
JointTable factorized(std::mt19937_64& rng, bool break_it) {
    std::uniform_int_distribution<int> w(1, 9);
    int f[2][2], h[2][2];
    for (auto& row : f) for (auto& x : row) x = w(rng);
    for (auto& row : h) for (auto& x : row) x = w(rng);
    // scope G X Y
    std::vector<double> p(8);
    for (std::size_t s = 0; s < 8; ++s) {
        std::size_t g = (s >> 2) & 1U, x = (s >> 1) & 1U, y = s & 1U;
        p[s] = f[x][g] * h[y][g];
    }
    if (break_it) p[7] += 5.0;
    JointTable t(make_vars(3), p);
    t.normalize();
    return t;
}

}  // namespace

TEST_CASE("conditional independence agrees with an exact factorization oracle") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        CHECK(check_ci(factorized(rng, false), 1, 2, {0}));
    }
    int detected = 0;
    for (int trial = 0; trial < 100; ++trial) detected += check_ci(factorized(rng, true), 1, 2, {0}) ? 0 : 1;
    CHECK(detected == 100);
    CHECK_THROWS_AS(check_ci(uniform(make_vars(3)), 1, 1, {0}), Error);
    CHECK_THROWS_AS(check_ci(uniform(make_vars(3)), 1, 2, {2}), Error);
}

TEST_CASE("Markov property for pairwise potentials on a chain") {
    // p(a, b, c) proportional to phi(a, b) psi(b, c): Markov w.r.t. A - B - C.
    std::mt19937_64 rng(13);
    std::uniform_real_distribution<double> u(0.1, 2.0);
    NeighborGraph chain{make_vars(3), {{0, 1}, {1, 2}}};
    NeighborGraph empty{make_vars(3), {}};
    for (int trial = 0; trial < 20; ++trial) {
        double phi[2][2], psi[2][2];
        for (auto& r : phi) for (auto& x : r) x = u(rng);
        for (auto& r : psi) for (auto& x : r) x = u(rng);
        std::vector<double> p(8);
        for (std::size_t s = 0; s < 8; ++s) p[s] = phi[(s >> 2) & 1U][(s >> 1) & 1U] * psi[(s >> 1) & 1U][s & 1U];
        JointTable t(make_vars(3), p);
        t.normalize();
        CHECK(check_mrf(t, chain));
        CHECK_FALSE(check_mrf(t, empty));
    }
}

TEST_CASE("table serialization") {
    JointTable t(make_vars(2), {0.1, 0.2, 0.3, 0.4});
    CHECK(serialize_table(t) == "scope A B\n00 0.100000\n01 0.200000\n10 0.300000\n11 0.400000\n");
}
