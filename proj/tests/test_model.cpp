#include <random>

#include "catch_amalgamated.hpp"
#include "support.hpp"

using namespace mcenet;

TEST_CASE("parses variables, conditionals and marginal cells") {
    auto m = parse_model("# comment\n\nvars A B C\nP(A|B,~C)=0.7   # trailing\nP(A,~C)=0.25\n");
    REQUIRE(m.names() == std::vector<std::string>{"A", "B", "C"});
    REQUIRE(m.constraints.size() == 2);
    REQUIRE(m.constraints.conditional_count() == 1);
    REQUIRE(m.constraints.marginal_count() == 1);

    const auto& cc = std::get<ConditionalConstraint>(m.constraints[0]);
    CHECK(cc.target == Literal{0, true});
    CHECK(cc.condition == std::vector<Literal>{{1, true}, {2, false}});
    CHECK(cc.value == 0.7);

    const auto& mc = std::get<MarginalConstraint>(m.constraints[1]);
    CHECK(mc.literals == std::vector<Literal>{{0, true}, {2, false}});
    CHECK(mc.value == 0.25);
}

TEST_CASE("negated conditional target is stored as the complement") {
    auto m = parse_model("vars A B\nP(~A|B)=0.3\n");
    const auto& cc = std::get<ConditionalConstraint>(m.constraints[0]);
    CHECK(cc.target.positive);
    CHECK(cc.value == Catch::Approx(0.7).epsilon(1e-15));
}

TEST_CASE("parse errors carry line and column") {
    auto fails_at = [](const char* text, std::size_t line, std::size_t column) {
        try {
            parse_model(text);
        } catch (const ParseError& e) {
            CHECK(e.line() == line);
            CHECK(e.column() == column);
            return;
        }
        FAIL("expected a parse error for: " << text);
    };
    fails_at("P(A)=0.5\n", 1, 1);                       // missing vars line
    fails_at("vars A B\nP(A|Z)=0.5\n", 2, 5);           // undeclared variable
    fails_at("vars A B\nP(A|B,B)=0.5\n", 2, 7);         // duplicate in scope
    fails_at("vars A B\nP(A|~A)=0.5\n", 2, 6);          // target in its own condition
    fails_at("vars A B\nP(A|B)=1.5\n", 2, 8);           // value outside [0, 1]
    fails_at("vars A B\nP(A|B)=0.5\nP(A|B)=0.6\n", 3, 1);  // duplicate cell
    fails_at("vars A A\n", 1, 8);                       // duplicate variable
    CHECK_THROWS_AS(parse_model(""), ParseError);
    CHECK_THROWS_AS(parse_model("vars A\nP(A)=0.5 extra\n"), ParseError);
    CHECK_THROWS_AS(parse_model("vars A B\nP(A,B|A)=0.5\n"), ParseError);
}

TEST_CASE("duplicate cell detection ignores literal order") {
    CHECK_THROWS_AS(parse_model("vars A B C\nP(A|B,C)=0.5\nP(A|C,B)=0.4\n"), ParseError);
    CHECK_THROWS_AS(parse_model("vars A B\nP(A,~B)=0.5\nP(~B,A)=0.4\n"), ParseError);
    CHECK_NOTHROW(parse_model("vars A B\nP(A|B)=0.5\nP(A|~B)=0.4\n"));
}

TEST_CASE("serialize and parse round trip") {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 100; ++trial) {
        std::size_t n = 3 + trial % 4;
        auto m = testing::random_window_model(n, rng, trial % 2 == 0);
        auto again = parse_model(serialize_model(m));
        REQUIRE(again == m);
    }
    auto mining = testing::load_model("mining.cn");
    CHECK(parse_model(serialize_model(mining)) == mining);
}

TEST_CASE("constraint text") {
    auto m = testing::load_model("mining.cn");
    CHECK(constraint_text(m.constraints[0], m.variables) == "P(A)=0.2");
    CHECK(constraint_text(m.constraints[3], m.variables) == "P(C|~A,D)=0.2");
    CHECK(constraint_label(m.constraints[9], m.variables) == "P(D|~B,~C)");
}

TEST_CASE("belief network arcs follow conditionals and may form cycles") {
    auto m = testing::load_model("mining.cn");
    auto net = build_network(m);
    std::set<std::pair<std::size_t, std::size_t>> want{{0, 2}, {3, 2}, {1, 3}, {2, 3}};
    CHECK(net.arcs == want);
    CHECK(net.children(2) == std::vector<std::size_t>{3});

    auto fig = testing::load_model("two-link-cycle.cn");
    auto cyc = build_network(fig);
    CHECK(cyc.arcs == std::set<std::pair<std::size_t, std::size_t>>{{0, 1}, {1, 0}});
}

TEST_CASE("neighbor graph of the mining model has five edges") {
    auto g = neighbor_graph(testing::load_model("mining.cn"));
    std::set<std::pair<std::size_t, std::size_t>> want{{0, 2}, {0, 3}, {2, 3}, {1, 2}, {1, 3}};
    CHECK(g.edges == want);
    CHECK_FALSE(g.adjacent(0, 1));
    CHECK(g.neighbors(2) == std::vector<std::size_t>{0, 1, 3});
}

TEST_CASE("scope rule warns about marginals outside conditional scopes") {
    CHECK(validate_scope_rule(testing::load_model("mining.cn")).empty());
    auto m = parse_model("vars A B C\nP(A|B)=0.5\nP(C)=0.3\nP(A,B)=0.2\n");
    auto w = validate_scope_rule(m);
    REQUIRE(w.size() == 1);
    CHECK(w[0].constraint == 1);
}

TEST_CASE("bundled models parse") {
    for (const char* f : {"two-link-cycle.cn", "mining.cn", "inconsistent-quad.cn", "two-clique-contradiction.cn"})
        CHECK_NOTHROW(testing::load_model(f));
}
