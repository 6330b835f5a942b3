#ifndef MCENET_TESTS_SUPPORT_HPP
#define MCENET_TESTS_SUPPORT_HPP

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mcenet/mcenet.hpp"

namespace testing {

inline std::string read_model_file(const std::string& name) {
    std::ifstream in(std::string(MCENET_MODELS) + "/" + name);
    if (!in) throw std::runtime_error("missing test model " + name);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline mcenet::Model load_model(const std::string& name) { return mcenet::parse_model(read_model_file(name)); }

inline std::vector<mcenet::Variable> make_vars(std::size_t n) {
    std::vector<mcenet::Variable> vars;
    for (std::size_t i = 0; i < n; ++i) vars.push_back({std::string(1, static_cast<char>('A' + i)), i});
    return vars;
}

inline mcenet::JointTable random_positive_table(std::vector<mcenet::Variable> scope, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    std::vector<double> p(std::size_t{1} << scope.size());
    for (auto& x : p) x = u(rng);
    mcenet::JointTable t(std::move(scope), std::move(p));
    t.normalize();
    return t;
}

/// Value of P(target | condition) or P(cell) under `t`, used to build consistent constraints.
inline double value_under(const mcenet::JointTable& t, const mcenet::Constraint& c) {
    return mcenet::constraint_residual(t, c).current;
}

/// Random literal over `var`.
inline mcenet::Literal random_literal(mcenet::VarId var, std::mt19937_64& rng) {
    return {var, std::bernoulli_distribution(0.5)(rng)};
}

/// Chain of 3-variable windows over n variables: cells of P(x_{i+2} | x_i, x_{i+1}) plus a few
/// single-variable marginals. With `from_joint` every value is read off a random positive joint
/// (consistent); otherwise values are drawn at random, which yields a mix of consistent and
/// inconsistent sets.
inline mcenet::Model random_window_model(std::size_t n, std::mt19937_64& rng, bool from_joint) {
    using namespace mcenet;
    Model m;
    m.variables = make_vars(n);
    auto joint = random_positive_table(m.variables, rng);
    std::uniform_real_distribution<double> value(0.0, 1.0);
    auto assign = [&](auto c) {
        c.value = from_joint ? value_under(joint, c) : value(rng);
        m.constraints.items.emplace_back(c);
    };
    std::uniform_int_distribution<int> cells(1, 4);
    for (std::size_t i = 0; i + 2 < n; ++i) {
        int k = cells(rng);
        std::set<std::vector<Literal>> used;
        for (int c = 0; c < k; ++c) {
            std::vector<Literal> cond{random_literal(i, rng), random_literal(i + 1, rng)};
            if (!used.insert(cond).second) continue;
            assign(ConditionalConstraint{{i + 2, true}, cond, 0.0});
        }
    }
    std::uniform_int_distribution<std::size_t> var(0, n - 1);
    std::set<VarId> marg;
    for (int k = 0; k < 2; ++k) marg.insert(var(rng));
    for (auto v : marg) assign(MarginalConstraint{{random_literal(v, rng)}, 0.0});
    return m;
}

}  // namespace testing

#endif  // MCENET_TESTS_SUPPORT_HPP
