#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>

#include "support.hpp"

using namespace mcenet;

namespace {

// Pinned tolerances.
constexpr double kTwoLinkStateTol = 1.5e-3;
constexpr double kResidualTol = 1e-8;
constexpr double kSumTol = 1e-9;
constexpr double kTwoPassTol = 2e-3;
constexpr double kConvergedTol = 1e-4;
constexpr double kGradientExactTol = 1e-12;
constexpr double kExactTableTol = 5e-3;
constexpr double kCycle5Tol = 7e-3;
constexpr double kSeparatorTol = 1e-3;
constexpr double kIndependenceTol = 1e-6;
constexpr double kClosedFormTol = 1e-8;
constexpr double kFiniteDiffRelTol = 1e-5;
constexpr double kBenchTol = 1e-4;

double max_diff(const JointTable& t, const std::vector<double>& want) {
    double d = 0.0;
    for (std::size_t s = 0; s < t.size(); ++s) d = std::max(d, std::abs(t[s] - want[s]));
    return d;
}

SolverOptions exact_dual() { return {.tolerance = 1e-11, .max_iterations = 5000}; }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), f, v);
    return buf;
}

Outcome two_link_exact() {
    auto m = testing::load_model("two-link-cycle.cn");
    auto t = mce_dual_solve(uniform(m.variables), m.constraints);
    double dev = max_diff(t, {0.2808, 0.1836, 0.1071, 0.4285});
    double res = residuals(t, m.constraints, m.variables).max_magnitude();
    double sum = std::abs(t.sum() - 1.0);
    return {dev <= kTwoLinkStateTol && res <= kResidualTol && sum <= kSumTol,
            "max state dev " + fmt("%.2e", dev) + ", max residual " + fmt("%.2e", res) + ", |sum-1| " +
                fmt("%.2e", sum)};
}

Outcome two_link_successive() {
    auto m = testing::load_model("two-link-cycle.cn");
    auto t = uniform(m.variables);
    for (int round = 0; round < 2; ++round) {
        apply_constraint_in_place(t, m.constraints[0]);
        apply_constraint_in_place(t, m.constraints[1]);
    }
    double two = max_diff(t, {0.2807, 0.1808, 0.1075, 0.4299});
    auto opts = SolverOptions::successive_defaults();
    opts.tolerance = 1e-7;
    opts.max_cycles = 1000;
    auto res = successive_solve(uniform(m.variables), m.constraints, m.variables, opts);
    auto exact = mce_dual_solve(uniform(m.variables), m.constraints);
    double conv = max_diff(res.table, exact.values());
    return {two <= kTwoPassTol && res.converged && conv <= kConvergedTol,
            "two passes dev " + fmt("%.2e", two) + ", converged vs exact " + fmt("%.2e", conv)};
}

Outcome initial_gradients() {
    auto m = testing::load_model("two-link-cycle.cn");
    auto r = residuals(uniform(m.variables), m.constraints, m.variables);
    double d = std::max({std::abs(r.universal), std::abs(r.entries[0].magnitude() - 0.2),
                         std::abs(r.entries[1].magnitude() - 0.3)});
    return {d <= kGradientExactTol, "(" + fmt("%g", r.universal) + ", " + fmt("%g", r.entries[0].magnitude()) + ", " +
                                        fmt("%g", r.entries[1].magnitude()) + ")"};
}

Outcome inconsistency() {
    auto m = testing::load_model("inconsistent-quad.cn");
    auto ls = to_linear(m.constraints, m.variables);
    bool rank_rejects = !rank_test(ls);
    bool lp_rejects = !feasible_distribution(ls).has_value();
    return {rank_rejects && lp_rejects, std::string("rank test ") + (rank_rejects ? "rejects" : "accepts") +
                                            ", feasibility test " + (lp_rejects ? "rejects" : "accepts")};
}

Outcome mining_decomposition() {
    auto m = testing::load_model("mining.cn");
    auto g = neighbor_graph(m);
    EdgeSet want{{0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
    auto d = decompose(m);
    auto cliques = d.cliques;
    std::sort(cliques.begin(), cliques.end());
    bool ok = g.edges == want && d.fill_in.empty() && cliques == std::vector<VertexSet>{{0, 2, 3}, {1, 2, 3}} &&
              d.cost == 16;
    std::string line = decomposition_report(d);
    std::replace(line.begin(), line.end(), '\n', ';');
    return {ok, std::to_string(g.edges.size()) + " edges; " + line};
}

Outcome six_node_decomposition() {
    auto cover = parse_graph_file(testing::read_model_file("six-node-cover.graph"));
    auto gf = parse_graph_file(testing::read_model_file("six-node.graph"));
    auto g = gf.neighbor_graph();
    bool cover_cyclic = !graham_acyclic(cover.hypergraph());
    auto optimum = [](const Decomposition& d) {
        bool ok = d.fill_in.size() == 1 && d.cliques.size() == 4 && d.cost == 32 &&
                  graham_acyclic(Hypergraph{d.nodes, d.cliques});
        for (const auto& c : d.cliques) ok = ok && c.size() == 3;
        return ok;
    };
    bool greedy = optimum(fill_in_greedy(g));
    int anneal_ok = 0;
    const int seeds = 20;
    for (int s = 1; s <= seeds; ++s) anneal_ok += optimum(fill_in_anneal(g, {.seed = static_cast<std::uint64_t>(s)}));
    bool chord_df = optimum(decomposition_with_fill(g, {{*gf.find("D"), *gf.find("F")}}));
    return {cover_cyclic && greedy && anneal_ok == seeds && chord_df,
            std::string("cover ") + (cover_cyclic ? "cyclic" : "acyclic") + ", greedy " + (greedy ? "ok" : "bad") +
                ", anneal " + std::to_string(anneal_ok) + "/" + std::to_string(seeds) + " seeds, D-F fill " +
                (chord_df ? "accepted" : "rejected")};
}

Outcome local_consistency() {
    auto m = testing::load_model("mining.cn");
    bool mining_ok = local_check(m, decompose(m)).consistent;
    auto two = testing::load_model("two-clique-contradiction.cn");
    auto r = local_check(two, decompose(two));
    bool culprit = false;
    if (!r.consistent && r.culprit) {
        auto names = [&](std::size_t i) {
            std::string s;
            for (const auto& v : r.cliques[i]) s += v.name;
            return s;
        };
        std::set<std::string> pair{names(r.culprit->first), names(r.culprit->second)};
        culprit = pair == std::set<std::string>{"AB", "BC"};
    }
    return {mining_ok && culprit, std::string("mining ") + (mining_ok ? "consistent" : "inconsistent") +
                                      ", contradiction culprit " + (culprit ? "{A,B}/{B,C}" : "wrong")};
}

Outcome decomposed_solve() {
    auto m = testing::load_model("mining.cn");
    auto rep = solve_decomposed(m, decompose(m));
    if (rep.snapshots.size() < 5 || rep.cliques.size() != 2) return {false, "fewer than 5 cycles"};
    double exact = std::max(
        max_diff(rep.cliques[0].table, {0.4479, 0.2419, 0.0498, 0.0604, 0.0862, 0.0369, 0.0216, 0.0553}),
        max_diff(rep.cliques[1].table, {0.1857, 0.0464, 0.0474, 0.0203, 0.3484, 0.2323, 0.0239, 0.0954}));
    double c5 = std::max(
        max_diff(rep.snapshots[4][0], {0.444434, 0.244491, 0.049382, 0.061123, 0.088470, 0.035993, 0.022118, 0.053990}),
        max_diff(rep.snapshots[4][1], {0.190041, 0.048267, 0.045553, 0.018225, 0.342863, 0.232217, 0.025946, 0.096887}));
    const auto& j = rep.joins.at(0);
    double sep = max_diff(marginalize(rep.cliques[j.child].table, j.separator),
                          marginalize(rep.cliques[j.parent].table, j.separator).values());
    return {rep.converged && exact <= kExactTableTol && c5 <= kCycle5Tol && sep <= kSeparatorTol,
            std::to_string(rep.cycles) + " cycles, vs exact " + fmt("%.2e", exact) + ", cycle 5 " + fmt("%.2e", c5) +
                ", separator " + fmt("%.2e", sep)};
}

Outcome dsep() {
    auto net = build_network(testing::load_model("mining.cn"));
    bool a = d_separated(net, 0, 1, {2, 3});
    bool b = !d_separated(net, 0, 2, {});
    bool c = !d_separated(net, 0, 1, {2});
    return {a && b && c, std::string("A,B|CD ") + (a ? "separated" : "open") + ", A,C " + (b ? "open" : "separated") +
                             ", A,B|C " + (c ? "open" : "separated")};
}

Outcome mrf_ci() {
    auto m = testing::load_model("mining.cn");
    auto p = mce_dual_solve(uniform(m.variables), m.constraints, exact_dual());
    bool mrf = check_mrf(p, neighbor_graph(m), kIndependenceTol);
    bool ci = check_ci(p, 0, 1, {2, 3}, kIndependenceTol);
    return {mrf && ci, std::string("MRF ") + (mrf ? "holds" : "fails") + ", A indep B | C,D " + (ci ? "holds" : "fails")};
}

bool rip_brute_force(const Hypergraph& h) {
    std::vector<std::size_t> perm(h.edges.size());
    std::iota(perm.begin(), perm.end(), 0);
    do {
        std::vector<VertexSet> ordered;
        for (auto i : perm) ordered.push_back(h.edges[i]);
        if (detail::rip_anchors(ordered)) return true;
    } while (std::next_permutation(perm.begin(), perm.end()));
    return false;
}

Outcome acyclicity_suite() {
    std::mt19937_64 rng(101);
    std::uniform_int_distribution<std::size_t> nv(3, 8), ne(3, 7), sz(2, 3);
    int agree = 0, cyclic = 0;
    const int hypergraphs = 250;
    for (int t = 0; t < hypergraphs; ++t) {
        Hypergraph h;
        h.vertices = testing::make_vars(nv(rng));
        std::size_t k = ne(rng);
        for (std::size_t e = 0; e < k; ++e) {
            std::vector<std::size_t> all(h.vertices.size());
            std::iota(all.begin(), all.end(), 0);
            std::shuffle(all.begin(), all.end(), rng);
            VertexSet s(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(sz(rng)));
            std::sort(s.begin(), s.end());
            h.edges.push_back(s);
        }
        bool g = graham_acyclic(h);
        agree += g == rip_brute_force(h);
        cyclic += !g;
    }
    int models_agree = 0, inconsistent = 0;
    const int models = 150;
    for (int t = 0; t < models; ++t) {
        auto m = testing::random_window_model(4 + static_cast<std::size_t>(t % 3), rng, t % 3 == 0);
        bool local = local_check(m, decompose(m)).consistent;
        bool global = global_consistent(m).consistent;
        models_agree += local == global;
        inconsistent += !global;
    }
    bool ok = agree == hypergraphs && cyclic > 0 && cyclic < hypergraphs && models_agree == models &&
              inconsistent > 0 && inconsistent < models;
    return {ok, "hypergraphs " + std::to_string(agree) + "/" + std::to_string(hypergraphs) + " (" +
                    std::to_string(cyclic) + " cyclic), models " + std::to_string(models_agree) + "/" +
                    std::to_string(models) + " (" + std::to_string(inconsistent) + " inconsistent)"};
}

Outcome oracle_equivalence() {
    std::mt19937_64 rng(103);
    std::uniform_real_distribution<double> mu(0.05, 0.95);
    double worst = 0.0;
    const int instances = 120;
    for (int t = 0; t < instances; ++t) {
        std::size_t n = 2 + static_cast<std::size_t>(t % 3);
        auto prior = testing::random_positive_table(testing::make_vars(n), rng);
        std::uniform_int_distribution<VarId> var(0, n - 1);
        VarId target = var(rng);
        std::vector<Literal> cond;
        for (VarId v = 0; v < n; ++v) {
            if (v != target && std::bernoulli_distribution(0.6)(rng)) cond.push_back(testing::random_literal(v, rng));
        }
        ConditionalConstraint cc{{target, true}, cond, mu(rng)};
        auto closed = conditional_update(prior, cc);
        auto exact = mce_dual_solve(prior, ConstraintSet{{cc}}, exact_dual());
        worst = std::max(worst, max_diff(closed, exact.values()));
    }
    double worst_grad = 0.0;
    std::normal_distribution<double> g(0.0, 1.0);
    for (int t = 0; t < 30; ++t) {
        auto m = testing::random_window_model(4, rng, true);
        auto d = make_dual_problem(uniform(m.variables), m.constraints);
        Eigen::VectorXd lambda(d.constraints());
        for (Eigen::Index i = 0; i < lambda.size(); ++i) lambda(i) = g(rng);
        Eigen::VectorXd analytic = dual_gradient(d, lambda);
        const double h = 1e-6;
        for (Eigen::Index i = 0; i < lambda.size(); ++i) {
            Eigen::VectorXd up = lambda, down = lambda;
            up(i) += h;
            down(i) -= h;
            double numeric = (dual_objective(d, up) - dual_objective(d, down)) / (2 * h);
            worst_grad = std::max(worst_grad, std::abs(numeric - analytic(i)) / std::max(std::abs(analytic(i)), 1e-3));
        }
    }
    return {worst <= kClosedFormTol && worst_grad <= kFiniteDiffRelTol,
            std::to_string(instances) + " instances, closed form vs dual " + fmt("%.2e", worst) +
                ", gradient rel err " + fmt("%.2e", worst_grad)};
}

Outcome benchmark() {
    auto m = testing::load_model("mining.cn");
    auto opts = SolverOptions::successive_defaults();
    opts.tolerance = kBenchTol;
    auto b = bench(m, opts, 50);
    bool ok = b.dual_converged && b.decomposed_converged && b.decomposed_seconds < b.dual_seconds;
    return {ok, "dual " + fmt("%.1f", b.dual_seconds * 1e6) + " us, decomposed " +
                    fmt("%.1f", b.decomposed_seconds * 1e6) + " us, ratio " + fmt("%.2f", b.speedup)};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"two-link cycle exact solve", two_link_exact},
        {"two-link cycle successive updating", two_link_successive},
        {"initial residuals", initial_gradients},
        {"inconsistency detection", inconsistency},
        {"mining decomposition", mining_decomposition},
        {"six-variable decomposition", six_node_decomposition},
        {"local consistency", local_consistency},
        {"decomposed solve", decomposed_solve},
        {"d-separation", dsep},
        {"MRF and CI properties", mrf_ci},
        {"acyclicity and local/global agreement", acyclicity_suite},
        {"closed-form oracle equivalence", oracle_equivalence},
        {"benchmark", benchmark},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::printf("%s %2zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    }
    return failed == 0 ? 0 : 1;
}
