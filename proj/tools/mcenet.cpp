#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "mcenet/mcenet.hpp"

namespace {

using namespace mcenet;

constexpr int kOk = 0;
constexpr int kFailed = 1;
constexpr int kUsage = 2;

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

bool is_graph_file(const std::string& path) {
    return path.size() >= 6 && path.compare(path.size() - 6, 6, ".graph") == 0;
}

std::string fixed6(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6f", v);
    return buf;
}

std::string short_g(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", v);
    return buf;
}

std::vector<Literal> parse_literals(const Model& m, const std::string& text) {
    std::vector<Literal> out;
    if (text.empty()) return out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        bool positive = true;
        if (!item.empty() && item.front() == '~') {
            positive = false;
            item.erase(0, 1);
        }
        out.push_back({m.require(item), positive});
    }
    return out;
}

std::vector<std::string> split_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    for (std::string item; std::getline(ss, item, ',');) {
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

void print_table(std::ostream& os, const JointTable& t, bool tsv) {
    if (!tsv) {
        os << serialize_table(t);
        return;
    }
    std::string scope;
    for (const auto& v : t.scope()) scope += v.name;
    for (std::size_t s = 0; s < t.size(); ++s) os << scope << '\t' << state_bits(s, t.arity()) << '\t' << fixed6(t[s]) << '\n';
}

void print_residuals(std::ostream& os, const ResidualReport& r, bool tsv) {
    for (const auto& e : r.entries) {
        std::string cur = e.undefined ? "undefined" : fixed6(e.current);
        if (tsv) os << "residual\t" << e.text << '\t' << cur << '\t' << short_g(e.magnitude()) << '\n';
        else os << "residual " << e.text << " current " << cur << " |r| " << short_g(e.magnitude()) << '\n';
    }
}

void print_trace(std::ostream& os, const UpdateTrace& trace, const Model& m, const std::vector<std::string>& tables,
                 bool tsv) {
    if (tsv) {
        os << trace.to_tsv(m.constraints, m.variables);
        return;
    }
    for (const auto& e : trace.events)
        os << "cycle " << e.cycle << " apply " << constraint_text(m.constraints[e.constraint], m.variables) << " on "
           << tables[e.table] << " |r| " << short_g(e.residual_before) << '\n';
}

std::string scope_name(const std::vector<Variable>& scope) {
    std::string s;
    for (const auto& v : scope) s += v.name;
    return s;
}

struct SolveArgs {
    std::string model;
    std::string method = "decomposed";
    std::string fill = "greedy";
    double tol = -1.0;
    int max_cycles = 100;
    int max_iterations = 500;
    unsigned seed = 1;
    bool trace = false;
    std::string format = "text";
};

Decomposition make_decomposition(const Model& m, const std::string& method, unsigned seed) {
    AnnealOptions ao;
    ao.seed = seed;
    return decompose(m, method == "anneal" ? FillMethod::Anneal : FillMethod::Greedy, ao);
}

int run_solve(const SolveArgs& a) {
    auto m = parse_model(read_file(a.model));
    bool tsv = a.format == "tsv";
    if (a.method == "dual") {
        auto opts = SolverOptions::dual_defaults();
        if (a.tol > 0) opts.tolerance = a.tol;
        opts.max_iterations = a.max_iterations;
        try {
            auto t = mce_dual_solve(uniform(m.variables), m.constraints, opts);
            print_table(std::cout, t, tsv);
            auto r = residuals(t, m.constraints, m.variables);
            print_residuals(std::cout, r, tsv);
            std::cout << "converged max-residual " << short_g(r.max_magnitude()) << '\n';
            return kOk;
        } catch (const ConvergenceError& e) {
            std::cout << "not converged: " << e.what() << '\n';
            return kFailed;
        }
    }
    auto opts = SolverOptions::successive_defaults();
    if (a.tol > 0) opts.tolerance = a.tol;
    opts.max_cycles = a.max_cycles;
    if (a.method == "successive") {
        auto res = successive_solve(uniform(m.variables), m.constraints, m.variables, opts);
        print_table(std::cout, res.table, tsv);
        print_residuals(std::cout, residuals(res.table, m.constraints, m.variables), tsv);
        if (a.trace) print_trace(std::cout, res.trace, m, {scope_name(m.variables)}, tsv);
        std::cout << (res.converged ? "converged" : "not converged") << " cycles " << res.cycles << " max-residual "
                  << short_g(res.max_residual) << '\n';
        return res.converged ? kOk : kFailed;
    }
    auto d = make_decomposition(m, a.fill, a.seed);
    auto rep = solve_decomposed(m, d, opts);
    if (tsv) {
        for (const auto& c : rep.cliques) print_table(std::cout, c.table, true);
        std::cout << "summary\t" << (rep.converged ? "converged" : "not-converged") << '\t' << rep.cycles << '\t'
                  << short_g(rep.max_residual) << '\n';
    } else {
        std::cout << solve_report_text(rep);
    }
    if (a.trace) {
        std::vector<std::string> tables;
        for (const auto& c : rep.cliques) tables.push_back(scope_name(c.clique));
        print_trace(std::cout, rep.trace, m, tables, tsv);
    }
    return rep.converged ? kOk : kFailed;
}

int run_check(const std::string& path, bool local, bool witness, const std::string& fill, unsigned seed) {
    auto m = parse_model(read_file(path));
    ConsistencyReport r = local ? local_check(m, make_decomposition(m, fill, seed)) : global_consistent(m);
    std::cout << consistency_report_text(r, witness);
    return r.consistent ? kOk : kFailed;
}

int run_decompose(const std::string& path, const std::string& method, unsigned seed) {
    AnnealOptions ao;
    ao.seed = seed;
    auto fm = method == "anneal" ? FillMethod::Anneal : FillMethod::Greedy;
    if (!is_graph_file(path)) {
        std::cout << decomposition_report(decompose(parse_model(read_file(path)), fm, ao));
        return kOk;
    }
    auto gf = parse_graph_file(read_file(path));
    if (gf.edges.empty() && !gf.hedges.empty()) {
        auto h = gf.hypergraph();
        bool acyclic = graham_acyclic(h);
        std::cout << "graham-reduction: " << (acyclic ? "acyclic" : "cyclic") << '\n';
        auto rip = rip_order(h);
        std::cout << "rip-order:";
        if (!rip) std::cout << " (none)";
        else {
            for (std::size_t i = 0; i < rip->order.size(); ++i) {
                std::cout << ' ' << vertex_set_text(h.edges[rip->order[i]], h.vertices);
                if (i > 0) std::cout << '<' << vertex_set_text(h.edges[rip->order[rip->anchor[i]]], h.vertices);
            }
        }
        std::cout << '\n';
        return acyclic ? kOk : kFailed;
    }
    auto g = gf.neighbor_graph();
    std::cout << decomposition_report(fm == FillMethod::Anneal ? fill_in_anneal(g, ao) : fill_in_greedy(g));
    return kOk;
}

int run_dsep(const std::string& path, const std::string& x, const std::string& y, const std::string& given) {
    BeliefNetwork net;
    std::function<std::size_t(const std::string&)> id;
    GraphFile gf;
    Model m;
    if (is_graph_file(path)) {
        gf = parse_graph_file(read_file(path));
        net = gf.network();
        id = [&](const std::string& n) {
            auto v = gf.find(n);
            if (!v) throw Error("unknown node '" + n + "'");
            return *v;
        };
    } else {
        m = parse_model(read_file(path));
        net = build_network(m);
        id = [&](const std::string& n) { return m.require(n); };
    }
    std::set<std::size_t> se;
    for (const auto& n : split_names(given)) se.insert(id(n));
    bool sep = d_separated(net, id(x), id(y), se);
    std::cout << (sep ? "separated" : "not separated") << '\n';
    return kOk;
}

int run_query(const std::string& path, const std::string& event, const std::string& given, const std::string& fill,
              unsigned seed, double tol) {
    auto m = parse_model(read_file(path));
    auto opts = SolverOptions::successive_defaults();
    if (tol > 0) opts.tolerance = tol;
    auto rep = solve_decomposed(m, make_decomposition(m, fill, seed), opts);
    double p = query(rep, parse_literals(m, event), parse_literals(m, given));
    std::cout << "P(" << event;
    if (!given.empty()) std::cout << '|' << given;
    std::cout << ") = " << fixed6(p) << '\n';
    return rep.converged ? kOk : kFailed;
}

int run_bench(const std::string& path, int repeats, double tol) {
    auto m = parse_model(read_file(path));
    auto opts = SolverOptions::successive_defaults();
    if (tol > 0) opts.tolerance = tol;
    auto b = bench(m, opts, repeats);
    std::cout << "repeats " << b.repeats << '\n'
              << "dual-seconds " << short_g(b.dual_seconds) << '\n'
              << "decomposed-seconds " << short_g(b.decomposed_seconds) << '\n'
              << "decompose-seconds " << short_g(b.decompose_seconds) << '\n'
              << "speedup " << short_g(b.speedup) << '\n'
              << "max-deviation " << short_g(b.max_deviation) << '\n';
    return b.decomposed_converged ? kOk : kFailed;
}

int run_validate(const std::string& path) {
    if (is_graph_file(path)) {
        auto gf = parse_graph_file(read_file(path));
        std::cout << "ok: " << gf.nodes.size() << " nodes, " << gf.edges.size() << " edges, " << gf.arcs.size()
                  << " arcs, " << gf.hedges.size() << " hyperedges\n";
        return kOk;
    }
    auto m = parse_model(read_file(path));
    std::cout << "ok: " << m.variables.size() << " variables, " << m.constraints.conditional_count()
              << " conditional, " << m.constraints.marginal_count() << " marginal\n";
    for (const auto& w : validate_scope_rule(m))
        std::cout << "warning: " << constraint_text(m.constraints[w.constraint], m.variables) << ": " << w.message
                  << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Maximum-entropy inference over binary constraint networks"};
    app.require_subcommand(1);

    SolveArgs sa;
    auto* solve = app.add_subcommand("solve", "Solve a model for its maximum-entropy distribution");
    solve->add_option("model", sa.model, "Model file")->required();
    solve->add_option("--method", sa.method, "Solver")
        ->check(CLI::IsMember({"dual", "successive", "decomposed"}))
        ->capture_default_str();
    solve->add_option("--tol", sa.tol, "Residual tolerance")->check(CLI::PositiveNumber);
    solve->add_option("--max-cycles", sa.max_cycles, "Cycle cap for successive updating")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    solve->add_option("--max-iterations", sa.max_iterations, "Iteration cap for the dual solver")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    solve->add_option("--fill", sa.fill, "Fill-in search for the decomposed solver")
        ->check(CLI::IsMember({"greedy", "anneal"}))
        ->capture_default_str();
    solve->add_option("--seed", sa.seed, "Annealing seed")->capture_default_str();
    solve->add_flag("--trace", sa.trace, "Print the update trace");
    solve->add_option("--format", sa.format, "Output format")
        ->check(CLI::IsMember({"text", "tsv"}))
        ->capture_default_str();

    std::string path, method = "greedy", fill = "greedy", x, y, given, event;
    unsigned seed = 1;
    bool global = false, local = false, witness = false;
    int repeats = 20;
    double tol = -1.0;

    auto* check = app.add_subcommand("check", "Check a constraint set for consistency");
    check->add_option("model", path, "Model file")->required();
    auto* g_flag = check->add_flag("--global", global, "Check over the full joint (default)");
    check->add_flag("--local", local, "Check clique by clique over a decomposition")->excludes(g_flag);
    check->add_flag("--witness", witness, "Print a witness distribution per clique");
    check->add_option("--fill", fill, "Fill-in search for --local")->check(CLI::IsMember({"greedy", "anneal"}));
    check->add_option("--seed", seed, "Annealing seed");

    auto* dec = app.add_subcommand("decompose", "Triangulate and list cliques in running-intersection order");
    dec->add_option("file", path, "Model or .graph file")->required();
    dec->add_option("--method", method, "Fill-in search")
        ->check(CLI::IsMember({"greedy", "anneal"}))
        ->capture_default_str();
    dec->add_option("--seed", seed, "Annealing seed")->capture_default_str();

    auto* dsep = app.add_subcommand("dsep", "Test d-separation in the belief network");
    dsep->add_option("file", path, "Model or .graph file")->required();
    dsep->add_option("--x", x, "First variable")->required();
    dsep->add_option("--y", y, "Second variable")->required();
    dsep->add_option("--given", given, "Comma-separated separating set");

    auto* qry = app.add_subcommand("query", "Probability of an event after a decomposed solve");
    qry->add_option("model", path, "Model file")->required();
    qry->add_option("--event", event, "Comma-separated literals, e.g. C,~D")->required();
    qry->add_option("--given", given, "Comma-separated literals to condition on");
    qry->add_option("--fill", fill, "Fill-in search")->check(CLI::IsMember({"greedy", "anneal"}));
    qry->add_option("--seed", seed, "Annealing seed");
    qry->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);

    auto* bch = app.add_subcommand("bench", "Time the full-joint dual solve against the decomposed solve");
    bch->add_option("model", path, "Model file")->required();
    bch->add_option("--repeats", repeats, "Timing repetitions (minimum is reported)")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    bch->add_option("--tol", tol, "Residual tolerance")->check(CLI::PositiveNumber);

    auto* val = app.add_subcommand("validate", "Parse a model or graph file and report scope warnings");
    val->add_option("file", path, "Model or .graph file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*solve) return run_solve(sa);
        if (*check) return run_check(path, local, witness, fill, seed);
        if (*dec) return run_decompose(path, method, seed);
        if (*dsep) return run_dsep(path, x, y, given);
        if (*qry) return run_query(path, event, given, fill, seed, tol);
        if (*bch) return run_bench(path, repeats, tol);
        if (*val) return run_validate(path);
    } catch (const ParseError& e) {
        std::cerr << "parse error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConvergenceError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    } catch (const UnreachableConstraint& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kFailed;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kUsage;
    }
    return kUsage;
}
