#ifndef MCENET_ENGINE_HPP
#define MCENET_ENGINE_HPP

#include <chrono>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "mcenet/consistency.hpp"
#include "mcenet/dist.hpp"
#include "mcenet/graphops.hpp"
#include "mcenet/mce.hpp"

namespace mcenet {

struct CliqueState {
    std::vector<Variable> clique;
    JointTable table;
    std::vector<std::size_t> assigned;  // constraint indices owned by this clique
};

/// Join-tree link from a clique to its running-intersection anchor.
struct JoinEdge {
    std::size_t child = 0;
    std::size_t parent = 0;
    std::vector<Variable> separator;
};

struct SolveReport {
    std::vector<CliqueState> cliques;               // running-intersection order
    std::vector<JoinEdge> joins;
    std::vector<std::vector<JointTable>> snapshots;  // clique tables after each full cycle
    ResidualReport final_residuals;
    UpdateTrace trace;
    bool converged = false;
    int cycles = 0;
    double max_residual = 0.0;
};

/// Partial Jeffrey's rule: rescales `table` so that its marginal on the new marginal's scope
/// becomes exactly `new_marginal`.
inline JointTable subset_marginal_update(const JointTable& table, const JointTable& new_marginal) {
    JointTable current = marginalize(table, new_marginal.scope());
    std::vector<std::size_t> bits;
    for (const auto& v : new_marginal.scope()) bits.push_back(table.bit(v.index));
    const std::size_t k = bits.size();
    std::vector<double> factor(new_marginal.size(), 0.0);
    for (std::size_t i = 0; i < new_marginal.size(); ++i) {
        if (current[i] > 0.0) {
            factor[i] = new_marginal[i] / current[i];
        } else if (new_marginal[i] > 0.0) {
            throw UnreachableConstraint("separator state with zero current mass receives positive mass");
        }
    }
    JointTable out = table;
    for (std::size_t s = 0; s < out.size(); ++s) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < k; ++i) idx |= ((s >> bits[i]) & 1U) << (k - 1 - i);
        out[s] *= factor[idx];
    }
    out.normalize();
    return out;
}

/// Successive updating over an acyclic decomposition. Every clique starts uniform; each step
/// applies the scheduled constraint to its owning clique and pushes separator marginals
/// outward along the join tree until every clique agrees with the updated one.
inline SolveReport solve_decomposed(const Model& m, const Decomposition& d,
                                    SolverOptions opts = SolverOptions::successive_defaults()) {
    if (!graham_acyclic(Hypergraph{d.nodes, d.cliques}))
        throw Error("decomposition is not an acyclic hypergraph");
    const auto& cs = m.constraints;
    auto ordered = d.ordered_cliques();
    auto assigned = assign_constraints(m, d);

    SolveReport rep;
    std::vector<std::size_t> owner(cs.size());
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        auto scope = detail::vars_of(m, ordered[i]);
        rep.cliques.push_back({scope, uniform(scope), assigned[i]});
        for (auto c : assigned[i]) owner[c] = i;
    }
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> tree(ordered.size());  // (neighbor, join)
    {
        std::set<VarId> seen(ordered[0].begin(), ordered[0].end());
        for (std::size_t i = 1; i < ordered.size(); ++i) {
            JoinEdge e{i, d.rip.anchor[i], {}};
            for (const auto& v : rep.cliques[i].clique) {
                if (seen.count(v.index)) e.separator.push_back(v);
            }
            seen.insert(ordered[i].begin(), ordered[i].end());
            tree[i].push_back({e.parent, rep.joins.size()});
            tree[e.parent].push_back({i, rep.joins.size()});
            rep.joins.push_back(std::move(e));
        }
    }

    // Per join: separator index of every state on both sides, so propagation needs no allocation.
    struct JoinMap {
        std::vector<std::size_t> child_idx, parent_idx;
        std::vector<double> from, to;
    };
    auto separator_index = [](const JointTable& t, const std::vector<Variable>& sep) {
        std::vector<std::size_t> bits;
        for (const auto& v : sep) bits.push_back(t.bit(v.index));
        std::vector<std::size_t> idx(t.size());
        for (std::size_t s = 0; s < t.size(); ++s) {
            std::size_t k = 0;
            for (std::size_t i = 0; i < bits.size(); ++i) k |= ((s >> bits[i]) & 1U) << (bits.size() - 1 - i);
            idx[s] = k;
        }
        return idx;
    };
    std::vector<JoinMap> maps;
    for (const auto& e : rep.joins) {
        std::size_t n = std::size_t{1} << e.separator.size();
        maps.push_back({separator_index(rep.cliques[e.child].table, e.separator),
                        separator_index(rep.cliques[e.parent].table, e.separator), std::vector<double>(n),
                        std::vector<double>(n)});
    }

    std::vector<char> done(ordered.size());
    std::vector<std::size_t> queue;
    queue.reserve(ordered.size());
    auto push = [&](std::size_t src, std::size_t dst, std::size_t j) {
        auto& mp = maps[j];
        if (rep.joins[j].separator.empty()) return;
        bool down = rep.joins[j].parent == src;
        const auto& src_idx = down ? mp.parent_idx : mp.child_idx;
        const auto& dst_idx = down ? mp.child_idx : mp.parent_idx;
        const auto& st = rep.cliques[src].table;
        auto& dt = rep.cliques[dst].table;
        std::fill(mp.from.begin(), mp.from.end(), 0.0);
        std::fill(mp.to.begin(), mp.to.end(), 0.0);
        for (std::size_t s = 0; s < st.size(); ++s) mp.from[src_idx[s]] += st[s];
        for (std::size_t s = 0; s < dt.size(); ++s) mp.to[dst_idx[s]] += dt[s];
        for (std::size_t k = 0; k < mp.to.size(); ++k) {
            if (mp.to[k] > 0.0) mp.to[k] = mp.from[k] / mp.to[k];
            else if (mp.from[k] > 0.0)
                throw UnreachableConstraint("separator state with zero current mass receives positive mass");
        }
        for (std::size_t s = 0; s < dt.size(); ++s) dt[s] *= mp.to[dst_idx[s]];
        dt.normalize();
    };
    auto propagate_from = [&](std::size_t origin) {
        std::fill(done.begin(), done.end(), 0);
        queue.clear();
        queue.push_back(origin);
        done[origin] = 1;
        for (std::size_t head = 0; head < queue.size(); ++head) {
            auto src = queue[head];
            for (auto [dst, j] : tree[src]) {
                if (done[dst]) continue;
                done[dst] = 1;
                push(src, dst, j);
                queue.push_back(dst);
            }
        }
    };

    std::vector<CompiledConstraint> compiled;
    for (std::size_t i = 0; i < cs.size(); ++i) compiled.push_back(compile_constraint(rep.cliques[owner[i]].table, cs[i]));
    rep.trace.events.reserve(cs.size() * 32);
    rep.snapshots.reserve(static_cast<std::size_t>(opts.max_cycles));
    auto outcome = drive_schedule(
        schedule_units(cs), cs.size(), opts,
        [&](std::size_t i) { return constraint_residual(rep.cliques[owner[i]].table, compiled[i]); },
        [&](std::size_t i) {
            auto& target = rep.cliques[owner[i]];
            apply_constraint_in_place(target.table, compiled[i]);
            propagate_from(owner[i]);
            return std::pair{owner[i], &target.table};
        },
        [&](int) {
            std::vector<JointTable> snap;
            snap.reserve(rep.cliques.size());
            for (const auto& c : rep.cliques) snap.push_back(c.table);
            rep.snapshots.push_back(std::move(snap));
        },
        rep.trace);

    rep.converged = outcome.converged;
    rep.cycles = outcome.cycles;
    rep.max_residual = outcome.max_residual;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        auto e = constraint_residual(rep.cliques[owner[i]].table, cs[i], &m.variables);
        e.constraint = i;
        rep.final_residuals.entries.push_back(std::move(e));
    }
    for (const auto& c : rep.cliques) {
        rep.final_residuals.universal = std::max(rep.final_residuals.universal, std::abs(c.table.sum() - 1.0));
    }
    return rep;
}

/// P(event | given) read from the first clique holding every mentioned variable.
inline double query(const SolveReport& rep, const std::vector<Literal>& event, const std::vector<Literal>& given = {}) {
    for (const auto& c : rep.cliques) {
        bool holds = true;
        for (const auto* ls : {&event, &given}) {
            for (const auto& l : *ls) holds = holds && c.table.contains(l.var);
        }
        if (!holds) continue;
        if (given.empty()) return event_probability(c.table, event);
        return conditional(c.table, std::span<const Literal>(event), std::span<const Literal>(given));
    }
    throw Error("query variables span several cliques; cross-clique propagation is not supported");
}

/// Wall-time comparison between the full-joint dual solve and decomposed successive updating.
struct BenchReport {
    double dual_seconds = 0.0;
    double decomposed_seconds = 0.0;
    double decompose_seconds = 0.0;  // structure search, reported separately
    double speedup = 0.0;            // dual / decomposed
    double max_deviation = 0.0;      // clique tables vs exact-joint marginals
    int repeats = 0;
    bool dual_converged = false;
    bool decomposed_converged = false;
};

inline BenchReport bench(const Model& m, SolverOptions opts = SolverOptions::successive_defaults(), int repeats = 20) {
    using clock = std::chrono::steady_clock;
    BenchReport b;
    b.repeats = repeats;
    auto seconds = [](clock::duration d) { return std::chrono::duration<double>(d).count(); };

    auto t0 = clock::now();
    auto dec = decompose(m);
    b.decompose_seconds = seconds(clock::now() - t0);

    SolverOptions dual_opts = opts;
    dual_opts.max_iterations = std::max(opts.max_iterations, 5000);
    std::optional<JointTable> exact;
    double best_dual = 1e300, best_dec = 1e300;
    SolveReport rep;
    for (int r = 0; r < repeats; ++r) {
        auto s = clock::now();
        exact = mce_dual_solve(uniform(m.variables), m.constraints, dual_opts);
        best_dual = std::min(best_dual, seconds(clock::now() - s));

        s = clock::now();
        rep = solve_decomposed(m, dec, opts);
        best_dec = std::min(best_dec, seconds(clock::now() - s));
    }
    b.dual_converged = exact.has_value();
    b.decomposed_converged = rep.converged;
    b.dual_seconds = best_dual;
    b.decomposed_seconds = best_dec;
    b.speedup = best_dec > 0.0 ? best_dual / best_dec : 0.0;
    for (const auto& c : rep.cliques) {
        auto ref = marginalize(*exact, c.clique);
        for (std::size_t s = 0; s < ref.size(); ++s) b.max_deviation = std::max(b.max_deviation, std::abs(ref[s] - c.table[s]));
    }
    return b;
}

inline std::string solve_report_text(const SolveReport& rep) {
    std::ostringstream os;
    for (const auto& c : rep.cliques) os << serialize_table(c.table);
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.3g", rep.max_residual);
    os << (rep.converged ? "converged" : "not converged") << " cycles " << rep.cycles << " max-residual " << buf
       << '\n';
    return os.str();
}

}  // namespace mcenet

#endif  // MCENET_ENGINE_HPP
