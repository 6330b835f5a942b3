#ifndef MCENET_CONSISTENCY_HPP
#define MCENET_CONSISTENCY_HPP

#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "mcenet/dist.hpp"
#include "mcenet/graphops.hpp"
#include "mcenet/mce.hpp"
#include "mcenet/simplex.hpp"

namespace mcenet {

/// Largest variable count the full-state-space check accepts.
inline constexpr std::size_t kMaxGlobalVariables = 16;

inline constexpr double kFeasibilityTol = 1e-9;

/// Homogeneous rows over the 2^|scope| states. Conditionals encode
/// (1 - mu) sum_{E,x} p - mu sum_{E,~x} p = 0; marginals sum_E p - v sum p = 0.
/// The universal row sum p = 1 is kept implicit.
struct LinearSystem {
    std::vector<Variable> scope;
    Eigen::MatrixXd rows;
    std::vector<std::size_t> provenance;  // constraint index encoded by each row

    std::size_t states() const { return std::size_t{1} << scope.size(); }
};

/// Null space of a system's homogeneous rows; basis vectors are the columns.
struct SolutionSpace {
    std::vector<Variable> scope;
    Eigen::MatrixXd basis;

    Eigen::Index dimension() const { return basis.cols(); }

    /// Whether v lies in the span, up to `tol` relative to |v|.
    bool contains(const Eigen::VectorXd& v, double tol = 1e-9) const {
        if (basis.cols() == 0) return v.norm() <= tol;
        Eigen::VectorXd coeffs = basis.colPivHouseholderQr().solve(v);
        return (basis * coeffs - v).norm() <= tol * std::max(1.0, v.norm());
    }
};

inline std::vector<std::size_t> constraints_within(const ConstraintSet& cs, const std::vector<Variable>& scope) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        bool inside = true;
        for (VarId v : constraint_scope(cs[i])) {
            inside = inside && std::any_of(scope.begin(), scope.end(), [&](const Variable& s) { return s.index == v; });
        }
        if (inside) out.push_back(i);
    }
    return out;
}

/// Encodes the given constraints (all of them must fit the scope).
inline LinearSystem to_linear(const ConstraintSet& cs, const std::vector<std::size_t>& which,
                              const std::vector<Variable>& scope) {
    LinearSystem ls;
    ls.scope = scope;
    JointTable layout = uniform(scope);
    ls.rows.resize(static_cast<Eigen::Index>(which.size()), static_cast<Eigen::Index>(layout.size()));
    for (std::size_t r = 0; r < which.size(); ++r) {
        if (!covers(layout, cs[which[r]])) throw Error("constraint does not fit the scope");
        ls.rows.row(static_cast<Eigen::Index>(r)) = encode_constraint(layout, cs[which[r]]);
        ls.provenance.push_back(which[r]);
    }
    return ls;
}

/// Encodes every constraint whose variables fit inside `scope`.
inline LinearSystem to_linear(const ConstraintSet& cs, const std::vector<Variable>& scope) {
    return to_linear(cs, constraints_within(cs, scope), scope);
}

namespace detail {

inline Eigen::MatrixXd null_space(const Eigen::MatrixXd& a, Eigen::Index cols) {
    if (a.rows() == 0) return Eigen::MatrixXd::Identity(cols, cols);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& s = svd.singularValues();
    double cutoff = 1e-10 * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > cutoff ? 1 : 0;
    return svd.matrixV().rightCols(cols - rank);
}

inline Eigen::MatrixXd column_space(const Eigen::MatrixXd& a) {
    if (a.cols() == 0) return Eigen::MatrixXd(a.rows(), 0);
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU);
    const auto& s = svd.singularValues();
    double cutoff = 1e-10 * std::max(1.0, s.size() ? s(0) : 0.0);
    Eigen::Index rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i) rank += s(i) > cutoff ? 1 : 0;
    return svd.matrixU().leftCols(rank);
}

/// Linear map summing the states of `scope` that agree on `subscope`.
inline Eigen::MatrixXd marginal_map(const std::vector<Variable>& scope, const std::vector<Variable>& subscope) {
    JointTable layout = uniform(scope);
    std::vector<std::size_t> bits;
    for (const auto& v : subscope) bits.push_back(layout.bit(v.index));
    const std::size_t k = subscope.size();
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(Eigen::Index{1} << k, static_cast<Eigen::Index>(layout.size()));
    for (std::size_t s = 0; s < layout.size(); ++s) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < k; ++i) idx |= ((s >> bits[i]) & 1U) << (k - 1 - i);
        m(static_cast<Eigen::Index>(idx), static_cast<Eigen::Index>(s)) = 1.0;
    }
    return m;
}

}  // namespace detail

inline SolutionSpace solution_space(const LinearSystem& ls) {
    return {ls.scope, detail::null_space(ls.rows, static_cast<Eigen::Index>(ls.states()))};
}

/// Image of a solution space under marginalization onto `subscope`.
inline SolutionSpace project_space(const SolutionSpace& ss, const std::vector<Variable>& subscope) {
    Eigen::MatrixXd m = detail::marginal_map(ss.scope, subscope);
    return {subscope, detail::column_space(m * ss.basis)};
}

/// The fast necessary condition: the homogeneous rows admit a nonzero solution.
inline bool rank_test(const LinearSystem& ls) { return solution_space(ls).dimension() > 0; }

/// A probability vector satisfying the system, if one exists.
inline std::optional<JointTable> feasible_distribution(const LinearSystem& ls) {
    const auto n = static_cast<Eigen::Index>(ls.states());
    Eigen::MatrixXd a(ls.rows.rows() + 1, n);
    a.topRows(ls.rows.rows()) = ls.rows;
    a.row(ls.rows.rows()).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(a.rows());
    b(a.rows() - 1) = 1.0;
    auto x = find_nonnegative_solution(a, b, kFeasibilityTol);
    if (!x) return std::nullopt;
    JointTable t(ls.scope, std::vector<double>(x->data(), x->data() + x->size()));
    t.normalize();
    return t;
}

struct ConsistencyReport {
    bool consistent = false;
    bool rank_passed = false;           // global check: nontrivial null space
    bool feasibility_checked = false;   // global check: LP was run
    std::vector<std::vector<Variable>> cliques;
    std::vector<std::size_t> constraint_counts;
    std::vector<JointTable> witnesses;  // one per clique when consistent
    std::optional<std::pair<std::size_t, std::size_t>> culprit;  // clique positions
};

/// Consistency over the full state space: the rank test first, then nonnegative
/// feasibility (a nonzero but sign-indefinite solution is not a distribution).
inline ConsistencyReport global_consistent(const Model& m) {
    if (m.variables.size() > kMaxGlobalVariables)
        throw Error("model has " + std::to_string(m.variables.size()) +
                    " variables; use the local check over a decomposition");
    ConsistencyReport r;
    r.cliques.push_back(m.variables);
    auto ls = to_linear(m.constraints, m.variables);
    r.constraint_counts.push_back(ls.provenance.size());
    r.rank_passed = rank_test(ls);
    if (!r.rank_passed) {
        r.culprit = std::make_pair(std::size_t{0}, std::size_t{0});
        return r;
    }
    r.feasibility_checked = true;
    auto w = feasible_distribution(ls);
    r.consistent = w.has_value();
    if (w) r.witnesses.push_back(std::move(*w));
    else r.culprit = std::make_pair(std::size_t{0}, std::size_t{0});
    return r;
}

namespace detail {

inline std::vector<Variable> vars_of(const Model& m, const VertexSet& s) {
    std::vector<Variable> out;
    for (auto v : s) out.push_back(m.variables.at(v));
    return out;
}

inline std::vector<Variable> intersect(const std::vector<Variable>& a, const std::vector<Variable>& b) {
    std::vector<Variable> out;
    for (const auto& v : a) {
        if (std::any_of(b.begin(), b.end(), [&](const Variable& w) { return w.index == v.index; })) out.push_back(v);
    }
    return out;
}

/// Joint feasibility over several clique tables: each satisfies its own rows and sums to
/// one, and each listed pair agrees on the given separator.
struct TreeProblem {
    std::vector<LinearSystem> blocks;
    struct Link {
        std::size_t a, b;
        std::vector<Variable> separator;
    };
    std::vector<Link> links;

    std::optional<std::vector<JointTable>> solve() const {
        std::vector<Eigen::Index> offset;
        Eigen::Index cols = 0;
        Eigen::Index rows = 0;
        for (const auto& b : blocks) {
            offset.push_back(cols);
            cols += static_cast<Eigen::Index>(b.states());
            rows += b.rows.rows() + 1;
        }
        for (const auto& l : links) {
            if (!l.separator.empty()) rows += Eigen::Index{1} << l.separator.size();
        }
        Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, cols);
        Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
        Eigen::Index r = 0;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            const auto& b = blocks[i];
            const auto n = static_cast<Eigen::Index>(b.states());
            a.block(r, offset[i], b.rows.rows(), n) = b.rows;
            r += b.rows.rows();
            a.block(r, offset[i], 1, n).setOnes();
            rhs(r) = 1.0;
            ++r;
        }
        for (const auto& l : links) {
            if (l.separator.empty()) continue;
            Eigen::MatrixXd ma = marginal_map(blocks[l.a].scope, l.separator);
            Eigen::MatrixXd mb = marginal_map(blocks[l.b].scope, l.separator);
            a.block(r, offset[l.a], ma.rows(), ma.cols()) = ma;
            a.block(r, offset[l.b], mb.rows(), mb.cols()) = -mb;
            r += ma.rows();
        }
        auto x = find_nonnegative_solution(a, rhs, kFeasibilityTol);
        if (!x) return std::nullopt;
        std::vector<JointTable> out;
        for (std::size_t i = 0; i < blocks.size(); ++i) {
            auto seg = x->segment(offset[i], static_cast<Eigen::Index>(blocks[i].states()));
            out.emplace_back(blocks[i].scope, std::vector<double>(seg.data(), seg.data() + seg.size()));
        }
        return out;
    }
};

}  // namespace detail

struct PairwiseResult {
    bool consistent = false;
    std::optional<JointTable> left;
    std::optional<JointTable> right;
};

/// Whether some distribution on each clique satisfies that clique's constraints (every
/// constraint fitting inside it) with matching marginals on the shared variables.
inline PairwiseResult pairwise_consistent(const Model& m, const VertexSet& clique_i, const VertexSet& clique_j) {
    detail::TreeProblem p;
    auto si = detail::vars_of(m, clique_i);
    auto sj = detail::vars_of(m, clique_j);
    p.blocks.push_back(to_linear(m.constraints, si));
    p.blocks.push_back(to_linear(m.constraints, sj));
    p.links.push_back({0, 1, detail::intersect(si, sj)});
    PairwiseResult r;
    if (auto w = p.solve()) {
        r.consistent = true;
        r.left = std::move((*w)[0]);
        r.right = std::move((*w)[1]);
    }
    return r;
}

/// Each constraint goes to the first clique, in running-intersection order, that contains
/// its variables. Indexed by RIP position.
inline std::vector<std::vector<std::size_t>> assign_constraints(const Model& m, const Decomposition& d) {
    auto ordered = d.ordered_cliques();
    std::vector<std::vector<std::size_t>> out(ordered.size());
    for (std::size_t c = 0; c < m.constraints.size(); ++c) {
        auto scope = constraint_scope(m.constraints[c]);
        bool placed = false;
        for (std::size_t i = 0; i < ordered.size() && !placed; ++i) {
            if (std::all_of(scope.begin(), scope.end(), [&](VarId v) {
                    return std::binary_search(ordered[i].begin(), ordered[i].end(), v);
                })) {
                out[i].push_back(c);
                placed = true;
            }
        }
        if (!placed)
            throw Error("no clique contains the variables of " + constraint_text(m.constraints[c], m.variables));
    }
    return out;
}

/// Local consistency over an acyclic decomposition. Cliques are visited in running-
/// intersection order: S_0 alone, then each S_i joined to its anchor S_{j_i} on their
/// separator, with everything already admitted kept in the problem. An infeasible step
/// names (S_i, S_{j_i}) as the culprit. For acyclic decompositions the verdict equals the
/// global one while the problem size stays at sum 2^|S_i| instead of 2^|V|.
inline ConsistencyReport local_check(const Model& m, const Decomposition& d) {
    if (!graham_acyclic(Hypergraph{d.nodes, d.cliques}))
        throw Error("decomposition is not an acyclic hypergraph; local checking does not apply");
    auto ordered = d.ordered_cliques();
    auto assigned = assign_constraints(m, d);

    ConsistencyReport r;
    detail::TreeProblem p;
    std::set<VarId> seen;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        auto scope = detail::vars_of(m, ordered[i]);
        r.cliques.push_back(scope);
        r.constraint_counts.push_back(assigned[i].size());
        p.blocks.push_back(to_linear(m.constraints, assigned[i], scope));
        if (i > 0) {
            std::vector<Variable> sep;
            for (const auto& v : scope) {
                if (seen.count(v.index)) sep.push_back(v);
            }
            p.links.push_back({d.rip.anchor[i], i, sep});
        }
        for (const auto& v : scope) seen.insert(v.index);

        auto w = p.solve();
        if (!w) {
            r.culprit = std::make_pair(i, i == 0 ? std::size_t{0} : d.rip.anchor[i]);
            return r;
        }
        if (i + 1 == ordered.size()) r.witnesses = std::move(*w);
    }
    r.consistent = true;
    return r;
}

inline std::string consistency_report_text(const ConsistencyReport& r, bool with_witnesses) {
    std::ostringstream os;
    os << (r.consistent ? "consistent" : "inconsistent") << '\n';
    auto label = [&](std::size_t i) {
        std::string s;
        for (const auto& v : r.cliques[i]) s += (s.empty() ? "" : ",") + v.name;
        return "{" + s + "}";
    };
    for (std::size_t i = 0; i < r.cliques.size(); ++i)
        os << "clique " << label(i) << " constraints " << r.constraint_counts[i] << '\n';
    if (r.culprit) os << "culprit " << label(r.culprit->first) << ' ' << label(r.culprit->second) << '\n';
    if (with_witnesses) {
        for (const auto& w : r.witnesses) os << serialize_table(w);
    }
    return os.str();
}

}  // namespace mcenet

#endif  // MCENET_CONSISTENCY_HPP
