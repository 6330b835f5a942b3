#ifndef MCENET_DIST_HPP
#define MCENET_DIST_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <numeric>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mcenet/model.hpp"

namespace mcenet {

/// Largest scope a dense table may have.
inline constexpr std::size_t kMaxTableVariables = 20;

/// Conditioning events lighter than this are treated as impossible.
inline constexpr double kZeroMass = 1e-12;

inline constexpr double kDefaultIndependenceTol = 1e-6;

/// Dense distribution over 2^|scope| states. State bits follow scope order with the last
/// scope variable as the least-significant bit; bit value 1 means the variable is true.
class JointTable {
 public:
    JointTable() = default;

    JointTable(std::vector<Variable> scope, std::vector<double> probs)
        : scope_(std::make_shared<const std::vector<Variable>>(std::move(scope))), probs_(std::move(probs)) {
        if (scope_->size() > kMaxTableVariables)
            throw Error("table scope of " + std::to_string(scope_->size()) + " variables exceeds the cap of " +
                        std::to_string(kMaxTableVariables));
        if (probs_.size() != (std::size_t{1} << scope_->size()))
            throw Error("table needs 2^" + std::to_string(scope_->size()) + " entries");
    }

    const std::vector<Variable>& scope() const { return scope_ ? *scope_ : empty_scope(); }
    std::size_t arity() const { return scope().size(); }
    std::size_t size() const { return probs_.size(); }

    std::span<const double> probabilities() const { return probs_; }
    std::vector<double>& values() { return probs_; }
    const std::vector<double>& values() const { return probs_; }

    double operator[](std::size_t s) const { return probs_[s]; }
    double& operator[](std::size_t s) { return probs_[s]; }

    double sum() const { return std::accumulate(probs_.begin(), probs_.end(), 0.0); }

    void normalize() {
        double z = sum();
        if (!(z > 0.0)) throw Error("cannot normalize a table with no mass");
        for (auto& p : probs_) p /= z;
    }

    bool is_normalized(double tol = 1e-9) const { return std::abs(sum() - 1.0) <= tol; }

    /// Position of a variable within the scope, or npos.
    std::size_t position(VarId v) const {
        const auto& sc = scope();
        for (std::size_t i = 0; i < sc.size(); ++i) {
            if (sc[i].index == v) return i;
        }
        return npos;
    }

    bool contains(VarId v) const { return position(v) != npos; }

    std::size_t bit(VarId v) const {
        auto pos = position(v);
        if (pos == npos) throw Error("variable index " + std::to_string(v) + " is not in the table scope");
        return arity() - 1 - pos;
    }

    bool value_of(std::size_t state, VarId v) const { return (state >> bit(v)) & 1U; }

    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
    static const std::vector<Variable>& empty_scope() {
        static const std::vector<Variable> none;
        return none;
    }

    std::shared_ptr<const std::vector<Variable>> scope_;  // immutable, shared between copies
    std::vector<double> probs_;
};

/// Conjunction of literals as a bit pattern over a table's states.
struct EventMask {
    std::uint64_t mask = 0;
    std::uint64_t want = 0;
    bool impossible = false;

    bool matches(std::size_t state) const { return !impossible && (state & mask) == want; }

    /// Calls f(state) for every matching state of a table with `size` states.
    template <class F>
    void for_each_match(std::size_t size, F&& f) const {
        if (impossible) return;
        const std::uint64_t free = (size - 1) & ~mask;
        std::uint64_t x = 0;
        do {
            f(static_cast<std::size_t>(x | want));
            x = (x - free) & free;
        } while (x != 0);
    }
};

inline EventMask event_mask(const JointTable& t, std::span<const Literal> lits) {
    EventMask e;
    for (const auto& l : lits) {
        std::uint64_t b = std::uint64_t{1} << t.bit(l.var);
        std::uint64_t w = l.positive ? b : 0;
        if ((e.mask & b) && (e.want & b) != w) e.impossible = true;
        e.mask |= b;
        e.want |= w;
    }
    return e;
}

inline double event_probability(const JointTable& t, const EventMask& e) {
    double s = 0.0;
    e.for_each_match(t.size(), [&](std::size_t i) { s += t[i]; });
    return s;
}

inline double event_probability(const JointTable& t, std::span<const Literal> lits) {
    return event_probability(t, event_mask(t, lits));
}

inline JointTable uniform(std::vector<Variable> scope) {
    if (scope.empty()) throw Error("uniform table needs a nonempty scope");
    if (scope.size() > kMaxTableVariables)
        throw Error("table scope of " + std::to_string(scope.size()) + " variables exceeds the cap of " +
                    std::to_string(kMaxTableVariables));
    std::size_t n = std::size_t{1} << scope.size();
    return JointTable(std::move(scope), std::vector<double>(n, 1.0 / static_cast<double>(n)));
}

/// Sums out every variable not in `subscope`; the result follows `subscope` order.
inline JointTable marginalize(const JointTable& t, const std::vector<Variable>& subscope) {
    if (subscope.empty()) throw Error("marginalize needs a nonempty subscope");
    std::vector<std::size_t> bits;
    for (const auto& v : subscope) {
        if (!t.contains(v.index)) throw Error("variable '" + v.name + "' is not in the table scope");
        bits.push_back(t.bit(v.index));
    }
    std::vector<double> out(std::size_t{1} << subscope.size(), 0.0);
    const std::size_t k = subscope.size();
    for (std::size_t s = 0; s < t.size(); ++s) {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < k; ++i) idx |= ((s >> bits[i]) & 1U) << (k - 1 - i);
        out[idx] += t[s];
    }
    return JointTable(subscope, std::move(out));
}

inline double conditional(const JointTable& t, const Literal& target, std::span<const Literal> given) {
    auto g = event_mask(t, given);
    double pg = event_probability(t, g);
    if (pg < kZeroMass) throw Error("conditioning event has zero probability");
    std::vector<Literal> joint(given.begin(), given.end());
    joint.push_back(target);
    return event_probability(t, joint) / pg;
}

/// P(event | given) for a literal conjunction as event.
inline double conditional(const JointTable& t, std::span<const Literal> event, std::span<const Literal> given) {
    auto g = event_mask(t, given);
    double pg = event_probability(t, g);
    if (pg < kZeroMass) throw Error("conditioning event has zero probability");
    std::vector<Literal> joint(given.begin(), given.end());
    joint.insert(joint.end(), event.begin(), event.end());
    return event_probability(t, joint) / pg;
}

inline bool covers(const JointTable& t, const Constraint& c) {
    for (VarId v : constraint_scope(c)) {
        if (!t.contains(v)) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Residuals
// ---------------------------------------------------------------------------

struct Residual {
    double current = 0.0;
    double target = 0.0;
    double residual = 0.0;       // current - target on the conditional scale
    double event_mass = 1.0;     // P(condition event) for conditionals, 1 for marginals
    bool undefined = false;      // conditioning event has zero mass

    double magnitude() const { return undefined ? 1.0 : std::abs(residual); }

    /// |row . p| of the homogeneous linear encoding: P(E) * |P(x|E) - mu| for conditionals.
    double linear_magnitude() const { return undefined ? 1.0 : event_mass * std::abs(residual); }
};

struct ResidualEntry : Residual {
    std::size_t constraint = 0;  // index into the constraint set
    std::string text;
};

struct ResidualReport {
    std::vector<ResidualEntry> entries;
    double universal = 0.0;  // sum - 1

    double max_magnitude() const {
        double m = std::abs(universal);
        for (const auto& e : entries) m = std::max(m, e.magnitude());
        return m;
    }
};

/// A constraint resolved to bit masks over one table layout.
struct CompiledConstraint {
    EventMask event;               // condition event (conditionals) or the cell (marginals)
    std::uint64_t target_bit = 0;  // conditionals only
    bool conditional = false;
    double value = 0.0;
};

inline CompiledConstraint compile_constraint(const JointTable& t, const Constraint& c) {
    CompiledConstraint out;
    out.value = constraint_value(c);
    if (const auto* cc = std::get_if<ConditionalConstraint>(&c)) {
        out.conditional = true;
        out.event = event_mask(t, cc->condition);
        out.target_bit = std::uint64_t{1} << t.bit(cc->target.var);
    } else {
        out.event = event_mask(t, std::get<MarginalConstraint>(c).literals);
    }
    return out;
}

inline Residual constraint_residual(const JointTable& t, const CompiledConstraint& c) {
    Residual e;
    e.target = c.value;
    double pe = 0.0, pxe = 0.0;
    c.event.for_each_match(t.size(), [&](std::size_t s) {
        pe += t[s];
        if (s & c.target_bit) pxe += t[s];
    });
    if (c.conditional) {
        e.event_mass = pe;
        if (pe < kZeroMass) {
            e.undefined = true;
            e.current = std::nan("");
            e.residual = std::nan("");
            return e;
        }
        e.current = pxe / pe;
    } else {
        e.current = pe;
    }
    e.residual = e.current - e.target;
    return e;
}

/// Residual of one constraint against a table. Labels are filled only when `names` is given.
inline ResidualEntry constraint_residual(const JointTable& t, const Constraint& c,
                                         const std::vector<Variable>* names = nullptr) {
    ResidualEntry e;
    static_cast<Residual&>(e) = constraint_residual(t, compile_constraint(t, c));
    if (names) e.text = constraint_text(c, *names);
    return e;
}

/// One entry per constraint plus the universal residual. `names` supplies variable names
/// for labels; pass the model's variable list.
inline ResidualReport residuals(const JointTable& t, const ConstraintSet& cs, const std::vector<Variable>& names) {
    ResidualReport r;
    r.universal = t.sum() - 1.0;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!covers(t, cs[i])) throw Error("table scope does not cover " + constraint_text(cs[i], names));
        auto e = constraint_residual(t, cs[i], &names);
        e.constraint = i;
        r.entries.push_back(std::move(e));
    }
    return r;
}

// ---------------------------------------------------------------------------
// Independence checks
// ---------------------------------------------------------------------------

/// Enumerates assignments of `vars` as literal lists.
inline std::vector<std::vector<Literal>> assignments(const std::vector<VarId>& vars) {
    std::vector<std::vector<Literal>> out;
    std::size_t n = std::size_t{1} << vars.size();
    for (std::size_t a = 0; a < n; ++a) {
        std::vector<Literal> lits;
        for (std::size_t i = 0; i < vars.size(); ++i) lits.push_back({vars[i], ((a >> (vars.size() - 1 - i)) & 1U) != 0});
        out.push_back(std::move(lits));
    }
    return out;
}

/// x independent of y given `given`: for each assignment g with P(g) > tol,
/// |P(x,y|g) - P(x|g)P(y|g)| <= tol.
inline bool check_ci(const JointTable& t, VarId x, VarId y, const std::vector<VarId>& given,
                     double tol = kDefaultIndependenceTol) {
    if (x == y) throw Error("check_ci needs two distinct variables");
    for (VarId g : given) {
        if (g == x || g == y) throw Error("conditioning set must exclude the tested variables");
    }
    for (const auto& g : assignments(given)) {
        double pg = event_probability(t, g);
        if (pg <= tol) continue;
        auto with = [&](std::initializer_list<Literal> extra) {
            std::vector<Literal> lits = g;
            lits.insert(lits.end(), extra);
            return event_probability(t, lits) / pg;
        };
        double px = with({{x, true}});
        double py = with({{y, true}});
        double pxy = with({{x, true}, {y, true}});
        if (std::abs(pxy - px * py) > tol) return false;
    }
    return true;
}

/// Markov property w.r.t. `ng`: P(x_i | rest) = P(x_i | neighbors of x_i) wherever the
/// conditioning assignment has positive probability.
inline bool check_mrf(const JointTable& t, const NeighborGraph& ng, double tol = kDefaultIndependenceTol) {
    for (std::size_t i = 0; i < ng.size(); ++i) {
        VarId xi = ng.nodes[i].index;
        std::vector<VarId> rest, nbrs;
        for (std::size_t j = 0; j < ng.size(); ++j) {
            if (j == i) continue;
            rest.push_back(ng.nodes[j].index);
            if (ng.adjacent(i, j)) nbrs.push_back(ng.nodes[j].index);
        }
        for (const auto& a : assignments(rest)) {
            double pa = event_probability(t, a);
            if (pa < kZeroMass) continue;
            std::vector<Literal> local;
            for (const auto& l : a) {
                if (std::find(nbrs.begin(), nbrs.end(), l.var) != nbrs.end()) local.push_back(l);
            }
            Literal target{xi, true};
            if (std::abs(conditional(t, target, a) - conditional(t, target, local)) > tol) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline std::string state_bits(std::size_t state, std::size_t arity) {
    std::string s(arity, '0');
    for (std::size_t i = 0; i < arity; ++i) {
        if ((state >> (arity - 1 - i)) & 1U) s[i] = '1';
    }
    return s;
}

/// `scope A C D` header followed by one `<bits> <probability>` line per state.
inline std::string serialize_table(const JointTable& t) {
    std::ostringstream os;
    os << "scope";
    for (const auto& v : t.scope()) os << ' ' << v.name;
    os << '\n';
    char buf[32];
    for (std::size_t s = 0; s < t.size(); ++s) {
        std::snprintf(buf, sizeof(buf), "%.6f", t[s]);
        os << state_bits(s, t.arity()) << ' ' << buf << '\n';
    }
    return os.str();
}

}  // namespace mcenet

#endif  // MCENET_DIST_HPP
