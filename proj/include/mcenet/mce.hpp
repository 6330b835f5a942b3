#ifndef MCENET_MCE_HPP
#define MCENET_MCE_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "mcenet/dist.hpp"

namespace mcenet {

/// A constraint that no update of the current table can satisfy (its event has no mass).
class UnreachableConstraint : public Error {
 public:
    using Error::Error;
};

class ConvergenceError : public Error {
 public:
    using Error::Error;
};

enum class Schedule { GradientThreshold, RoundRobin };

struct SolverOptions {
    double tolerance = 1e-4;
    int max_iterations = 500;
    int max_cycles = 100;
    Schedule schedule = Schedule::GradientThreshold;

    static SolverOptions dual_defaults() { return {1e-8, 500, 100, Schedule::GradientThreshold}; }
    static SolverOptions successive_defaults() { return {1e-4, 500, 100, Schedule::GradientThreshold}; }

    void validate() const {
        if (!(tolerance > 0.0)) throw Error("solver tolerance must be positive");
        if (max_iterations < 1 || max_cycles < 1) throw Error("iteration caps must be at least 1");
    }
};

// ---------------------------------------------------------------------------
// Closed-form single-constraint updates
// ---------------------------------------------------------------------------

/// Jeffrey's rule for one marginal cell: rescales the event block to v and its complement
/// to 1 - v.
inline void jeffrey_update_in_place(JointTable& out, const CompiledConstraint& mc) {
    double pe = event_probability(out, mc.event);
    double v = mc.value;
    double pn = out.sum() - pe;
    if (v > 0.0 && pe <= 0.0) throw UnreachableConstraint("marginal event has zero prior mass");
    if (v < 1.0 && pn <= 0.0) throw UnreachableConstraint("complement of the marginal event has zero prior mass");

    double in_scale = pe > 0.0 ? v / pe : 0.0;
    double out_scale = pn > 0.0 ? (1.0 - v) / pn : 0.0;
    for (std::size_t s = 0; s < out.size(); ++s) out[s] *= mc.event.matches(s) ? in_scale : out_scale;
    out.normalize();
}

inline JointTable jeffrey_update(const JointTable& prior, const MarginalConstraint& mc) {
    JointTable out = prior;
    jeffrey_update_in_place(out, compile_constraint(out, mc));
    return out;
}

/// Closed-form MCE posterior for P(target | condition) = mu. Within the conditioning event the
/// target-false block is scaled by t^mu and the target-true block by t^(mu - 1), where
/// t = (1 - mu) P(E, x) / (mu P(E, ~x)); states outside the event keep their mass, then
/// everything is renormalized. mu in {0, 1} is applied as hard conditioning.
inline void conditional_update_in_place(JointTable& out, const CompiledConstraint& cc) {
    const JointTable& prior = out;
    const auto& cond = cc.event;
    const std::uint64_t tbit = cc.target_bit;
    double mass_false = 0.0, mass_true = 0.0;
    cond.for_each_match(prior.size(), [&](std::size_t s) { ((s & tbit) ? mass_true : mass_false) += prior[s]; });
    const double mu = cc.value;
    if (mass_false + mass_true <= 0.0) throw UnreachableConstraint("conditioning event has zero prior mass");
    if (mu > 0.0 && mass_true <= 0.0) throw UnreachableConstraint("target is impossible within the conditioning event");
    if (mu < 1.0 && mass_false <= 0.0) throw UnreachableConstraint("target is certain within the conditioning event");

    double f_false, f_true;
    if (mu <= 0.0) {
        f_false = 1.0;
        f_true = 0.0;
    } else if (mu >= 1.0) {
        f_false = 0.0;
        f_true = 1.0;
    } else {
        double t = ((1.0 - mu) * mass_true) / (mu * mass_false);
        f_false = std::pow(t, mu);
        f_true = f_false / t;
    }

    cond.for_each_match(out.size(), [&](std::size_t s) { out[s] *= (s & tbit) ? f_true : f_false; });
    out.normalize();
}

inline JointTable conditional_update(const JointTable& prior, const ConditionalConstraint& cc) {
    JointTable out = prior;
    conditional_update_in_place(out, compile_constraint(out, cc));
    return out;
}

inline void apply_constraint_in_place(JointTable& t, const CompiledConstraint& c) {
    if (c.conditional) conditional_update_in_place(t, c);
    else jeffrey_update_in_place(t, c);
}

inline void apply_constraint_in_place(JointTable& t, const Constraint& c) {
    apply_constraint_in_place(t, compile_constraint(t, c));
}

inline JointTable apply_constraint(const JointTable& prior, const Constraint& c) {
    JointTable out = prior;
    apply_constraint_in_place(out, c);
    return out;
}

// ---------------------------------------------------------------------------
// Exact dual solve
// ---------------------------------------------------------------------------

/// Homogeneous linear encoding of the constraints over a table's states, together with the
/// prior. The dual objective is log sum_s q_s exp((A^T lambda)_s); its minimizer yields the
/// I-projection p_s proportional to q_s exp((A^T lambda)_s).
struct DualProblem {
    Eigen::VectorXd prior;
    Eigen::MatrixXd rows;  // one row per constraint, one column per state

    Eigen::Index constraints() const { return rows.rows(); }
    Eigen::Index states() const { return rows.cols(); }
};

inline Eigen::RowVectorXd encode_constraint(const JointTable& t, const Constraint& c) {
    Eigen::RowVectorXd row = Eigen::RowVectorXd::Zero(static_cast<Eigen::Index>(t.size()));
    if (const auto* cc = std::get_if<ConditionalConstraint>(&c)) {
        auto cond = event_mask(t, cc->condition);
        std::uint64_t tbit = std::uint64_t{1} << t.bit(cc->target.var);
        for (std::size_t s = 0; s < t.size(); ++s) {
            if (cond.matches(s)) row(static_cast<Eigen::Index>(s)) = (s & tbit) ? 1.0 - cc->value : -cc->value;
        }
    } else {
        const auto& mc = std::get<MarginalConstraint>(c);
        auto e = event_mask(t, mc.literals);
        for (std::size_t s = 0; s < t.size(); ++s)
            row(static_cast<Eigen::Index>(s)) = (e.matches(s) ? 1.0 : 0.0) - mc.value;
    }
    return row;
}

inline DualProblem make_dual_problem(const JointTable& prior, const ConstraintSet& cs) {
    DualProblem d;
    d.prior = Eigen::Map<const Eigen::VectorXd>(prior.values().data(), static_cast<Eigen::Index>(prior.size()));
    d.rows.resize(static_cast<Eigen::Index>(cs.size()), static_cast<Eigen::Index>(prior.size()));
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!covers(prior, cs[i])) throw Error("prior scope does not cover every constraint");
        d.rows.row(static_cast<Eigen::Index>(i)) = encode_constraint(prior, cs[i]);
    }
    return d;
}

namespace detail {

/// Normalized exponential-family weights q_s exp(z_s), computed with a max shift.
/// Returns log-normalizer through `log_z`.
inline Eigen::VectorXd tilted(const Eigen::VectorXd& prior, const Eigen::VectorXd& z, double& log_z) {
    Eigen::VectorXd lw(z.size());
    double mx = -std::numeric_limits<double>::infinity();
    for (Eigen::Index s = 0; s < z.size(); ++s) {
        lw(s) = prior(s) > 0.0 ? std::log(prior(s)) + z(s) : -std::numeric_limits<double>::infinity();
        mx = std::max(mx, lw(s));
    }
    Eigen::VectorXd w(z.size());
    for (Eigen::Index s = 0; s < z.size(); ++s) w(s) = std::exp(lw(s) - mx);
    double sum = w.sum();
    log_z = mx + std::log(sum);
    return w / sum;
}

}  // namespace detail

inline double dual_objective(const DualProblem& d, const Eigen::VectorXd& lambda) {
    double log_z = 0.0;
    detail::tilted(d.prior, d.rows.transpose() * lambda, log_z);
    return log_z;
}

/// Analytic gradient: the expected constraint rows under the tilted distribution.
inline Eigen::VectorXd dual_gradient(const DualProblem& d, const Eigen::VectorXd& lambda) {
    double log_z = 0.0;
    Eigen::VectorXd p = detail::tilted(d.prior, d.rows.transpose() * lambda, log_z);
    return d.rows * p;
}

inline Eigen::VectorXd dual_primal(const DualProblem& d, const Eigen::VectorXd& lambda) {
    double log_z = 0.0;
    return detail::tilted(d.prior, d.rows.transpose() * lambda, log_z);
}

namespace detail {

/// Exact minimization of the convex dual along `dir` by safeguarded Newton on the
/// directional derivative.
inline double line_minimize(const DualProblem& d, const Eigen::VectorXd& lambda, const Eigen::VectorXd& dir) {
    const Eigen::VectorXd base = d.rows.transpose() * lambda;
    const Eigen::VectorXd u = d.rows.transpose() * dir;
    auto derivs = [&](double t, double& g, double& h) {
        double log_z = 0.0;
        Eigen::VectorXd p = tilted(d.prior, base + t * u, log_z);
        double m = p.dot(u);
        g = m;
        h = std::max(0.0, p.dot(u.cwiseProduct(u)) - m * m);
    };

    double g0, h0;
    derivs(0.0, g0, h0);
    if (g0 >= 0.0) return 0.0;

    double lo = 0.0, hi = h0 > 0.0 ? -g0 / h0 : 1.0;
    double ghi, hhi;
    for (int k = 0;; ++k) {
        derivs(hi, ghi, hhi);
        if (ghi >= 0.0) break;
        lo = hi;
        hi *= 2.0;
        if (k > 200 || !std::isfinite(hi)) throw ConvergenceError("dual objective unbounded below: constraints inconsistent");
    }
    if (ghi == 0.0) return hi;

    double t = lo;
    for (int it = 0; it < 100; ++it) {
        double g, h;
        derivs(t, g, h);
        if (std::abs(g) <= 1e-14 * -g0) return t;
        if (g < 0.0) lo = t; else hi = t;
        double next = (h > 0.0) ? t - g / h : 0.5 * (lo + hi);
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - t) <= 1e-16 * std::max(1.0, std::abs(t))) return next;
        t = next;
    }
    return t;
}

}  // namespace detail

/// Exact I-projection of `prior` onto the constraint set via nonlinear conjugate gradients
/// (Polak-Ribiere with restarts) on the dual. With a uniform prior this is the maximum
/// entropy distribution. Converged when every conditional-scale residual is <= tolerance.
inline JointTable mce_dual_solve(const JointTable& prior, const ConstraintSet& cs,
                                 SolverOptions opts = SolverOptions::dual_defaults()) {
    opts.validate();
    for (double p : prior.values()) {
        if (!(p > 0.0)) throw Error("dual solve needs a strictly positive prior");
    }
    JointTable base = prior;
    base.normalize();
    if (cs.empty()) return base;

    const DualProblem d = make_dual_problem(base, cs);
    const Eigen::Index k = d.constraints();
    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(k);
    Eigen::VectorXd g = dual_gradient(d, lambda);
    Eigen::VectorXd dir = -g;

    std::vector<CompiledConstraint> compiled;
    for (const auto& c : cs.items) compiled.push_back(compile_constraint(base, c));
    auto max_residual = [&](const JointTable& t) {
        double m = 0.0;
        for (const auto& c : compiled) m = std::max(m, constraint_residual(t, c).magnitude());
        return m;
    };
    JointTable current = base;
    auto load = [&](const Eigen::VectorXd& l) {
        Eigen::VectorXd p = dual_primal(d, l);
        std::copy(p.data(), p.data() + p.size(), current.values().begin());
    };

    for (int it = 0; it < opts.max_iterations; ++it) {
        load(lambda);
        if (max_residual(current) <= opts.tolerance) return current;

        double step = detail::line_minimize(d, lambda, dir);
        lambda += step * dir;
        if (!lambda.allFinite() || lambda.norm() > 1e8)
            throw ConvergenceError("dual multipliers diverge: constraints likely inconsistent or on the boundary");

        Eigen::VectorXd g_new = dual_gradient(d, lambda);
        double beta = std::max(0.0, g_new.dot(g_new - g) / std::max(g.dot(g), std::numeric_limits<double>::min()));
        dir = -g_new + beta * dir;
        if ((it + 1) % k == 0 || dir.dot(g_new) >= 0.0) dir = -g_new;
        g = g_new;
    }
    load(lambda);
    double final_residual = max_residual(current);
    if (final_residual <= opts.tolerance) return current;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.3g", final_residual);
    throw ConvergenceError("dual solve did not converge within " + std::to_string(opts.max_iterations) +
                           " iterations (max residual " + buf + ")");
}

// ---------------------------------------------------------------------------
// Successive updating
// ---------------------------------------------------------------------------

struct TraceEvent {
    int cycle = 0;
    std::size_t constraint = 0;
    std::size_t table = 0;         // updated table: 0 for single-table solves, the clique position otherwise
    double residual_before = 0.0;  // conditional-scale magnitude
    double priority = 0.0;         // schedule priority of the unit this constraint belongs to
    double competitor_max = 0.0;   // best priority among the other units still open this cycle
    double checksum = 0.0;         // sum_s (s + 1) p_s of the updated table
};

struct UpdateTrace {
    std::vector<TraceEvent> events;

    /// Tab-separated: cycle, constraint text, residual before the update.
    std::string to_tsv(const ConstraintSet& cs, const std::vector<Variable>& names) const {
        std::ostringstream os;
        char buf[32];
        for (const auto& e : events) {
            std::snprintf(buf, sizeof(buf), "%.6g", e.residual_before);
            os << e.cycle << '\t' << constraint_text(cs[e.constraint], names) << '\t' << buf << '\n';
        }
        return os.str();
    }
};

inline double table_checksum(const JointTable& t) {
    double s = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) s += static_cast<double>(i + 1) * t[i];
    return s;
}

/// Group of constraints scheduled as one step: a marginal alone, or every conditional that
/// shares a target variable and a condition variable set (one conditional table).
struct ScheduleUnit {
    std::vector<std::size_t> members;
};

inline std::vector<ScheduleUnit> schedule_units(const ConstraintSet& cs) {
    std::vector<ScheduleUnit> units;
    std::map<std::pair<VarId, std::vector<VarId>>, std::size_t> family;
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (const auto* cc = std::get_if<ConditionalConstraint>(&cs[i])) {
            std::vector<VarId> vars;
            for (const auto& l : cc->condition) vars.push_back(l.var);
            std::sort(vars.begin(), vars.end());
            auto key = std::make_pair(cc->target.var, vars);
            if (auto it = family.find(key); it != family.end()) {
                units[it->second].members.push_back(i);
                continue;
            }
            family.emplace(key, units.size());
        }
        units.push_back({{i}});
    }
    return units;
}

struct ScheduleOutcome {
    bool converged = false;
    int cycles = 0;
    double max_residual = 0.0;
};

/// Cycle driver shared by the single-table and decomposed solvers. Each cycle applies every
/// unit once; under the gradient-threshold schedule the next unit is the open one with the
/// largest linear-encoding residual (ties: declaration order). Stops as soon as every
/// residual is within tolerance.
///
/// `residual_of(i)` evaluates constraint i, `apply(i)` applies it and returns the index and
/// contents of the updated table, `end_cycle(c)` observes completed cycles.
template <class ResidualFn, class ApplyFn, class CycleFn>
ScheduleOutcome drive_schedule(const std::vector<ScheduleUnit>& units, std::size_t count,
                               const SolverOptions& opts, ResidualFn&& residual_of, ApplyFn&& apply,
                               CycleFn&& end_cycle, UpdateTrace& trace) {
    opts.validate();
    ScheduleOutcome out;
    std::vector<Residual> current(count);
    auto refresh = [&] {
        double m = 0.0;
        for (std::size_t i = 0; i < count; ++i) {
            current[i] = residual_of(i);
            m = std::max(m, current[i].magnitude());
        }
        return m;
    };
    auto priority = [&](const ScheduleUnit& u) {
        double p = 0.0;
        for (auto i : u.members) p = std::max(p, current[i].linear_magnitude());
        return p;
    };

    std::vector<std::size_t> open;
    std::vector<double> prio;
    for (int cycle = 1; cycle <= opts.max_cycles; ++cycle) {
        open.resize(units.size());
        std::iota(open.begin(), open.end(), std::size_t{0});
        while (!open.empty()) {
            out.max_residual = refresh();
            if (out.max_residual <= opts.tolerance) {
                out.converged = true;
                return out;
            }
            out.cycles = cycle;
            std::size_t pick = 0;
            prio.resize(open.size());
            for (std::size_t k = 0; k < open.size(); ++k) prio[k] = priority(units[open[k]]);
            if (opts.schedule == Schedule::GradientThreshold) {
                for (std::size_t k = 1; k < open.size(); ++k) {
                    if (prio[k] > prio[pick]) pick = k;
                }
            }
            double competitor = 0.0;
            for (std::size_t k = 0; k < open.size(); ++k) {
                if (k != pick) competitor = std::max(competitor, prio[k]);
            }
            bool first = true;
            for (auto i : units[open[pick]].members) {
                TraceEvent ev;
                ev.cycle = cycle;
                ev.constraint = i;
                ev.residual_before = first ? current[i].magnitude() : residual_of(i).magnitude();
                first = false;
                ev.priority = prio[pick];
                ev.competitor_max = competitor;
                auto [table, after] = apply(i);
                ev.table = table;
                ev.checksum = table_checksum(*after);
                trace.events.push_back(std::move(ev));
            }
            open.erase(open.begin() + static_cast<std::ptrdiff_t>(pick));
        }
        end_cycle(cycle);
    }
    out.max_residual = refresh();
    out.converged = out.max_residual <= opts.tolerance;
    return out;
}

struct SuccessiveResult {
    JointTable table;
    UpdateTrace trace;
    bool converged = false;
    int cycles = 0;
    double max_residual = 0.0;
};

/// Alternating single-constraint I-projections (Jeffrey's rule and the conditional rule)
/// on one table until every residual is within tolerance or the cycle cap is hit.
inline SuccessiveResult successive_solve(const JointTable& prior, const ConstraintSet& cs,
                                         const std::vector<Variable>& names,
                                         SolverOptions opts = SolverOptions::successive_defaults()) {
    SuccessiveResult res;
    res.table = prior;
    res.table.normalize();
    for (std::size_t i = 0; i < cs.size(); ++i) {
        if (!covers(res.table, cs[i])) throw Error("prior scope does not cover " + constraint_text(cs[i], names));
    }
    std::vector<CompiledConstraint> compiled;
    for (const auto& c : cs.items) compiled.push_back(compile_constraint(res.table, c));
    auto outcome = drive_schedule(
        schedule_units(cs), cs.size(), opts,
        [&](std::size_t i) { return constraint_residual(res.table, compiled[i]); },
        [&](std::size_t i) {
            apply_constraint_in_place(res.table, compiled[i]);
            return std::pair{std::size_t{0}, &res.table};
        },
        [](int) {}, res.trace);
    res.converged = outcome.converged;
    res.cycles = outcome.cycles;
    res.max_residual = outcome.max_residual;
    return res;
}

}  // namespace mcenet

#endif  // MCENET_MCE_HPP
