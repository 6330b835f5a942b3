#ifndef MCENET_MODEL_HPP
#define MCENET_MODEL_HPP

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

namespace mcenet {

using VarId = std::size_t;

class Error : public std::runtime_error {
 public:
    using std::runtime_error::runtime_error;
};

class ParseError : public Error {
 public:
    ParseError(std::size_t line, std::size_t column, const std::string& what)
        : Error("line " + std::to_string(line) + ", column " + std::to_string(column) + ": " + what),
          line_(line), column_(column) {}

    std::size_t line() const { return line_; }
    std::size_t column() const { return column_; }

 private:
    std::size_t line_;
    std::size_t column_;
};

struct Variable {
    std::string name;
    VarId index = 0;

    friend bool operator==(const Variable&, const Variable&) = default;
};

struct Literal {
    VarId var = 0;
    bool positive = true;

    friend auto operator<=>(const Literal&, const Literal&) = default;
};

/// P(target | condition) = value. The target is always stored with positive polarity.
struct ConditionalConstraint {
    Literal target;
    std::vector<Literal> condition;
    double value = 0.0;

    friend bool operator==(const ConditionalConstraint&, const ConditionalConstraint&) = default;
};

/// P(l_0, ..., l_k) = value: probability of one cell of a variable subset.
struct MarginalConstraint {
    std::vector<Literal> literals;
    double value = 0.0;

    friend bool operator==(const MarginalConstraint&, const MarginalConstraint&) = default;
};

using Constraint = std::variant<ConditionalConstraint, MarginalConstraint>;

/// Declaration-ordered constraints. The universal constraint (sum of all states = 1) is
/// implicit and always in force.
struct ConstraintSet {
    std::vector<Constraint> items;

    std::size_t size() const { return items.size(); }
    bool empty() const { return items.empty(); }
    const Constraint& operator[](std::size_t i) const { return items[i]; }

    std::size_t conditional_count() const {
        return static_cast<std::size_t>(std::count_if(items.begin(), items.end(), [](const Constraint& c) {
            return std::holds_alternative<ConditionalConstraint>(c);
        }));
    }
    std::size_t marginal_count() const { return size() - conditional_count(); }

    friend bool operator==(const ConstraintSet&, const ConstraintSet&) = default;
};

/// Variables mentioned by a constraint, in order: condition then target for conditionals.
inline std::vector<VarId> constraint_scope(const Constraint& c) {
    std::vector<VarId> out;
    if (const auto* cc = std::get_if<ConditionalConstraint>(&c)) {
        for (const auto& l : cc->condition) out.push_back(l.var);
        out.push_back(cc->target.var);
    } else {
        for (const auto& l : std::get<MarginalConstraint>(c).literals) out.push_back(l.var);
    }
    return out;
}

inline double constraint_value(const Constraint& c) {
    return std::visit([](const auto& x) { return x.value; }, c);
}

struct Model {
    std::vector<Variable> variables;
    ConstraintSet constraints;

    std::optional<VarId> find(std::string_view name) const {
        for (const auto& v : variables) {
            if (v.name == name) return v.index;
        }
        return std::nullopt;
    }

    VarId require(std::string_view name) const {
        if (auto id = find(name)) return *id;
        throw Error("unknown variable '" + std::string(name) + "'");
    }

    std::vector<std::string> names() const {
        std::vector<std::string> out;
        for (const auto& v : variables) out.push_back(v.name);
        return out;
    }

    friend bool operator==(const Model&, const Model&) = default;
};

/// Directed graph: arc (i, j) iff some conditional has target j and i in its condition.
struct BeliefNetwork {
    std::vector<Variable> nodes;
    std::set<std::pair<std::size_t, std::size_t>> arcs;

    std::vector<std::size_t> children(std::size_t v) const {
        std::vector<std::size_t> out;
        for (const auto& [a, b] : arcs) {
            if (a == v) out.push_back(b);
        }
        return out;
    }
};

/// Undirected neighbor system. Edges are stored as (min, max) node positions.
struct NeighborGraph {
    std::vector<Variable> nodes;
    std::set<std::pair<std::size_t, std::size_t>> edges;

    std::size_t size() const { return nodes.size(); }

    bool adjacent(std::size_t a, std::size_t b) const {
        if (a == b) return false;
        return edges.count({std::min(a, b), std::max(a, b)}) > 0;
    }

    void add_edge(std::size_t a, std::size_t b) {
        if (a != b) edges.insert({std::min(a, b), std::max(a, b)});
    }

    std::vector<std::size_t> neighbors(std::size_t v) const {
        std::vector<std::size_t> out;
        for (const auto& [a, b] : edges) {
            if (a == v) out.push_back(b);
            if (b == v) out.push_back(a);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

    std::vector<std::vector<bool>> adjacency() const {
        std::vector<std::vector<bool>> adj(size(), std::vector<bool>(size(), false));
        for (const auto& [a, b] : edges) adj[a][b] = adj[b][a] = true;
        return adj;
    }
};

// ---------------------------------------------------------------------------
// Text rendering
// ---------------------------------------------------------------------------

inline std::string format_value(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, end);
}

inline std::string literal_text(const Literal& l, const std::vector<Variable>& vars) {
    return (l.positive ? "" : "~") + vars.at(l.var).name;
}

inline std::string literals_text(const std::vector<Literal>& ls, const std::vector<Variable>& vars) {
    std::string out;
    for (std::size_t i = 0; i < ls.size(); ++i) {
        if (i) out += ",";
        out += literal_text(ls[i], vars);
    }
    return out;
}

/// Event text without the value, e.g. "P(C|~A,D)".
inline std::string constraint_label(const Constraint& c, const std::vector<Variable>& vars) {
    if (const auto* cc = std::get_if<ConditionalConstraint>(&c)) {
        std::string s = "P(" + literal_text(cc->target, vars);
        if (!cc->condition.empty()) s += "|" + literals_text(cc->condition, vars);
        return s + ")";
    }
    return "P(" + literals_text(std::get<MarginalConstraint>(c).literals, vars) + ")";
}

inline std::string constraint_text(const Constraint& c, const std::vector<Variable>& vars) {
    return constraint_label(c, vars) + "=" + format_value(constraint_value(c));
}

inline std::string serialize_model(const Model& m) {
    std::string out = "vars";
    for (const auto& v : m.variables) out += " " + v.name;
    out += "\n";
    for (const auto& c : m.constraints.items) out += constraint_text(c, m.variables) + "\n";
    return out;
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace detail {

class LineScanner {
 public:
    LineScanner(std::string_view text, std::size_t line) : text_(text), line_(line) {}

    void skip_ws() {
        while (pos_ < text_.size() && (text_[pos_] == ' ' || text_[pos_] == '\t' || text_[pos_] == '\r')) ++pos_;
    }

    bool at_end() {
        skip_ws();
        return pos_ >= text_.size();
    }

    bool accept(char c) {
        skip_ws();
        if (pos_ < text_.size() && text_[pos_] == c) {
            ++pos_;
            return true;
        }
        return false;
    }

    void expect(char c) {
        if (!accept(c)) fail(std::string("expected '") + c + "'");
    }

    std::string identifier() {
        skip_ws();
        std::size_t start = pos_;
        auto is_head = [](char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; };
        auto is_tail = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
        if (pos_ >= text_.size() || !is_head(text_[pos_])) fail("expected a variable name");
        while (pos_ < text_.size() && is_tail(text_[pos_])) ++pos_;
        return std::string(text_.substr(start, pos_ - start));
    }

    double number() {
        skip_ws();
        double v = 0.0;
        auto first = text_.data() + pos_;
        auto [ptr, ec] = std::from_chars(first, text_.data() + text_.size(), v);
        if (ec != std::errc() || ptr == first) fail("expected a probability value");
        pos_ += static_cast<std::size_t>(ptr - first);
        return v;
    }

    std::size_t column() const { return pos_ + 1; }

    [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, column(), what); }

 private:
    std::string_view text_;
    std::size_t line_;
    std::size_t pos_ = 0;
};

struct RawLiteral {
    std::string name;
    bool positive;
    std::size_t column;
};

inline std::vector<RawLiteral> literal_list(LineScanner& sc) {
    std::vector<RawLiteral> out;
    do {
        sc.skip_ws();
        bool positive = !sc.accept('~');
        std::size_t col = sc.column();
        out.push_back({sc.identifier(), positive, col});
    } while (sc.accept(','));
    return out;
}

}  // namespace detail

/// Parses the line-oriented constraint format:
///
///     vars A B C
///     P(A|B)=0.7      # conditional
///     P(A,~C)=0.1     # marginal cell
///
/// Negated conditional targets are normalized to positive targets with value 1 - mu.
inline Model parse_model(std::string_view text) {
    Model model;
    bool have_vars = false;
    std::set<std::pair<VarId, std::vector<Literal>>> seen_conditionals;
    std::set<std::vector<Literal>> seen_marginals;

    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        std::string_view line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = (nl == std::string_view::npos) ? text.size() + 1 : nl + 1;
        ++line_no;

        if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        detail::LineScanner sc(line, line_no);
        if (sc.at_end()) continue;

        if (!have_vars) {
            if (sc.identifier() != "vars") throw ParseError(line_no, 1, "file must start with a 'vars' line");
            while (!sc.at_end()) {
                std::size_t col = sc.column();
                std::string name = sc.identifier();
                if (model.find(name)) throw ParseError(line_no, col, "duplicate variable '" + name + "'");
                model.variables.push_back({name, model.variables.size()});
            }
            if (model.variables.empty()) sc.fail("'vars' needs at least one variable");
            have_vars = true;
            continue;
        }

        if (sc.identifier() != "P") throw ParseError(line_no, 1, "expected a constraint 'P(...)=value'");
        sc.expect('(');
        auto left = detail::literal_list(sc);
        std::vector<detail::RawLiteral> right;
        bool conditional = sc.accept('|');
        if (conditional) right = detail::literal_list(sc);
        sc.expect(')');
        sc.expect('=');
        std::size_t value_col = sc.column();
        double value = sc.number();
        if (!sc.at_end()) sc.fail("unexpected trailing text");
        if (!(value >= 0.0 && value <= 1.0)) throw ParseError(line_no, value_col, "probability outside [0, 1]");

        auto resolve = [&](const std::vector<detail::RawLiteral>& raw) {
            std::vector<Literal> out;
            std::set<VarId> used;
            for (const auto& r : raw) {
                auto id = model.find(r.name);
                if (!id) throw ParseError(line_no, r.column, "undeclared variable '" + r.name + "'");
                if (!used.insert(*id).second)
                    throw ParseError(line_no, r.column, "variable '" + r.name + "' appears twice in one scope");
                out.push_back({*id, r.positive});
            }
            return out;
        };

        if (conditional) {
            if (left.size() != 1) throw ParseError(line_no, left[1].column, "a conditional has exactly one target literal");
            auto target = resolve(left).front();
            auto cond = resolve(right);
            for (std::size_t i = 0; i < cond.size(); ++i) {
                if (cond[i].var == target.var)
                    throw ParseError(line_no, right[i].column, "target variable appears in its own condition");
            }
            if (!target.positive) {
                target.positive = true;
                value = 1.0 - value;
            }
            auto key = cond;
            std::sort(key.begin(), key.end());
            if (!seen_conditionals.insert({target.var, key}).second)
                throw ParseError(line_no, 1, "duplicate constraint on the same cell");
            model.constraints.items.emplace_back(ConditionalConstraint{target, std::move(cond), value});
        } else {
            auto lits = resolve(left);
            auto key = lits;
            std::sort(key.begin(), key.end());
            if (!seen_marginals.insert(key).second) throw ParseError(line_no, 1, "duplicate constraint on the same cell");
            model.constraints.items.emplace_back(MarginalConstraint{std::move(lits), value});
        }
    }
    if (!have_vars) throw ParseError(line_no == 0 ? 1 : line_no, 1, "missing 'vars' line");
    return model;
}

inline BeliefNetwork build_network(const Model& m) {
    BeliefNetwork net{m.variables, {}};
    for (const auto& c : m.constraints.items) {
        if (const auto* cc = std::get_if<ConditionalConstraint>(&c)) {
            for (const auto& l : cc->condition) net.arcs.insert({l.var, cc->target.var});
        }
    }
    return net;
}

/// Joins every pair of variables sharing the scope of a conditional constraint.
inline NeighborGraph neighbor_graph(const Model& m) {
    NeighborGraph g{m.variables, {}};
    for (const auto& c : m.constraints.items) {
        if (!std::holds_alternative<ConditionalConstraint>(c)) continue;
        auto scope = constraint_scope(c);
        for (std::size_t i = 0; i < scope.size(); ++i) {
            for (std::size_t j = i + 1; j < scope.size(); ++j) g.add_edge(scope[i], scope[j]);
        }
    }
    return g;
}

struct ScopeWarning {
    std::size_t constraint;
    std::string message;
};

/// Marginal constraints should only mention variables that share a conditional's scope.
/// Violations are legal but reported.
inline std::vector<ScopeWarning> validate_scope_rule(const Model& m) {
    std::vector<std::set<VarId>> scopes;
    for (const auto& c : m.constraints.items) {
        if (std::holds_alternative<ConditionalConstraint>(c)) {
            auto s = constraint_scope(c);
            scopes.emplace_back(s.begin(), s.end());
        }
    }
    std::vector<ScopeWarning> out;
    for (std::size_t i = 0; i < m.constraints.size(); ++i) {
        const auto& c = m.constraints[i];
        if (!std::holds_alternative<MarginalConstraint>(c)) continue;
        auto vars = constraint_scope(c);
        bool covered = std::any_of(scopes.begin(), scopes.end(), [&](const std::set<VarId>& s) {
            return std::all_of(vars.begin(), vars.end(), [&](VarId v) { return s.count(v) > 0; });
        });
        if (!covered) {
            out.push_back({i, constraint_text(c, m.variables) +
                                  " mentions variables outside every conditional constraint's scope"});
        }
    }
    return out;
}

}  // namespace mcenet

#endif  // MCENET_MODEL_HPP
