#ifndef MCENET_GRAPHOPS_HPP
#define MCENET_GRAPHOPS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mcenet/model.hpp"

namespace mcenet {

using VertexSet = std::vector<std::size_t>;  // sorted node positions
using EdgeSet = std::set<std::pair<std::size_t, std::size_t>>;

struct Hypergraph {
    std::vector<Variable> vertices;
    std::vector<VertexSet> edges;
};

/// Ordering S_0..S_{n-1} of hyperedges (indices into the hypergraph's edge list) with the
/// running intersection property: S_i's overlap with all earlier sets lies inside
/// S_{anchor[i]}. `anchor` holds positions within `order`; anchor[0] is 0.
struct RipOrder {
    std::vector<std::size_t> order;
    std::vector<std::size_t> anchor;
};

struct Decomposition {
    std::vector<Variable> nodes;
    EdgeSet fill_in;
    std::vector<VertexSet> cliques;  // maximal cliques of the filled graph, lexicographic
    RipOrder rip;
    std::uint64_t cost = 0;          // sum over cliques of 2^|clique|

    /// Cliques listed in running-intersection order.
    std::vector<VertexSet> ordered_cliques() const {
        std::vector<VertexSet> out;
        for (auto i : rip.order) out.push_back(cliques[i]);
        return out;
    }
};

struct AnnealOptions {
    std::uint64_t seed = 1;
    std::optional<double> initial_temperature{};  // default: cost range of 20 random probes
    double cooling = 0.95;
    int moves_per_temperature = 50;
    int restarts = 3;
    double min_temperature_ratio = 1e-3;

    void validate() const {
        if (initial_temperature && !(*initial_temperature > 0.0)) throw Error("initial temperature must be positive");
        if (!(cooling > 0.0 && cooling < 1.0)) throw Error("cooling factor must lie in (0, 1)");
        if (moves_per_temperature < 1 || restarts < 1) throw Error("anneal step counts must be at least 1");
        if (!(min_temperature_ratio > 0.0 && min_temperature_ratio < 1.0))
            throw Error("minimum temperature ratio must lie in (0, 1)");
    }
};

inline std::string vertex_set_text(const VertexSet& s, const std::vector<Variable>& nodes) {
    std::string out;
    for (auto v : s) out += nodes.at(v).name;
    return out;
}

// ---------------------------------------------------------------------------
// Cliques and chordality
// ---------------------------------------------------------------------------

namespace detail {

using Adjacency = std::vector<std::vector<bool>>;

inline void bron_kerbosch(const Adjacency& adj, VertexSet& r, std::vector<std::size_t> p, std::vector<std::size_t> x,
                          std::vector<VertexSet>& out) {
    if (p.empty() && x.empty()) {
        VertexSet c = r;
        std::sort(c.begin(), c.end());
        out.push_back(std::move(c));
        return;
    }
    // pivot: vertex of P u X with most neighbors in P
    std::size_t pivot = p.empty() ? x.front() : p.front();
    std::size_t best = 0;
    for (const auto* set : {&p, &x}) {
        for (auto u : *set) {
            std::size_t n = static_cast<std::size_t>(std::count_if(p.begin(), p.end(), [&](auto v) { return adj[u][v]; }));
            if (n > best) best = n, pivot = u;
        }
    }
    std::vector<std::size_t> candidates;
    for (auto v : p) {
        if (!adj[pivot][v]) candidates.push_back(v);
    }
    for (auto v : candidates) {
        std::vector<std::size_t> np, nx;
        for (auto u : p) {
            if (adj[v][u]) np.push_back(u);
        }
        for (auto u : x) {
            if (adj[v][u]) nx.push_back(u);
        }
        r.push_back(v);
        bron_kerbosch(adj, r, np, nx, out);
        r.pop_back();
        p.erase(std::find(p.begin(), p.end(), v));
        x.push_back(v);
    }
}

inline Adjacency adjacency(std::size_t n, const EdgeSet& edges) {
    Adjacency adj(n, std::vector<bool>(n, false));
    for (const auto& [a, b] : edges) adj[a][b] = adj[b][a] = true;
    return adj;
}

inline std::vector<VertexSet> maximal_cliques(const Adjacency& adj) {
    std::vector<VertexSet> out;
    VertexSet r;
    std::vector<std::size_t> p(adj.size());
    std::iota(p.begin(), p.end(), std::size_t{0});
    if (!p.empty()) bron_kerbosch(adj, r, p, {}, out);
    std::sort(out.begin(), out.end());
    return out;
}

/// Maximum cardinality search followed by a perfect-elimination check.
inline bool is_chordal(const Adjacency& adj) {
    const std::size_t n = adj.size();
    std::vector<int> weight(n, 0);
    std::vector<bool> numbered(n, false);
    std::vector<std::size_t> order;  // visit order; its reverse is a PEO for chordal graphs
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!numbered[v] && (pick == n || weight[v] > weight[pick])) pick = v;
        }
        numbered[pick] = true;
        order.push_back(pick);
        for (std::size_t u = 0; u < n; ++u) {
            if (!numbered[u] && adj[pick][u]) ++weight[u];
        }
    }
    std::vector<std::size_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) pos[order[i]] = i;
    // earlier-visited neighbors of each vertex must form a clique
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t v = order[i];
        std::vector<std::size_t> earlier;
        for (std::size_t u = 0; u < n; ++u) {
            if (adj[v][u] && pos[u] < i) earlier.push_back(u);
        }
        if (earlier.empty()) continue;
        std::size_t parent = *std::max_element(earlier.begin(), earlier.end(), [&](auto a, auto b) { return pos[a] < pos[b]; });
        for (auto u : earlier) {
            if (u != parent && !adj[parent][u]) return false;
        }
    }
    return true;
}

/// Greedy elimination: repeatedly removes the vertex needing the fewest fill edges (ties:
/// lower degree, then lower index). Returns the fill edges added.
inline EdgeSet min_fill_elimination(Adjacency adj) {
    const std::size_t n = adj.size();
    std::vector<bool> gone(n, false);
    EdgeSet fill;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n, pick_fill = 0, pick_deg = 0;
        for (std::size_t v = 0; v < n; ++v) {
            if (gone[v]) continue;
            std::vector<std::size_t> nb;
            for (std::size_t u = 0; u < n; ++u) {
                if (!gone[u] && adj[v][u]) nb.push_back(u);
            }
            std::size_t f = 0;
            for (std::size_t i = 0; i < nb.size(); ++i) {
                for (std::size_t j = i + 1; j < nb.size(); ++j) {
                    if (!adj[nb[i]][nb[j]]) ++f;
                }
            }
            if (pick == n || f < pick_fill || (f == pick_fill && nb.size() < pick_deg)) {
                pick = v;
                pick_fill = f;
                pick_deg = nb.size();
            }
        }
        std::vector<std::size_t> nb;
        for (std::size_t u = 0; u < n; ++u) {
            if (!gone[u] && adj[pick][u]) nb.push_back(u);
        }
        for (std::size_t i = 0; i < nb.size(); ++i) {
            for (std::size_t j = i + 1; j < nb.size(); ++j) {
                if (!adj[nb[i]][nb[j]]) {
                    adj[nb[i]][nb[j]] = adj[nb[j]][nb[i]] = true;
                    fill.insert({std::min(nb[i], nb[j]), std::max(nb[i], nb[j])});
                }
            }
        }
        gone[pick] = true;
    }
    return fill;
}

inline std::uint64_t clique_cost(const std::vector<VertexSet>& cliques) {
    std::uint64_t c = 0;
    for (const auto& q : cliques) c += std::uint64_t{1} << q.size();
    return c;
}

}  // namespace detail

/// Inclusion-maximal complete subgraphs, each sorted, listed lexicographically.
inline std::vector<VertexSet> maximal_cliques(const NeighborGraph& g) {
    return detail::maximal_cliques(detail::adjacency(g.size(), g.edges));
}

inline bool is_chordal(const NeighborGraph& g) { return detail::is_chordal(detail::adjacency(g.size(), g.edges)); }

// ---------------------------------------------------------------------------
// Hypergraph acyclicity
// ---------------------------------------------------------------------------

/// Graham reduction: alternately drop vertices that occur in a single hyperedge and
/// hyperedges contained in another. Acyclic iff nothing remains.
inline bool graham_acyclic(const Hypergraph& h) {
    std::vector<std::set<std::size_t>> edges;
    for (const auto& e : h.edges) edges.emplace_back(e.begin(), e.end());
    bool changed = true;
    while (changed) {
        changed = false;
        std::map<std::size_t, int> occurrences;
        for (const auto& e : edges) {
            for (auto v : e) ++occurrences[v];
        }
        for (auto& e : edges) {
            for (auto it = e.begin(); it != e.end();) {
                if (occurrences[*it] == 1) {
                    it = e.erase(it);
                    changed = true;
                } else {
                    ++it;
                }
            }
        }
        for (std::size_t i = 0; i < edges.size(); ++i) {
            bool contained = edges[i].empty();
            for (std::size_t j = 0; j < edges.size() && !contained; ++j) {
                if (j != i && std::includes(edges[j].begin(), edges[j].end(), edges[i].begin(), edges[i].end()))
                    contained = true;
            }
            if (contained) {
                edges.erase(edges.begin() + static_cast<std::ptrdiff_t>(i));
                changed = true;
                break;
            }
        }
    }
    return edges.empty();
}

namespace detail {

/// Finds j < i with (S_i intersect union of S_0..S_{i-1}) inside S_j, for every i.
inline std::optional<std::vector<std::size_t>> rip_anchors(const std::vector<VertexSet>& ordered) {
    std::vector<std::size_t> anchor(ordered.size(), 0);
    std::set<std::size_t> seen;
    for (std::size_t i = 0; i < ordered.size(); ++i) {
        VertexSet sep;
        for (auto v : ordered[i]) {
            if (seen.count(v)) sep.push_back(v);
        }
        if (i > 0) {
            bool found = false;
            for (std::size_t j = 0; j < i && !found; ++j) {
                if (std::includes(ordered[j].begin(), ordered[j].end(), sep.begin(), sep.end())) {
                    anchor[i] = j;
                    found = true;
                }
            }
            if (!found) return std::nullopt;
        }
        seen.insert(ordered[i].begin(), ordered[i].end());
    }
    return anchor;
}

}  // namespace detail

/// Running-intersection ordering by maximum cardinality search over hyperedges: repeatedly
/// take the edge with the most already-covered vertices (ties: lowest index). The result is
/// verified; a failure means the hypergraph is cyclic.
inline std::optional<RipOrder> rip_order(const Hypergraph& h) {
    const std::size_t n = h.edges.size();
    std::vector<bool> used(n, false);
    std::set<std::size_t> marked;
    RipOrder r;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t pick = n, best = 0;
        for (std::size_t e = 0; e < n; ++e) {
            if (used[e]) continue;
            std::size_t c = static_cast<std::size_t>(
                std::count_if(h.edges[e].begin(), h.edges[e].end(), [&](auto v) { return marked.count(v) > 0; }));
            if (pick == n || c > best) pick = e, best = c;
        }
        used[pick] = true;
        r.order.push_back(pick);
        marked.insert(h.edges[pick].begin(), h.edges[pick].end());
    }
    std::vector<VertexSet> ordered;
    for (auto i : r.order) {
        VertexSet s = h.edges[i];
        std::sort(s.begin(), s.end());
        ordered.push_back(std::move(s));
    }
    auto anchors = detail::rip_anchors(ordered);
    if (!anchors) return std::nullopt;
    r.anchor = std::move(*anchors);
    return r;
}

// ---------------------------------------------------------------------------
// Fill-in search
// ---------------------------------------------------------------------------

namespace detail {

struct FillState {
    EdgeSet fill;            // realized fill (chordal)
    std::vector<VertexSet> cliques;
    std::uint64_t cost = 0;
    std::uint64_t penalty = 0;

    std::uint64_t score() const { return cost + penalty; }
};

/// Ordering used to pick among equal-score decompositions.
inline bool better(const FillState& a, const FillState& b) {
    if (a.cost != b.cost) return a.cost < b.cost;
    if (a.fill.size() != b.fill.size()) return a.fill.size() < b.fill.size();
    return a.fill < b.fill;
}

/// Evaluates a candidate fill. Non-chordal candidates are completed by min-fill elimination
/// and charged one unit per completion edge.
inline FillState evaluate_fill(const NeighborGraph& g, const EdgeSet& candidate) {
    EdgeSet all = g.edges;
    all.insert(candidate.begin(), candidate.end());
    Adjacency adj = adjacency(g.size(), all);
    FillState s;
    s.fill = candidate;
    if (!is_chordal(adj)) {
        EdgeSet extra = min_fill_elimination(adj);
        s.penalty = extra.size();
        for (const auto& e : extra) adj[e.first][e.second] = adj[e.second][e.first] = true;
        s.fill.insert(extra.begin(), extra.end());
    }
    s.cliques = maximal_cliques(adj);
    s.cost = clique_cost(s.cliques);
    return s;
}

/// Drops fill edges whose removal keeps the graph chordal without raising the cost.
inline FillState minimalize(const NeighborGraph& g, FillState s) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (const auto& e : s.fill) {
            EdgeSet trial = s.fill;
            trial.erase(e);
            EdgeSet all = g.edges;
            all.insert(trial.begin(), trial.end());
            Adjacency adj = adjacency(g.size(), all);
            if (!is_chordal(adj)) continue;
            auto cl = maximal_cliques(adj);
            auto c = clique_cost(cl);
            if (c <= s.cost) {
                s.fill = std::move(trial);
                s.cliques = std::move(cl);
                s.cost = c;
                changed = true;
                break;
            }
        }
    }
    s.penalty = 0;
    return s;
}

inline Decomposition assemble(const NeighborGraph& g, const FillState& s) {
    Decomposition d;
    d.nodes = g.nodes;
    d.fill_in = s.fill;
    d.cliques = s.cliques;
    d.cost = s.cost;
    auto r = rip_order(Hypergraph{g.nodes, d.cliques});
    if (!r) throw Error("internal: clique hypergraph of a chordal graph is not acyclic");
    d.rip = std::move(*r);
    return d;
}

}  // namespace detail

/// Deterministic minimum-fill triangulation, pruned to a minimal fill set.
inline Decomposition fill_in_greedy(const NeighborGraph& g) {
    auto fill = detail::min_fill_elimination(detail::adjacency(g.size(), g.edges));
    auto s = detail::minimalize(g, detail::evaluate_fill(g, fill));
    return detail::assemble(g, s);
}

/// Simulated annealing over fill-edge subsets minimizing sum 2^|clique|, started from the
/// greedy solution. Moves toggle one non-edge of the input graph. Reproducible given the seed.
inline Decomposition fill_in_anneal(const NeighborGraph& g, const AnnealOptions& opts = {}) {
    opts.validate();
    const auto greedy = detail::minimalize(
        g, detail::evaluate_fill(g, detail::min_fill_elimination(detail::adjacency(g.size(), g.edges))));

    std::vector<std::pair<std::size_t, std::size_t>> moves;
    for (std::size_t a = 0; a < g.size(); ++a) {
        for (std::size_t b = a + 1; b < g.size(); ++b) {
            if (!g.adjacent(a, b)) moves.push_back({a, b});
        }
    }
    if (moves.empty()) return detail::assemble(g, greedy);

    std::map<EdgeSet, std::pair<detail::FillState, detail::FillState>> memo;  // candidate -> (evaluated, minimalized)
    auto visit = [&](const EdgeSet& cand) -> const std::pair<detail::FillState, detail::FillState>& {
        auto it = memo.find(cand);
        if (it == memo.end()) {
            auto eval = detail::evaluate_fill(g, cand);
            auto realized = detail::minimalize(g, eval);
            it = memo.emplace(cand, std::make_pair(std::move(eval), std::move(realized))).first;
        }
        return it->second;
    };

    detail::FillState best = greedy;
    for (int restart = 0; restart < opts.restarts; ++restart) {
        std::seed_seq seq{static_cast<std::uint32_t>(opts.seed), static_cast<std::uint32_t>(opts.seed >> 32),
                          static_cast<std::uint32_t>(restart)};
        std::mt19937_64 rng(seq);
        std::uniform_int_distribution<std::size_t> pick_move(0, moves.size() - 1);
        std::uniform_real_distribution<double> unit(0.0, 1.0);

        auto toggled = [&](const EdgeSet& f, std::size_t m) {
            EdgeSet out = f;
            if (!out.erase(moves[m])) out.insert(moves[m]);
            return out;
        };

        EdgeSet current = greedy.fill;
        double current_score = static_cast<double>(greedy.score());

        double temperature = 0.0;
        if (opts.initial_temperature) {
            temperature = *opts.initial_temperature;
        } else {
            double lo = current_score, hi = current_score;
            for (int probe = 0; probe < 20; ++probe) {
                double s = static_cast<double>(visit(toggled(current, pick_move(rng))).first.score());
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
            temperature = hi > lo ? hi - lo : 1.0;
        }
        const double floor = temperature * opts.min_temperature_ratio;

        while (temperature > floor) {
            for (int step = 0; step < opts.moves_per_temperature; ++step) {
                EdgeSet cand = toggled(current, pick_move(rng));
                const auto& [eval, realized] = visit(cand);
                double score = static_cast<double>(eval.score());
                double delta = score - current_score;
                if (delta <= 0.0 || unit(rng) < std::exp(-delta / temperature)) {
                    current = std::move(cand);
                    current_score = score;
                }
                if (detail::better(realized, best)) best = realized;
            }
            temperature *= opts.cooling;
        }
    }
    return detail::assemble(g, best);
}

/// Decomposition for an explicit chordal fill (used to test fixed answers).
inline Decomposition decomposition_with_fill(const NeighborGraph& g, const EdgeSet& fill) {
    EdgeSet all = g.edges;
    all.insert(fill.begin(), fill.end());
    if (!is_chordal(NeighborGraph{g.nodes, all})) throw Error("fill does not make the graph chordal");
    auto s = detail::evaluate_fill(g, fill);
    return detail::assemble(g, s);
}

enum class FillMethod { Greedy, Anneal };

/// Neighbor graph plus edges completing every constraint scope, so each constraint fits in
/// a clique even when a marginal breaks the scope rule.
inline NeighborGraph coverage_graph(const Model& m) {
    NeighborGraph g = neighbor_graph(m);
    for (const auto& c : m.constraints.items) {
        auto scope = constraint_scope(c);
        for (std::size_t i = 0; i < scope.size(); ++i) {
            for (std::size_t j = i + 1; j < scope.size(); ++j) g.add_edge(scope[i], scope[j]);
        }
    }
    return g;
}

inline Decomposition decompose(const Model& m, FillMethod method = FillMethod::Greedy, const AnnealOptions& opts = {}) {
    auto g = coverage_graph(m);
    return method == FillMethod::Greedy ? fill_in_greedy(g) : fill_in_anneal(g, opts);
}

// ---------------------------------------------------------------------------
// Directed separation
// ---------------------------------------------------------------------------

/// Nodes reachable from x by directed paths of length >= 1 (x itself only via a cycle).
inline std::set<std::size_t> descendants(const BeliefNetwork& net, std::size_t x) {
    std::set<std::size_t> seen;
    std::vector<std::size_t> stack = net.children(x);
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        if (!seen.insert(v).second) continue;
        for (auto c : net.children(v)) stack.push_back(c);
    }
    return seen;
}

/// True iff every simple path between x and y (treating each arc as its own link, so C->D
/// and D->C are distinct links) has a pair of successive links blocked by `se`. Head-to-head
/// meetings at z block unless z or a descendant of z is in `se`; other meetings block iff
/// z is in `se`. Cycles in the network are allowed.
inline bool d_separated(const BeliefNetwork& net, std::size_t x, std::size_t y, const std::set<std::size_t>& se) {
    if (x == y) throw Error("d-separation needs two distinct variables");
    if (se.count(x) || se.count(y)) throw Error("separating set must exclude the queried variables");
    const std::size_t n = net.nodes.size();

    struct Link {
        std::size_t other;
        bool head_here;  // arrow points at the current node
    };
    std::vector<std::vector<Link>> links(n);
    for (const auto& [a, b] : net.arcs) {
        links[a].push_back({b, false});
        links[b].push_back({a, true});
    }
    std::vector<bool> opens_collider(n, false);
    for (std::size_t z = 0; z < n; ++z) {
        bool hit = se.count(z) > 0;
        for (auto d : descendants(net, z)) hit = hit || se.count(d) > 0;
        opens_collider[z] = hit;
    }

    std::vector<bool> on_path(n, false);
    // DFS over simple paths; `arrow_in` says whether the link we arrived by points at `cur`.
    std::function<bool(std::size_t, bool)> open_path = [&](std::size_t cur, bool arrow_in) -> bool {
        if (cur == y) return true;
        for (const auto& l : links[cur]) {
            if (on_path[l.other]) continue;
            bool head_to_head = arrow_in && l.head_here;
            bool blocked = head_to_head ? !opens_collider[cur] : se.count(cur) > 0;
            if (blocked) continue;
            on_path[l.other] = true;
            bool found = open_path(l.other, !l.head_here);
            on_path[l.other] = false;
            if (found) return true;
        }
        return false;
    };

    on_path[x] = true;
    for (const auto& l : links[x]) {
        if (on_path[l.other]) continue;
        on_path[l.other] = true;
        bool found = open_path(l.other, !l.head_here);
        on_path[l.other] = false;
        if (found) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Graph text format
// ---------------------------------------------------------------------------

/// `nodes A B C`, `edge A B` (undirected), `arc A B` (directed), `hedge A C D`.
struct GraphFile {
    std::vector<Variable> nodes;
    EdgeSet edges;
    std::set<std::pair<std::size_t, std::size_t>> arcs;
    std::vector<VertexSet> hedges;

    NeighborGraph neighbor_graph() const { return {nodes, edges}; }
    BeliefNetwork network() const { return {nodes, arcs}; }
    Hypergraph hypergraph() const { return {nodes, hedges}; }

    std::optional<std::size_t> find(std::string_view name) const {
        for (const auto& v : nodes) {
            if (v.name == name) return v.index;
        }
        return std::nullopt;
    }
};

inline GraphFile parse_graph_file(std::string_view text) {
    GraphFile gf;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
        std::istringstream ls(line);
        std::string kw;
        if (!(ls >> kw)) continue;
        std::vector<std::string> names;
        for (std::string w; ls >> w;) names.push_back(w);
        auto id = [&](const std::string& name) {
            auto v = gf.find(name);
            if (!v) throw ParseError(line_no, 1, "undeclared node '" + name + "'");
            return *v;
        };
        if (kw == "nodes") {
            for (const auto& nm : names) {
                if (gf.find(nm)) throw ParseError(line_no, 1, "duplicate node '" + nm + "'");
                gf.nodes.push_back({nm, gf.nodes.size()});
            }
        } else if (kw == "edge" || kw == "arc") {
            if (names.size() != 2) throw ParseError(line_no, 1, "'" + kw + "' takes two nodes");
            auto a = id(names[0]), b = id(names[1]);
            if (a == b) throw ParseError(line_no, 1, "self-loops are not allowed");
            if (kw == "edge") gf.edges.insert({std::min(a, b), std::max(a, b)});
            else gf.arcs.insert({a, b});
        } else if (kw == "hedge") {
            if (names.empty()) throw ParseError(line_no, 1, "'hedge' needs at least one node");
            VertexSet s;
            for (const auto& nm : names) s.push_back(id(nm));
            std::sort(s.begin(), s.end());
            s.erase(std::unique(s.begin(), s.end()), s.end());
            gf.hedges.push_back(std::move(s));
        } else {
            throw ParseError(line_no, 1, "unknown keyword '" + kw + "'");
        }
    }
    return gf;
}

/// Fill edges, cliques, running-intersection order and cost as text.
inline std::string decomposition_report(const Decomposition& d) {
    std::ostringstream os;
    os << "fill-in:";
    if (d.fill_in.empty()) os << " (none)";
    for (const auto& [a, b] : d.fill_in) os << ' ' << d.nodes[a].name << '-' << d.nodes[b].name;
    os << "\ncliques:";
    for (const auto& c : d.cliques) os << ' ' << vertex_set_text(c, d.nodes);
    os << "\nrip-order:";
    for (std::size_t i = 0; i < d.rip.order.size(); ++i) {
        os << ' ' << vertex_set_text(d.cliques[d.rip.order[i]], d.nodes);
        if (i > 0) os << "<" << vertex_set_text(d.cliques[d.rip.order[d.rip.anchor[i]]], d.nodes);
    }
    os << "\ncost: " << d.cost << '\n';
    return os.str();
}

}  // namespace mcenet

#endif  // MCENET_GRAPHOPS_HPP
