#include "rfim/approx.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace rfim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PairTerm {
    int u, v;
    double coupling;
    double distance;
};

std::vector<PairTerm> interaction_pairs(const IsingModel& model) {
    if (!model.all_positioned())
        throw InvalidModel("approximation graphs need positions on every spin");
    std::vector<PairTerm> pairs;
    const int n = model.spin_count();
    if (model.kind() == CouplingKind::LongRange) {
        pairs.reserve(static_cast<size_t>(n) * (n - 1) / 2);
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                pairs.push_back({i, j, model.coupling(i, j), model.distance(i, j)});
    } else {
        for (const auto& e : model.edges())
            pairs.push_back({e.u, e.v, e.coupling, model.distance(e.u, e.v)});
    }
    return pairs;
}

} // namespace

int TreeDecomposition::width() const {
    size_t largest = 0;
    for (const auto& b : bags) largest = std::max(largest, b.size());
    return static_cast<int>(largest) - 1;
}

double restricted_energy(const IsingModel& model, const std::vector<WeightedEdge>& kept,
                         const SpinState& state) {
    if (state.size() != model.spin_count()) throw InvalidModel("state: length mismatch");
    CompensatedSum sum;
    for (const auto& e : kept) sum.add(-e.coupling * state.at(e.u) * state.at(e.v));
    for (int k = 0; k < model.spin_count(); ++k)
        sum.add(-model.spins()[static_cast<size_t>(k)].field * state.at(k));
    return sum.value();
}

ApproxGraph full_graph(const IsingModel& model) {
    ApproxGraph g;
    if (model.kind() == CouplingKind::LongRange) {
        const int n = model.spin_count();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                g.kept_edges.push_back({i, j, model.coupling(i, j)});
    } else {
        for (const auto& e : model.edges()) g.kept_edges.push_back({e.u, e.v, e.coupling});
    }
    g.pruned_weight = 0.0;
    g.epsilon = 0.0;
    g.cutoff = kInf;
    g.certified = true;
    return g;
}

ApproxGraph build_approx_graph(const IsingModel& model, double epsilon) {
    if (!(epsilon > 0.0)) throw InvalidModel("epsilon: must be > 0");
    const auto pairs = interaction_pairs(model);
    const int n = model.spin_count();
    const double budget = n * epsilon / 2.0;

    // The closed-form cutoff is a starting point only; certification below is
    // what actually guarantees |H - H_approx| <= n*eps/2.
    const bool formula_ok = model.kind() == CouplingKind::LongRange && model.alpha() > 1.0;
    double cutoff = formula_ok ? cutoff_formula(model.alpha(), epsilon) : 0.0;

    ApproxGraph g;
    g.epsilon = epsilon;
    for (;;) {
        g.kept_edges.clear();
        CompensatedSum pruned;
        size_t pruned_count = 0;
        for (const auto& p : pairs) {
            if (p.distance > cutoff) {
                pruned.add(std::abs(p.coupling));
                ++pruned_count;
            } else {
                g.kept_edges.push_back({p.u, p.v, p.coupling});
            }
        }
        g.pruned_weight = pruned.value();
        g.cutoff = pruned_count == 0 ? kInf : cutoff;
        if (g.pruned_weight <= budget) {
            g.certified = true;
            g.degenerate_complete = pruned_count == 0 && !formula_ok &&
                                    model.kind() == CouplingKind::LongRange && !pairs.empty();
            return g;
        }
        cutoff = cutoff <= 0.0 ? std::max(model.min_distance(), 1e-12) : cutoff * 2.0;
    }
}

double cutoff_formula(double alpha, double epsilon) {
    if (!(alpha > 1.0)) throw InvalidModel("cutoff formula: needs alpha > 1");
    return std::pow(epsilon * (alpha - 1.0), 1.0 / (1.0 - alpha));
}

TreeDecomposition path_decomposition_1d(int n, int window) {
    if (n < 1) throw InvalidModel("path decomposition: need at least one vertex");
    if (window < 0) throw InvalidModel("path decomposition: window must be >= 0");
    TreeDecomposition d;
    if (window >= n) {
        std::vector<int> all(static_cast<size_t>(n));
        std::iota(all.begin(), all.end(), 0);
        d.bags.push_back(std::move(all));
        return d;
    }
    const int count = n - window;
    d.bags.reserve(static_cast<size_t>(count));
    for (int i = 0; i < count; ++i) {
        std::vector<int> bag(static_cast<size_t>(window) + 1);
        std::iota(bag.begin(), bag.end(), i);
        d.bags.push_back(std::move(bag));
    }
    for (int i = 0; i + 1 < count; ++i) d.tree.emplace_back(i, i + 1);
    return d;
}

std::optional<DecompositionViolation> validate_decomposition(int n_vertices,
                                                             const std::vector<WeightedEdge>& edges,
                                                             const TreeDecomposition& decomp) {
    const int bags = static_cast<int>(decomp.bags.size());
    if (bags == 0) return DecompositionViolation{0, "no bags"};
    for (const auto& [a, b] : decomp.tree)
        if (a < 0 || a >= bags || b < 0 || b >= bags)
            return DecompositionViolation{0, "tree edge references missing bag"};
    if (static_cast<int>(decomp.tree.size()) != bags - 1)
        return DecompositionViolation{0, "tree must have exactly bags-1 edges"};
    // connectivity of T
    {
        std::vector<std::vector<int>> adj(static_cast<size_t>(bags));
        for (const auto& [a, b] : decomp.tree) {
            adj[static_cast<size_t>(a)].push_back(b);
            adj[static_cast<size_t>(b)].push_back(a);
        }
        std::vector<char> seen(static_cast<size_t>(bags), 0);
        std::vector<int> stack{0};
        seen[0] = 1;
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            for (int y : adj[static_cast<size_t>(x)])
                if (!seen[static_cast<size_t>(y)]) {
                    seen[static_cast<size_t>(y)] = 1;
                    stack.push_back(y);
                }
        }
        for (int b = 0; b < bags; ++b)
            if (!seen[static_cast<size_t>(b)])
                return DecompositionViolation{0, "tree is disconnected at bag " + std::to_string(b)};
    }

    std::vector<std::vector<int>> containing(static_cast<size_t>(n_vertices));
    for (int b = 0; b < bags; ++b)
        for (int v : decomp.bags[static_cast<size_t>(b)]) {
            if (v < 0 || v >= n_vertices)
                return DecompositionViolation{0, "bag " + std::to_string(b) + " names missing vertex " +
                                                     std::to_string(v)};
            containing[static_cast<size_t>(v)].push_back(b);
        }

    for (int v = 0; v < n_vertices; ++v)
        if (containing[static_cast<size_t>(v)].empty())
            return DecompositionViolation{1, "vertex " + std::to_string(v) + " is in no bag"};

    for (const auto& e : edges) {
        bool covered = false;
        for (int b : containing[static_cast<size_t>(e.u)]) {
            const auto& bag = decomp.bags[static_cast<size_t>(b)];
            if (std::find(bag.begin(), bag.end(), e.v) != bag.end()) {
                covered = true;
                break;
            }
        }
        if (!covered)
            return DecompositionViolation{2, "edge (" + std::to_string(e.u) + "," + std::to_string(e.v) +
                                                 ") has no common bag"};
    }

    // axiom 3: bags containing v induce a connected subtree
    std::vector<std::vector<int>> adj(static_cast<size_t>(bags));
    for (const auto& [a, b] : decomp.tree) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (int v = 0; v < n_vertices; ++v) {
        const auto& host = containing[static_cast<size_t>(v)];
        std::vector<char> in_host(static_cast<size_t>(bags), 0);
        for (int b : host) in_host[static_cast<size_t>(b)] = 1;
        std::vector<char> seen(static_cast<size_t>(bags), 0);
        std::vector<int> stack{host.front()};
        seen[static_cast<size_t>(host.front())] = 1;
        int reached = 0;
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            ++reached;
            for (int y : adj[static_cast<size_t>(x)])
                if (in_host[static_cast<size_t>(y)] && !seen[static_cast<size_t>(y)]) {
                    seen[static_cast<size_t>(y)] = 1;
                    stack.push_back(y);
                }
        }
        if (reached != static_cast<int>(host.size()))
            return DecompositionViolation{3, "vertex " + std::to_string(v) +
                                                 " appears in disconnected bags"};
    }
    return std::nullopt;
}

namespace {

// Assignment encoding: bag vertices sorted ascending; bit (size-1-j) of the
// mask is the sign of vertex j, so ascending masks enumerate assignments in
// lexicographic order, and strict < tie-breaks pick the smaller one.
inline int sign_of(uint32_t mask, int j, int size) { return (mask >> (size - 1 - j)) & 1u ? 1 : -1; }

struct DpBag {
    std::vector<int> verts; // sorted
    std::vector<WeightedEdge> edges;
    std::vector<int> fields;
};

} // namespace

DpResult dp_ground_state(const IsingModel& model, const ApproxGraph& graph,
                         const TreeDecomposition& decomp) {
    const int n = model.spin_count();
    if (auto bad = validate_decomposition(n, graph.kept_edges, decomp))
        throw InvalidModel("decomposition axiom " + std::to_string(bad->axiom) + ": " + bad->detail);

    const int bag_count = static_cast<int>(decomp.bags.size());
    std::vector<DpBag> bags(static_cast<size_t>(bag_count));
    for (int b = 0; b < bag_count; ++b) {
        bags[static_cast<size_t>(b)].verts = decomp.bags[static_cast<size_t>(b)];
        auto& vs = bags[static_cast<size_t>(b)].verts;
        std::sort(vs.begin(), vs.end());
        vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
        if (vs.size() > 24) throw GuardExceeded("bag of " + std::to_string(vs.size()) + " vertices exceeds DP limit 24");
    }

    auto lowest_bag_with = [&](int v) {
        for (int b = 0; b < bag_count; ++b) {
            const auto& vs = bags[static_cast<size_t>(b)].verts;
            if (std::binary_search(vs.begin(), vs.end(), v)) return b;
        }
        return -1;
    };
    // Each edge/field term is charged to the lowest-index bag containing it,
    // so the DP counts every term exactly once.
    for (const auto& e : graph.kept_edges) {
        for (int b = 0; b < bag_count; ++b) {
            const auto& vs = bags[static_cast<size_t>(b)].verts;
            if (std::binary_search(vs.begin(), vs.end(), e.u) &&
                std::binary_search(vs.begin(), vs.end(), e.v)) {
                bags[static_cast<size_t>(b)].edges.push_back(e);
                break;
            }
        }
    }
    for (int v = 0; v < n; ++v) bags[static_cast<size_t>(lowest_bag_with(v))].fields.push_back(v);

    // Root at bag 0, order children by DFS.
    std::vector<std::vector<int>> adj(static_cast<size_t>(bag_count));
    for (const auto& [a, b] : decomp.tree) {
        adj[static_cast<size_t>(a)].push_back(b);
        adj[static_cast<size_t>(b)].push_back(a);
    }
    for (auto& a : adj) std::sort(a.begin(), a.end());
    std::vector<int> parent(static_cast<size_t>(bag_count), -1);
    std::vector<int> order;
    order.reserve(static_cast<size_t>(bag_count));
    {
        std::vector<int> stack{0};
        std::vector<char> seen(static_cast<size_t>(bag_count), 0);
        seen[0] = 1;
        while (!stack.empty()) {
            const int x = stack.back();
            stack.pop_back();
            order.push_back(x);
            for (int y : adj[static_cast<size_t>(x)])
                if (!seen[static_cast<size_t>(y)]) {
                    seen[static_cast<size_t>(y)] = 1;
                    parent[static_cast<size_t>(y)] = x;
                    stack.push_back(y);
                }
        }
    }

    struct ChildTable {
        int child = -1;
        std::vector<int> sep;             // shared vertices, sorted
        std::vector<int> sep_in_parent;   // their positions in the parent bag
        std::vector<int> sep_in_child;    // and in the child bag
        std::vector<double> best;         // indexed by separator assignment
        std::vector<uint32_t> best_mask;  // argmin child assignment
    };
    std::vector<std::vector<ChildTable>> child_tables(static_cast<size_t>(bag_count));
    std::vector<std::vector<double>> table(static_cast<size_t>(bag_count));

    auto positions_in = [](const std::vector<int>& bag, const std::vector<int>& verts) {
        std::vector<int> out;
        out.reserve(verts.size());
        for (int v : verts)
            out.push_back(static_cast<int>(std::lower_bound(bag.begin(), bag.end(), v) - bag.begin()));
        return out;
    };
    auto project = [](const std::vector<int>& positions, uint32_t mask, int size) {
        uint32_t out = 0;
        for (int pos : positions) out = (out << 1) | ((mask >> (size - 1 - pos)) & 1u);
        return out;
    };

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        const int b = *it;
        const auto& bag = bags[static_cast<size_t>(b)];
        const int sz = static_cast<int>(bag.verts.size());
        const uint32_t total = uint32_t{1} << sz;
        auto& f = table[static_cast<size_t>(b)];
        f.assign(total, 0.0);

        // resolve edge endpoints and field vertices to bag positions once
        struct LocalEdge {
            int iu, iv;
            double coupling;
        };
        std::vector<LocalEdge> local_edges;
        local_edges.reserve(bag.edges.size());
        auto bag_index = [&](int v) {
            return static_cast<int>(std::lower_bound(bag.verts.begin(), bag.verts.end(), v) -
                                    bag.verts.begin());
        };
        for (const auto& e : bag.edges) local_edges.push_back({bag_index(e.u), bag_index(e.v), e.coupling});
        std::vector<std::pair<int, double>> local_fields;
        local_fields.reserve(bag.fields.size());
        for (int v : bag.fields)
            local_fields.emplace_back(bag_index(v), model.spins()[static_cast<size_t>(v)].field);

        for (uint32_t m = 0; m < total; ++m) {
            double local = 0.0;
            for (const auto& e : local_edges)
                local += -e.coupling * sign_of(m, e.iu, sz) * sign_of(m, e.iv, sz);
            for (const auto& [idx, h] : local_fields) local += -h * sign_of(m, idx, sz);
            f[m] = local;
        }

        // fold in children (already processed)
        for (int c : adj[static_cast<size_t>(b)]) {
            if (c == parent[static_cast<size_t>(b)]) continue;
            const auto& cbag = bags[static_cast<size_t>(c)];
            ChildTable ct;
            ct.child = c;
            std::set_intersection(bag.verts.begin(), bag.verts.end(), cbag.verts.begin(),
                                  cbag.verts.end(), std::back_inserter(ct.sep));
            ct.sep_in_parent = positions_in(bag.verts, ct.sep);
            ct.sep_in_child = positions_in(cbag.verts, ct.sep);
            const int child_sz = static_cast<int>(cbag.verts.size());
            const uint32_t sep_total = uint32_t{1} << ct.sep.size();
            ct.best.assign(sep_total, kInf);
            ct.best_mask.assign(sep_total, 0);
            const auto& cf = table[static_cast<size_t>(c)];
            for (uint32_t cm = 0; cm < cf.size(); ++cm) {
                const uint32_t s = project(ct.sep_in_child, cm, child_sz);
                if (cf[cm] < ct.best[s]) {
                    ct.best[s] = cf[cm];
                    ct.best_mask[s] = cm;
                }
            }
            for (uint32_t m = 0; m < total; ++m)
                f[m] += ct.best[project(ct.sep_in_parent, m, sz)];
            child_tables[static_cast<size_t>(b)].push_back(std::move(ct));
        }
    }

    // choose root assignment, then walk back down
    const auto& root_table = table[0];
    uint32_t root_best = 0;
    for (uint32_t m = 1; m < root_table.size(); ++m)
        if (root_table[m] < root_table[root_best]) root_best = m;

    std::vector<signed char> assign(static_cast<size_t>(n), 0);
    struct Fill {
        int bag;
        uint32_t mask;
    };
    std::vector<Fill> stack{{0, root_best}};
    while (!stack.empty()) {
        const auto [b, m] = stack.back();
        stack.pop_back();
        const auto& bag = bags[static_cast<size_t>(b)];
        const int sz = static_cast<int>(bag.verts.size());
        for (int j = 0; j < sz; ++j)
            assign[static_cast<size_t>(bag.verts[static_cast<size_t>(j)])] =
                static_cast<signed char>(sign_of(m, j, sz));
        for (const auto& ct : child_tables[static_cast<size_t>(b)]) {
            const uint32_t s = project(ct.sep_in_parent, m, sz);
            stack.push_back({ct.child, ct.best_mask[s]});
        }
    }

    DpResult out{SpinState(std::move(assign)), 0.0};
    out.energy = restricted_energy(model, graph.kept_edges, out.state);
    return out;
}

PtasReport ptas_solve(const IsingModel& model, double epsilon) {
    const int n = model.spin_count();
    if (n == 0) throw InvalidModel("ptas: empty model");
    for (int i = 0; i < n; ++i) {
        const auto& p = model.spins()[static_cast<size_t>(i)].pos;
        if (!p) throw InvalidModel("ptas: spin " + std::to_string(i) + " has no position");
        if (p->y != 0.0) throw InvalidModel("ptas: spins must lie on the x-axis");
        if (std::abs(p->x - std::round(p->x)) > 1e-9)
            throw InvalidModel("ptas: spin " + std::to_string(i) + " is off the integer lattice");
        if (i > 0 && !(p->x > model.spins()[static_cast<size_t>(i) - 1].pos->x))
            throw InvalidModel("ptas: spin ids must be ordered by coordinate");
    }

    ApproxGraph graph = build_approx_graph(model, epsilon);
    int window = 1;
    for (const auto& e : graph.kept_edges) window = std::max(window, std::abs(e.u - e.v));
    TreeDecomposition decomp = path_decomposition_1d(n, window);
    DpResult dp = dp_ground_state(model, graph, decomp);

    PtasReport rep;
    rep.energy = model.energy(dp.state).total;
    rep.energy_pruned = dp.energy;
    rep.state = std::move(dp.state);
    rep.epsilon = epsilon;
    rep.cutoff = graph.cutoff;
    rep.width = decomp.width();
    rep.certified = graph.certified;
    rep.pruned_weight = graph.pruned_weight;
    rep.error_bound = n * epsilon;
    return rep;
}

} // namespace rfim
