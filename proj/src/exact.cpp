#include "rfim/exact.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <limits>
#include <queue>
#include <thread>
#include <unordered_set>

namespace rfim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
// Incremental energies are re-anchored this often; collected candidates are
// re-evaluated exactly afterwards, so the slack only has to dominate the
// drift between anchors.
constexpr uint64_t kAnchorInterval = 4096;

// Candidates within this margin of the sweep threshold are collected and
// re-evaluated exactly; it only has to dominate the incremental drift, which
// scales with the model's total term magnitude.
double collect_slack(double threshold, double term_scale) {
    return 1e-9 * (term_scale + std::abs(threshold));
}

int block_bits(int n) { return n >= 12 ? 6 : 0; }

// Flattened coupling data for the sweep. The pair list preserves the exact
// summation order of IsingModel::energy so re-evaluations agree bit for bit.
struct Dense {
    int n = 0;
    std::vector<std::pair<int, int>> pair_edges;
    std::vector<double> pair_coupling;
    std::vector<double> field;
    std::vector<double> matrix; // n*n, zero where no edge
    double term_scale = 0.0;    // sum of |J| plus sum of |h|

    explicit Dense(const IsingModel& model) {
        n = model.spin_count();
        field.resize(static_cast<size_t>(n));
        for (int i = 0; i < n; ++i) field[static_cast<size_t>(i)] = model.spins()[static_cast<size_t>(i)].field;
        matrix.assign(static_cast<size_t>(n) * static_cast<size_t>(n), 0.0);
        if (model.kind() == CouplingKind::LongRange) {
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j) {
                    const double J = model.coupling(i, j);
                    pair_edges.emplace_back(i, j);
                    pair_coupling.push_back(J);
                    matrix[static_cast<size_t>(i) * n + j] = J;
                    matrix[static_cast<size_t>(j) * n + i] = J;
                }
        } else {
            for (const auto& e : model.edges()) {
                pair_edges.emplace_back(e.u, e.v);
                pair_coupling.push_back(e.coupling);
                matrix[static_cast<size_t>(e.u) * n + e.v] = e.coupling;
                matrix[static_cast<size_t>(e.v) * n + e.u] = e.coupling;
            }
        }
        for (double J : pair_coupling) term_scale += std::abs(J);
        for (double h : field) term_scale += std::abs(h);
    }

    double exact_energy(uint64_t mask) const {
        CompensatedSum inter;
        for (size_t e = 0; e < pair_edges.size(); ++e) {
            const auto [i, j] = pair_edges[e];
            const double si = (mask >> i) & 1 ? 1.0 : -1.0;
            const double sj = (mask >> j) & 1 ? 1.0 : -1.0;
            inter.add(-pair_coupling[e] * si * sj);
        }
        CompensatedSum fld;
        for (int k = 0; k < n; ++k) {
            const double sk = (mask >> k) & 1 ? 1.0 : -1.0;
            fld.add(-field[static_cast<size_t>(k)] * sk);
        }
        return inter.value() + fld.value();
    }
};

// Reflected-binary enumeration of one block: the low `p` spin ids are pinned
// to the bits of `block`, the rest are swept with single-flip updates.
template <class Visit>
void run_block(const Dense& d, int p, uint64_t block, Visit&& visit) {
    const int n = d.n;
    const int m = n - p;
    std::vector<double> sigma(static_cast<size_t>(n));
    std::vector<double> local(static_cast<size_t>(n));
    uint64_t mask = block;
    double energy = 0.0;

    auto anchor = [&] {
        for (int i = 0; i < n; ++i) sigma[static_cast<size_t>(i)] = (mask >> i) & 1 ? 1.0 : -1.0;
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            const double* row = d.matrix.data() + static_cast<size_t>(i) * n;
            for (int j = 0; j < n; ++j) acc += row[j] * sigma[static_cast<size_t>(j)];
            local[static_cast<size_t>(i)] = acc;
        }
        energy = d.exact_energy(mask);
    };

    anchor();
    visit(mask, energy);
    const uint64_t steps = m == 0 ? 1 : (uint64_t{1} << m);
    for (uint64_t s = 1; s < steps; ++s) {
        const int k = p + std::countr_zero(s);
        const double sk = sigma[static_cast<size_t>(k)];
        energy += 2.0 * sk * (local[static_cast<size_t>(k)] + d.field[static_cast<size_t>(k)]);
        mask ^= uint64_t{1} << k;
        sigma[static_cast<size_t>(k)] = -sk;
        const double delta = -2.0 * sk;
        const double* row = d.matrix.data() + static_cast<size_t>(k) * n;
        for (int j = 0; j < n; ++j) local[static_cast<size_t>(j)] += delta * row[j];
        if ((s & (kAnchorInterval - 1)) == 0) anchor();
        visit(mask, energy);
    }
}

// Runs every block, farming block indices out to `opts.workers` threads.
// Per-block results land in `visitors[block]`, so any merge that walks the
// visitors in block order is independent of the worker count.
template <class V>
void sweep(const Dense& d, const EnumOptions& opts, std::vector<V>& visitors) {
    const int p = block_bits(d.n);
    const uint64_t blocks = uint64_t{1} << p;
    visitors.resize(blocks);
    std::atomic<uint64_t> next{0};
    auto work = [&] {
        for (;;) {
            const uint64_t b = next.fetch_add(1);
            if (b >= blocks) break;
            run_block(d, p, b, visitors[b]);
        }
    };
    const int workers = std::max(1, std::min<int>(opts.workers, static_cast<int>(blocks)));
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& t : pool) t.join();
    }
}

struct MinVisitor {
    double best = kInf;
    uint64_t best_mask = 0;
    const std::unordered_set<uint64_t>* excluded = nullptr;
    void operator()(uint64_t mask, double e) {
        if (excluded && excluded->count(mask)) return;
        if (e < best || (e == best && mask < best_mask)) {
            best = e;
            best_mask = mask;
        }
    }
};

struct KthVisitor {
    size_t cap = 0;
    std::priority_queue<double> heap; // max-heap of the cap smallest seen
    void operator()(uint64_t, double e) {
        if (heap.size() < cap) {
            heap.push(e);
        } else if (e < heap.top()) {
            heap.pop();
            heap.push(e);
        }
    }
};

struct CollectVisitor {
    double threshold = 0.0;
    const std::unordered_set<uint64_t>* excluded = nullptr;
    std::vector<uint64_t> taken;
    double best_beyond = kInf; // cheapest sweep energy above the threshold

    void operator()(uint64_t mask, double e) {
        if (excluded && excluded->count(mask)) return;
        if (e <= threshold)
            taken.push_back(mask);
        else
            best_beyond = std::min(best_beyond, e);
    }
};

struct AllVisitor {
    std::vector<double> energies;
    void operator()(uint64_t, double e) { energies.push_back(e); }
};

void check_guard(const IsingModel& model, const EnumOptions& opts, int memory_cap = 62) {
    const int n = model.spin_count();
    if (n > opts.limit_n || n > memory_cap)
        throw GuardExceeded("exhaustive enumeration limited to " +
                            std::to_string(std::min(opts.limit_n, memory_cap)) +
                            " spins (got " + std::to_string(n) + "); use the approximation solver");
}

struct Scored {
    double energy;
    uint64_t mask;
    SpinState state;
};

// Exact re-evaluation of sweep candidates, ordered by (energy, state).
std::vector<Scored> rescore(const IsingModel& model, const std::vector<uint64_t>& masks) {
    std::vector<Scored> out;
    out.reserve(masks.size());
    for (uint64_t m : masks) {
        SpinState s = state_from_mask(m, model.spin_count());
        out.push_back({model.energy(s).total, m, std::move(s)});
    }
    std::sort(out.begin(), out.end(), [](const Scored& a, const Scored& b) {
        if (a.energy != b.energy) return a.energy < b.energy;
        return a.state < b.state;
    });
    return out;
}

} // namespace

SpinState state_from_mask(uint64_t mask, int n) {
    std::vector<signed char> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = (mask >> i) & 1 ? 1 : -1;
    return SpinState(std::move(v));
}

uint64_t mask_from_state(const SpinState& state) {
    uint64_t mask = 0;
    for (int i = 0; i < state.size(); ++i)
        if (state.at(i) > 0) mask |= uint64_t{1} << i;
    return mask;
}

GroundResult ground_states(const IsingModel& model, const EnumOptions& opts) {
    check_guard(model, opts);
    const int n = model.spin_count();
    if (n == 0) return {0.0, {SpinState{}}};
    Dense d(model);

    std::vector<MinVisitor> mins;
    sweep(d, opts, mins);
    double t0 = kInf;
    for (const auto& v : mins) t0 = std::min(t0, v.best);

    const double threshold = t0 + model.tolerance() + collect_slack(t0, d.term_scale);
    std::vector<CollectVisitor> collectors(size_t{1} << block_bits(n),
                                           CollectVisitor{threshold, nullptr, {}, kInf});
    sweep(d, opts, collectors);
    std::vector<uint64_t> masks;
    for (const auto& c : collectors) masks.insert(masks.end(), c.taken.begin(), c.taken.end());

    auto scored = rescore(model, masks);
    const double emin = scored.front().energy;
    GroundResult out;
    out.energy = emin;
    for (auto& s : scored)
        if (s.energy <= emin + model.tolerance()) out.states.push_back(std::move(s.state));
    return out;
}

LowEnergySet low_energy_set(const IsingModel& model, long long k, const EnumOptions& opts) {
    check_guard(model, opts);
    const int n = model.spin_count();
    if (k < 1) throw InvalidModel("k: must be >= 1");
    if (n == 0) return {{SpinState{}}, 0.0, kInf, kInf};
    const bool whole_space = n < 63 && k >= (int64_t{1} << n);
    if (whole_space && n > 20)
        throw GuardExceeded("whole-space low-energy sets limited to 20 spins");
    Dense d(model);

    LowEnergySet out;
    if (whole_space) {
        std::vector<uint64_t> masks(size_t{1} << n);
        for (size_t m = 0; m < masks.size(); ++m) masks[m] = m;
        auto scored = rescore(model, masks);
        out.max_inner_energy = scored.back().energy;
        out.min_outer_energy = kInf;
        out.gap = kInf;
        for (auto& s : scored) out.states.push_back(std::move(s.state));
        return out;
    }

    double t0;
    {
        std::vector<KthVisitor> kth(size_t{1} << block_bits(n),
                                    KthVisitor{static_cast<size_t>(k), {}});
        sweep(d, opts, kth);
        std::vector<double> pool;
        for (auto& v : kth)
            while (!v.heap.empty()) {
                pool.push_back(v.heap.top());
                v.heap.pop();
            }
        std::nth_element(pool.begin(), pool.begin() + (k - 1), pool.end());
        t0 = pool[static_cast<size_t>(k - 1)];
    }

    const double threshold = t0 + model.tolerance() + collect_slack(t0, d.term_scale);
    std::vector<CollectVisitor> collectors(size_t{1} << block_bits(n),
                                           CollectVisitor{threshold, nullptr, {}, kInf});
    sweep(d, opts, collectors);
    std::vector<uint64_t> masks;
    double beyond_sweep = kInf;
    uint64_t total_states = uint64_t{1} << n;
    for (const auto& c : collectors) {
        masks.insert(masks.end(), c.taken.begin(), c.taken.end());
        beyond_sweep = std::min(beyond_sweep, c.best_beyond);
    }

    auto scored = rescore(model, masks);
    const double boundary = scored[static_cast<size_t>(k - 1)].energy + model.tolerance();
    double min_outer = masks.size() == total_states ? kInf : beyond_sweep;
    for (auto& s : scored) {
        if (s.energy <= boundary) {
            out.max_inner_energy = s.energy;
            out.states.push_back(std::move(s.state));
        } else {
            min_outer = std::min(min_outer, s.energy);
        }
    }
    out.min_outer_energy = min_outer;
    out.gap = min_outer - out.max_inner_energy;
    if (!(out.gap >= 0.0))
        throw std::logic_error("low_energy_set: outer state below inner boundary");
    return out;
}

std::vector<SpectrumLine> energy_spectrum(const IsingModel& model, int top, const EnumOptions& opts) {
    check_guard(model, opts, /*memory_cap=*/24);
    if (top < 1) throw InvalidModel("top: must be >= 1");
    const int n = model.spin_count();
    if (n == 0) return {{0.0, 1}};
    Dense d(model);
    std::vector<AllVisitor> all(size_t{1} << block_bits(n));
    sweep(d, opts, all);
    std::vector<double> energies;
    energies.reserve(size_t{1} << n);
    for (auto& v : all) energies.insert(energies.end(), v.energies.begin(), v.energies.end());
    std::sort(energies.begin(), energies.end());

    std::vector<SpectrumLine> lines;
    size_t i = 0;
    while (i < energies.size() && static_cast<int>(lines.size()) < top) {
        const double level = energies[i];
        long long mult = 0;
        while (i < energies.size() && energies[i] - level <= model.tolerance()) {
            ++mult;
            ++i;
        }
        lines.push_back({level, mult});
    }
    return lines;
}

double min_energy_excluding(const IsingModel& model, const std::vector<uint64_t>& excluded_masks,
                            const EnumOptions& opts) {
    check_guard(model, opts);
    const int n = model.spin_count();
    std::unordered_set<uint64_t> excluded(excluded_masks.begin(), excluded_masks.end());
    if (n < 63 && excluded.size() >= (uint64_t{1} << n)) return kInf;
    Dense d(model);

    std::vector<MinVisitor> mins(size_t{1} << block_bits(n), MinVisitor{kInf, 0, &excluded});
    sweep(d, opts, mins);
    double t0 = kInf;
    for (const auto& v : mins) t0 = std::min(t0, v.best);

    const double threshold = t0 + collect_slack(t0, d.term_scale);
    std::vector<CollectVisitor> collectors(size_t{1} << block_bits(n),
                                           CollectVisitor{threshold, &excluded, {}, kInf});
    sweep(d, opts, collectors);
    double best = kInf;
    for (const auto& c : collectors)
        for (uint64_t m : c.taken)
            best = std::min(best, model.energy(state_from_mask(m, n)).total);
    return best;
}

} // namespace rfim
