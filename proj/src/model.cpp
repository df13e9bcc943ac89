#include "rfim/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rfim {

double dist(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return std::sqrt(dx * dx + dy * dy);
}

SpinState::SpinState(std::vector<signed char> values) : values_(std::move(values)) {
    for (size_t i = 0; i < values_.size(); ++i)
        if (values_[i] != 1 && values_[i] != -1)
            throw InvalidModel("state[" + std::to_string(i) + "]: values must be +1 or -1");
}

SpinState SpinState::uniform(int n, int value) {
    if (value != 1 && value != -1) throw InvalidModel("state: values must be +1 or -1");
    return SpinState(std::vector<signed char>(static_cast<size_t>(n), static_cast<signed char>(value)));
}

SpinState SpinState::from_string(std::string_view text) {
    std::vector<signed char> v;
    v.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        if (text[i] == '+')
            v.push_back(1);
        else if (text[i] == '-')
            v.push_back(-1);
        else
            throw InvalidModel("state[" + std::to_string(i) + "]: expected '+' or '-'");
    }
    return SpinState(std::move(v));
}

void SpinState::set(int id, int value) {
    if (value != 1 && value != -1) throw InvalidModel("state: values must be +1 or -1");
    values_[static_cast<size_t>(id)] = static_cast<signed char>(value);
}

SpinState SpinState::flipped(int id) const {
    SpinState out = *this;
    out.values_[static_cast<size_t>(id)] =
        static_cast<signed char>(-out.values_[static_cast<size_t>(id)]);
    return out;
}

SpinState SpinState::negated() const {
    SpinState out = *this;
    for (auto& v : out.values_) v = static_cast<signed char>(-v);
    return out;
}

std::string SpinState::to_string() const {
    std::string s(values_.size(), '?');
    for (size_t i = 0; i < values_.size(); ++i) s[i] = values_[i] > 0 ? '+' : '-';
    return s;
}

void IsingModel::validate_common() const {
    for (size_t i = 0; i < spins_.size(); ++i)
        if (spins_[i].id != static_cast<int>(i))
            throw InvalidModel("spins[" + std::to_string(i) + "].id: ids must be dense 0..n-1 in order");
    if (!(tolerance_ >= 0.0))
        throw InvalidModel("tolerance: must be non-negative");
}

IsingModel IsingModel::make_long_range(std::vector<SpinRecord> spins, double alpha, double c,
                                       double tolerance) {
    IsingModel m;
    m.kind_ = CouplingKind::LongRange;
    m.spins_ = std::move(spins);
    m.alpha_ = alpha;
    m.c_ = c;
    m.tolerance_ = tolerance;
    m.validate_common();
    if (!(alpha > 0.0)) throw InvalidModel("alpha: must be > 0");
    for (size_t i = 0; i < m.spins_.size(); ++i)
        if (!m.spins_[i].pos)
            throw InvalidModel("spins[" + std::to_string(i) + "].pos: long-range models need positions");
    double dmin = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < m.spins_.size(); ++i) {
        for (size_t j = i + 1; j < m.spins_.size(); ++j) {
            const double d = dist(*m.spins_[i].pos, *m.spins_[j].pos);
            if (d == 0.0)
                throw InvalidModel("spins[" + std::to_string(j) + "].pos: coincident spins " +
                                   std::to_string(i) + " and " + std::to_string(j));
            dmin = std::min(dmin, d);
        }
    }
    m.min_distance_ = m.spins_.size() > 1 ? dmin : 0.0;
    const size_t n = m.spins_.size();
    if (n >= 2 && n <= 512) {
        m.coupling_cache_.assign(n * n, 0.0);
        for (size_t i = 0; i < n; ++i)
            for (size_t j = i + 1; j < n; ++j) {
                const double J =
                    m.c_ * std::pow(dist(*m.spins_[i].pos, *m.spins_[j].pos), -m.alpha_);
                m.coupling_cache_[i * n + j] = J;
                m.coupling_cache_[j * n + i] = J;
            }
    }
    return m;
}

IsingModel IsingModel::make_explicit(std::vector<SpinRecord> spins, std::vector<ExplicitEdge> edges,
                                     double tolerance) {
    IsingModel m;
    m.kind_ = CouplingKind::Explicit;
    m.spins_ = std::move(spins);
    m.tolerance_ = tolerance;
    m.validate_common();
    const int n = m.spin_count();
    for (size_t e = 0; e < edges.size(); ++e) {
        auto& ed = edges[e];
        if (ed.u == ed.v)
            throw InvalidModel("edges[" + std::to_string(e) + "]: self coupling undefined");
        if (ed.u < 0 || ed.u >= n || ed.v < 0 || ed.v >= n)
            throw InvalidModel("edges[" + std::to_string(e) + "]: endpoint out of range");
        if (ed.u > ed.v) std::swap(ed.u, ed.v);
    }
    std::sort(edges.begin(), edges.end(), [](const ExplicitEdge& a, const ExplicitEdge& b) {
        return a.u != b.u ? a.u < b.u : a.v < b.v;
    });
    for (size_t e = 1; e < edges.size(); ++e)
        if (edges[e].u == edges[e - 1].u && edges[e].v == edges[e - 1].v)
            throw InvalidModel("edges[" + std::to_string(e) + "]: duplicate edge (" +
                               std::to_string(edges[e].u) + "," + std::to_string(edges[e].v) + ")");
    m.edges_ = std::move(edges);
    m.edge_row_begin_.assign(static_cast<size_t>(n) + 1, 0);
    for (const auto& ed : m.edges_) m.edge_row_begin_[static_cast<size_t>(ed.u) + 1]++;
    for (int u = 0; u < n; ++u)
        m.edge_row_begin_[static_cast<size_t>(u) + 1] += m.edge_row_begin_[static_cast<size_t>(u)];

    double dmin = std::numeric_limits<double>::infinity();
    bool any_pair = false;
    for (size_t i = 0; i < m.spins_.size(); ++i) {
        if (!m.spins_[i].pos) continue;
        for (size_t j = i + 1; j < m.spins_.size(); ++j) {
            if (!m.spins_[j].pos) continue;
            dmin = std::min(dmin, dist(*m.spins_[i].pos, *m.spins_[j].pos));
            any_pair = true;
        }
    }
    m.min_distance_ = any_pair ? dmin : 0.0;
    return m;
}

double IsingModel::alpha() const {
    if (kind_ != CouplingKind::LongRange) throw InvalidModel("alpha: not a long-range model");
    return alpha_;
}

double IsingModel::c() const {
    if (kind_ != CouplingKind::LongRange) throw InvalidModel("c: not a long-range model");
    return c_;
}

bool IsingModel::all_positioned() const {
    for (const auto& s : spins_)
        if (!s.pos) return false;
    return true;
}

double IsingModel::distance(int i, int j) const {
    const auto& a = spins_[static_cast<size_t>(i)].pos;
    const auto& b = spins_[static_cast<size_t>(j)].pos;
    if (!a || !b) throw InvalidModel("distance: spin without position");
    return dist(*a, *b);
}

double IsingModel::coupling(int i, int j) const {
    const int n = spin_count();
    if (i < 0 || i >= n || j < 0 || j >= n) throw InvalidModel("coupling: spin id out of range");
    if (i == j) throw InvalidModel("coupling: self coupling undefined");
    if (kind_ == CouplingKind::LongRange) {
        if (!coupling_cache_.empty())
            return coupling_cache_[static_cast<size_t>(i) * spins_.size() + static_cast<size_t>(j)];
        return c_ * std::pow(distance(i, j), -alpha_);
    }
    if (i > j) std::swap(i, j);
    const auto first = edges_.begin() + edge_row_begin_[static_cast<size_t>(i)];
    const auto last = edges_.begin() + edge_row_begin_[static_cast<size_t>(i) + 1];
    auto it = std::lower_bound(first, last, j,
                               [](const ExplicitEdge& e, int v) { return e.v < v; });
    if (it != last && it->v == j) return it->coupling;
    return 0.0;
}

EnergyBreakdown IsingModel::energy(const SpinState& state) const {
    const int n = spin_count();
    if (state.size() != n)
        throw InvalidModel("state: length " + std::to_string(state.size()) + " does not match spin count " +
                           std::to_string(n));
    CompensatedSum inter;
    if (kind_ == CouplingKind::LongRange) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                inter.add(-coupling(i, j) * state.at(i) * state.at(j));
    } else {
        for (const auto& e : edges_) inter.add(-e.coupling * state.at(e.u) * state.at(e.v));
    }
    CompensatedSum field;
    for (int k = 0; k < n; ++k) field.add(-spins_[static_cast<size_t>(k)].field * state.at(k));
    EnergyBreakdown out;
    out.interaction_term = inter.value();
    out.field_term = field.value();
    out.total = out.interaction_term + out.field_term;
    return out;
}

void IsingModel::accumulate_energy(const SpinState& state, CompensatedSum& acc) const {
    const int n = spin_count();
    if (state.size() != n) throw InvalidModel("state: length mismatch");
    if (kind_ == CouplingKind::LongRange) {
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) acc.add(-coupling(i, j) * state.at(i) * state.at(j));
    } else {
        for (const auto& e : edges_) acc.add(-e.coupling * state.at(e.u) * state.at(e.v));
    }
    for (int k = 0; k < n; ++k) acc.add(-spins_[static_cast<size_t>(k)].field * state.at(k));
}

double IsingModel::delta_energy_flip(const SpinState& state, int k) const {
    const int n = spin_count();
    if (state.size() != n) throw InvalidModel("state: length mismatch");
    if (k < 0 || k >= n) throw InvalidModel("flip: spin id out of range");
    CompensatedSum local;
    if (kind_ == CouplingKind::LongRange) {
        for (int j = 0; j < n; ++j)
            if (j != k) local.add(coupling(k, j) * state.at(j));
    } else {
        for (const auto& e : edges_) {
            if (e.u == k) local.add(e.coupling * state.at(e.v));
            else if (e.v == k) local.add(e.coupling * state.at(e.u));
        }
    }
    return 2.0 * state.at(k) * (local.value() + spins_[static_cast<size_t>(k)].field);
}

} // namespace rfim
