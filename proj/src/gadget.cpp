#include "rfim/gadget.hpp"

#include <algorithm>
#include <cmath>

namespace rfim {

std::vector<SpinRecord> make_logical_spin(const GadgetSpec& spec, int first_id) {
    if (!(spec.scale > 0.0)) throw InvalidModel("gadget scale: must be > 0");
    std::vector<SpinRecord> out;
    out.reserve(8);
    for (int j = 0; j < 8; ++j) {
        SpinRecord rec;
        rec.id = first_id + j;
        rec.pos = Vec2{spec.center.x + spec.scale * kGadgetOffsets[static_cast<size_t>(j)].x,
                       spec.center.y + spec.scale * kGadgetOffsets[static_cast<size_t>(j)].y};
        rec.field = gadget_pattern_sign(j) * spec.logical_field / 8.0;
        out.push_back(rec);
    }
    return out;
}

IsingModel compose_gadgets(const std::vector<GadgetSpec>& specs) {
    if (specs.empty()) throw InvalidModel("gadgets: need at least one");
    const double alpha = specs.front().alpha;
    for (const auto& s : specs)
        if (s.alpha != alpha) throw InvalidModel("gadgets: mixed alpha values");
    std::vector<SpinRecord> spins;
    spins.reserve(specs.size() * 8);
    for (size_t g = 0; g < specs.size(); ++g) {
        auto frag = make_logical_spin(specs[g], static_cast<int>(g) * 8);
        spins.insert(spins.end(), frag.begin(), frag.end());
    }
    return IsingModel::make_long_range(std::move(spins), alpha, -1.0);
}

SpinState valid_physical_state(const std::vector<int>& logical_values) {
    std::vector<signed char> v;
    v.reserve(logical_values.size() * 8);
    for (int lv : logical_values) {
        if (lv != 1 && lv != -1) throw InvalidModel("logical values must be +1 or -1");
        for (int j = 0; j < 8; ++j)
            v.push_back(static_cast<signed char>(lv * gadget_pattern_sign(j)));
    }
    return SpinState(std::move(v));
}

double gadget_gap(double alpha) {
    if (!(alpha > 0.0)) throw InvalidModel("alpha: must be > 0");
    const double q = -alpha / 2.0;
    // Two excitation families compete for the first level above the patterns:
    // flipping a corner together with an adjacent edge spin (energy exactly
    // -4, dominant for alpha below ~4.5) and flipping a contiguous half of
    // the ring (dominant above). Exhaustive enumeration confirms the minimum
    // of the two closed forms over a dense alpha grid.
    const double pair_flip = 4.0 - 4.0 * std::pow(2.0, q) - 6.0 * std::pow(4.0, q) +
                             8.0 * std::pow(5.0, q) - 2.0 * std::pow(8.0, q);
    const double half_ring = 4.0 - 4.0 * std::pow(2.0, q) - 8.0 * std::pow(4.0, q) +
                             12.0 * std::pow(5.0, q) - 4.0 * std::pow(8.0, q);
    return std::min(pair_flip, half_ring);
}

double logical_energy_split(double alpha, double h) {
    IsingModel gadget = compose_gadgets({GadgetSpec{{0.0, 0.0}, 1.0, alpha, h}});
    const double plus = gadget.energy(valid_physical_state({1})).total;
    const double minus = gadget.energy(valid_physical_state({-1})).total;
    return minus - plus;
}

double min_separation(double alpha, double h_abs, int n_other) {
    if (n_other < 1) throw InvalidModel("min_separation: need at least one outside spin");
    const double half_gap = gadget_gap(alpha) / 2.0;
    if (!(h_abs < half_gap)) throw InvalidModel("logical field exceeds half gap");
    return std::pow((half_gap - h_abs) / (8.0 * n_other), -1.0 / alpha) + std::sqrt(2.0);
}

double effective_coupling(double alpha, double r, double scale) {
    if (!(r > 2.0 * std::sqrt(2.0) * scale)) throw InvalidModel("overlapping gadgets");
    IsingModel pair = compose_gadgets({GadgetSpec{{0.0, 0.0}, scale, alpha, 0.0},
                                       GadgetSpec{{r, 0.0}, scale, alpha, 0.0}});
    const double epp = pair.energy(valid_physical_state({1, 1})).total;
    const double epm = pair.energy(valid_physical_state({1, -1})).total;
    const double emp = pair.energy(valid_physical_state({-1, 1})).total;
    const double emm = pair.energy(valid_physical_state({-1, -1})).total;
    return (epm + emp - epp - emm) / 4.0;
}

double interaction_theory(double alpha, double r) {
    const double coeff = alpha * alpha * (alpha + 2.0) * (alpha + 2.0);
    return -coeff * std::pow(r, -(alpha + 4.0));
}

double estimate_f(double alpha, double r_min, double r_max, int samples) {
    if (!(r_min > 2.0 * std::sqrt(2.0))) throw InvalidModel("estimate_f: r_min must exceed 2*sqrt(2)");
    if (!(r_max >= r_min)) throw InvalidModel("estimate_f: r_max below r_min");
    if (samples < 2) throw InvalidModel("estimate_f: need at least 2 samples");
    const double ratio = r_max / r_min;
    double worst = 0.0;
    for (int i = 0; i < samples; ++i) {
        const double t = static_cast<double>(i) / (samples - 1);
        const double r = r_min * std::pow(ratio, t);
        const double residual = std::abs(effective_coupling(alpha, r) - interaction_theory(alpha, r));
        worst = std::max(worst, residual * std::pow(r, alpha + 5.0));
    }
    return worst;
}

} // namespace rfim
