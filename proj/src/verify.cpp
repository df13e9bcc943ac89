#include "rfim/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <random>

#include "rfim/gadget.hpp"

namespace rfim {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

const char* layer_tag(LayerKind k) {
    switch (k) {
        case LayerKind::NnLift: return "nn_lift";
        case LayerKind::GadgetReduce: return "gadget_reduce";
        case LayerKind::GridSnap: return "grid_snap";
    }
    return "?";
}

std::pair<double, double> energy_pair(const IsingModel& model, const SpinState& state) {
    CompensatedSum acc;
    model.accumulate_energy(state, acc);
    return acc.value_pair();
}

// |E_lower - a*E_upper - offset| / a evaluated in hi/lo pieces: the hi parts
// are close and cancel exactly, so signals far below one ulp of the offset's
// magnitude survive. Identical models through the identity map give exactly 0.
double residual_of(const IsingModel& lower, const IsingModel& upper, const MapRecord& rec,
                   double a, const SpinState& lower_state) {
    const SpinState upper_state = decode_layer(rec, lower_state);
    const auto [lhi, llo] = energy_pair(lower, lower_state);
    const auto [uhi, ulo] = energy_pair(upper, upper_state);
    const double hi_part = (lhi - rec.offset) - a * uhi;
    const double lo_part = (llo - rec.offset_lo) - a * ulo;
    return std::abs(hi_part + lo_part) / a;
}

// E_lower - offset at full available precision; constants cancel in gap
// comparisons, so shifting preserves them while recovering resolution.
double shifted_energy(const IsingModel& model, const MapRecord& rec, const SpinState& state) {
    const auto [hi, lo] = energy_pair(model, state);
    return (hi - rec.offset) + (lo - rec.offset_lo);
}

// All valid-pattern masks of a gadget-reduce layer, one per logical assignment.
std::vector<uint64_t> valid_masks(const MapRecord& rec) {
    const size_t m = rec.gadget_groups.size();
    std::vector<uint64_t> masks;
    masks.reserve(size_t{1} << m);
    for (uint64_t lm = 0; lm < (uint64_t{1} << m); ++lm) {
        uint64_t mask = 0;
        for (size_t g = 0; g < m; ++g) {
            const int logical = (lm >> g) & 1 ? 1 : -1;
            for (int j = 0; j < 8; ++j)
                if (logical * gadget_pattern_sign(j) > 0)
                    mask |= uint64_t{1} << rec.gadget_groups[g][static_cast<size_t>(j)];
        }
        masks.push_back(mask);
    }
    return masks;
}

} // namespace

MapVerificationReport verify_map(const IsingModel& lower, const IsingModel& upper,
                                 const MapRecord& record, const DomainSpec& domain,
                                 const EnumOptions&) {
    MapVerificationReport rep;
    rep.layer = layer_tag(record.kind);
    rep.log_a = record.log_a;
    rep.delta = record.delta();
    const double a = std::exp(record.log_a);
    const int n = lower.spin_count();

    try {
        switch (domain.kind) {
            case DomainKind::AllStates: {
                if (n > 24)
                    throw GuardExceeded("exhaustive map verification limited to 24 spins; sample instead");
                rep.domain = "all states";
                for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask)
                    rep.max_residual = std::max(
                        rep.max_residual, residual_of(lower, upper, record, a, state_from_mask(mask, n)));
                break;
            }
            case DomainKind::ValidStates: {
                if (record.kind != LayerKind::GadgetReduce)
                    throw InvalidModel("valid-state domain needs a gadget layer");
                const size_t m = record.gadget_groups.size();
                if (m > 20) throw GuardExceeded("valid-state enumeration limited to 20 logical spins");
                rep.domain = "valid states";
                // Generated straight from logical assignments, never by
                // filtering the physical state space.
                for (uint64_t lm = 0; lm < (uint64_t{1} << m); ++lm) {
                    std::vector<int> logicals(m);
                    for (size_t g = 0; g < m; ++g) logicals[g] = (lm >> g) & 1 ? 1 : -1;
                    rep.max_residual =
                        std::max(rep.max_residual,
                                 residual_of(lower, upper, record, a, valid_physical_state(logicals)));
                }
                break;
            }
            case DomainKind::Sampled: {
                rep.domain = "sampled:" + std::to_string(domain.seed) + "," +
                             std::to_string(domain.samples);
                std::mt19937_64 rng(domain.seed);
                for (int s = 0; s < domain.samples; ++s) {
                    uint64_t mask = rng();
                    if (n < 64) mask &= (uint64_t{1} << n) - 1;
                    rep.max_residual = std::max(
                        rep.max_residual, residual_of(lower, upper, record, a, state_from_mask(mask, n)));
                }
                break;
            }
        }
    } catch (const DecodeError& e) {
        rep.error = e.what();
        rep.passed = false;
        return rep;
    }
    rep.passed = rep.max_residual <= rep.delta;
    return rep;
}

GapPreservationReport verify_gap_preservation(const IsingModel& lower, const IsingModel& upper,
                                              const MapRecord& record, const LowEnergySet& upper_set,
                                              const EnumOptions& opts) {
    GapPreservationReport rep;
    for (const auto& s : upper_set.states)
        if (s.size() != upper.spin_count())
            throw InvalidModel("upper set states do not match the upper model");
    rep.upper_gap = upper_set.gap;
    const double delta = record.delta();
    if (!(delta < upper_set.gap / 2.0)) {
        rep.rejection = "delta " + std::to_string(delta) + " is not below half the upper gap " +
                        std::to_string(upper_set.gap / 2.0);
        return rep;
    }
    rep.hypothesis_ok = true;
    const double a = std::exp(record.log_a);
    rep.guaranteed_gap = a * (upper_set.gap - 2.0 * delta);

    const int n = lower.spin_count();
    if (n > 26) throw GuardExceeded("gap preservation check limited to 26 lower spins");

    std::vector<uint64_t> inner_masks;
    double max_inner = -kInf;
    double min_outer = kInf;
    std::vector<uint64_t> domain_masks;

    if (record.kind == LayerKind::GadgetReduce) {
        domain_masks = valid_masks(record);
    } else {
        if (n > 20) throw GuardExceeded("identity-layer gap check limited to 20 spins");
        domain_masks.reserve(size_t{1} << n);
        for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) domain_masks.push_back(mask);
    }

    for (uint64_t mask : domain_masks) {
        const SpinState lower_state = state_from_mask(mask, n);
        const SpinState upper_state = decode_layer(record, lower_state);
        const bool inside =
            std::find(upper_set.states.begin(), upper_set.states.end(), upper_state) !=
            upper_set.states.end();
        const double e = shifted_energy(lower, record, lower_state);
        if (inside) {
            inner_masks.push_back(mask);
            max_inner = std::max(max_inner, e);
        } else {
            min_outer = std::min(min_outer, e);
        }
    }
    if (inner_masks.empty()) {
        rep.rejection = "preimage of the upper set is empty";
        rep.hypothesis_ok = false;
        return rep;
    }

    if (record.kind == LayerKind::GadgetReduce) {
        // States outside the valid-pattern set are separated by roughly the
        // gadget gap; a coarse sweep minimum is plenty to confirm they sit
        // above the preimage.
        const auto all_valid = valid_masks(record);
        const double invalid_min = min_energy_excluding(lower, all_valid, opts);
        min_outer = std::min(min_outer, invalid_min - record.offset);
    }

    rep.lower_gap = min_outer - max_inner;
    rep.low_energy_set_ok = rep.lower_gap > 0.0;
    const double slack = 1e-12 * std::max(1.0, std::abs(rep.guaranteed_gap));
    rep.passed = rep.low_energy_set_ok && rep.lower_gap >= rep.guaranteed_gap - slack;
    return rep;
}

NnThresholdReport check_nn_threshold(const MisInstance& inst, const EnumOptions& opts) {
    const auto validation = validate_mis_instance(inst);
    if (!validation.ok()) throw InvalidModel("instance: " + validation.violations.front());
    const int n = static_cast<int>(inst.vertices.size());
    if (n > 20) throw GuardExceeded("threshold audit limited to 20 vertices");
    IsingModel model = encode_nn(inst);
    const auto edges = inst.edges();

    NnThresholdReport rep;
    rep.rows.assign(static_cast<size_t>(n) + 1, NnThresholdRow{});
    for (int k = 0; k <= n; ++k) {
        rep.rows[static_cast<size_t>(k)].k = k;
        rep.rows[static_cast<size_t>(k)].min_energy = kInf;
        rep.rows[static_cast<size_t>(k)].claimed_bound = 0.5 * n - 4.0 * k;
    }

    double ground = kInf;
    for (uint64_t mask = 0; mask < (uint64_t{1} << n); ++mask) {
        const SpinState state = state_from_mask(mask, n);
        const double e = model.energy(state).total;
        ground = std::min(ground, e);
        bool independent = true;
        for (const auto& [u, v] : edges)
            if (state.at(u) < 0 && state.at(v) < 0) {
                independent = false;
                break;
            }
        if (!independent) continue;
        int k = 0;
        for (int i = 0; i < n; ++i)
            if (state.at(i) < 0) ++k;
        auto& row = rep.rows[static_cast<size_t>(k)];
        row.attainable = true;
        row.min_energy = std::min(row.min_energy, e);
        rep.mis_size = std::max(rep.mis_size, k);
    }
    rep.ground_energy = ground;
    for (auto& row : rep.rows)
        row.bound_holds = row.attainable && row.min_energy <= row.claimed_bound + 1e-9;

    // Representative ground state (lexicographically smallest), repair allowed.
    GroundResult gs = ground_states(model, opts);
    const DecodedSet decoded = decode_independent_set(gs.states.front(), inst);
    bool decoded_independent = true;
    for (const auto& [u, v] : edges) {
        const bool bu = std::binary_search(decoded.vertices.begin(), decoded.vertices.end(), u);
        const bool bv = std::binary_search(decoded.vertices.begin(), decoded.vertices.end(), v);
        if (bu && bv) decoded_independent = false;
    }
    rep.ground_decodes_to_mis =
        decoded_independent && static_cast<int>(decoded.vertices.size()) == rep.mis_size;

    // Converse: every maximum independent set, written as a state, is a ground state.
    bool converse = true;
    for (uint64_t subset = 0; subset < (uint64_t{1} << n); ++subset) {
        if (std::popcount(subset) != rep.mis_size) continue;
        bool independent = true;
        for (const auto& [u, v] : edges)
            if ((subset >> u) & 1 && (subset >> v) & 1) {
                independent = false;
                break;
            }
        if (!independent) continue;
        std::vector<signed char> vals(static_cast<size_t>(n), 1);
        for (int i = 0; i < n; ++i)
            if ((subset >> i) & 1) vals[static_cast<size_t>(i)] = -1;
        const double e = model.energy(SpinState(std::move(vals))).total;
        if (e > ground + model.tolerance()) converse = false;
    }
    rep.all_mis_states_are_ground = converse;
    return rep;
}

FrozenPatternReport verify_frozen_gadget_patterns(const IsingModel& model,
                                                  const std::vector<std::array<int, 8>>& groups,
                                                  int target) {
    if (target < 0 || target >= static_cast<int>(groups.size()))
        throw InvalidModel("frozen check: bad target gadget");
    const int n = model.spin_count();
    const auto& ids = groups[static_cast<size_t>(target)];
    std::vector<char> in_target(static_cast<size_t>(n), 0);
    for (int id : ids) in_target[static_cast<size_t>(id)] = 1;
    std::vector<int> frozen;
    for (int i = 0; i < n; ++i)
        if (!in_target[static_cast<size_t>(i)]) frozen.push_back(i);
    const int fcount = static_cast<int>(frozen.size());
    if (fcount > 20) throw GuardExceeded("frozen check limited to 20 outside spins");

    // Couplings split into target-internal, target-to-frozen and the target
    // fields; the frozen spins' own interaction energy is a common offset.
    double internal[8][8] = {};
    for (int a = 0; a < 8; ++a)
        for (int b = a + 1; b < 8; ++b)
            internal[a][b] = model.coupling(ids[static_cast<size_t>(a)], ids[static_cast<size_t>(b)]);
    std::vector<double> cross(static_cast<size_t>(8 * fcount));
    for (int a = 0; a < 8; ++a)
        for (int f = 0; f < fcount; ++f)
            cross[static_cast<size_t>(a * fcount + f)] =
                model.coupling(ids[static_cast<size_t>(a)], frozen[static_cast<size_t>(f)]);
    double base_field[8];
    for (int a = 0; a < 8; ++a)
        base_field[a] = model.spins()[static_cast<size_t>(ids[static_cast<size_t>(a)])].field;

    double internal_energy[256];
    for (int m = 0; m < 256; ++m) {
        double e = 0.0;
        for (int a = 0; a < 8; ++a)
            for (int b = a + 1; b < 8; ++b) {
                const double sa = (m >> a) & 1 ? 1.0 : -1.0;
                const double sb = (m >> b) & 1 ? 1.0 : -1.0;
                e += -internal[a][b] * sa * sb;
            }
        internal_energy[m] = e;
    }
    int plus_mask = 0, minus_mask = 0;
    for (int a = 0; a < 8; ++a)
        if (gadget_pattern_sign(a) > 0) plus_mask |= 1 << a;
        else minus_mask |= 1 << a;

    FrozenPatternReport rep;
    rep.frozen_configs = uint64_t{1} << fcount;
    std::vector<double> sigma_f(static_cast<size_t>(fcount));
    for (uint64_t fm = 0; fm < rep.frozen_configs; ++fm) {
        for (int f = 0; f < fcount; ++f) sigma_f[static_cast<size_t>(f)] = (fm >> f) & 1 ? 1.0 : -1.0;
        double eff[8];
        for (int a = 0; a < 8; ++a) {
            double acc = base_field[a];
            const double* row = cross.data() + static_cast<size_t>(a * fcount);
            for (int f = 0; f < fcount; ++f) acc += row[f] * sigma_f[static_cast<size_t>(f)];
            eff[a] = acc;
        }
        double pattern_worst = -std::numeric_limits<double>::infinity();
        double other_best = std::numeric_limits<double>::infinity();
        int other_best_mask = 0;
        for (int m = 0; m < 256; ++m) {
            double e = internal_energy[m];
            for (int a = 0; a < 8; ++a) e -= eff[a] * ((m >> a) & 1 ? 1.0 : -1.0);
            if (m == plus_mask || m == minus_mask) {
                pattern_worst = std::max(pattern_worst, e);
            } else if (e < other_best) {
                other_best = e;
                other_best_mask = m;
            }
        }
        if (!(pattern_worst < other_best)) {
            rep.passed = false;
            rep.counterexample = "frozen config " + std::to_string(fm) + " puts internal state " +
                                 std::to_string(other_best_mask) + " at or below the valid patterns";
            return rep;
        }
    }
    return rep;
}

InteractionLawReport verify_interaction_law(double alpha, const std::vector<double>& radii,
                                            double slope_tolerance) {
    if (radii.size() < 2) throw InvalidModel("interaction law: need at least two radii");
    InteractionLawReport rep;
    rep.alpha = alpha;
    rep.slope_target = -(alpha + 4.0);

    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (double r : radii) {
        InteractionLawRow row;
        row.r = r;
        row.coupling = effective_coupling(alpha, r);
        row.theory = interaction_theory(alpha, r);
        row.residual_scaled = std::abs(row.coupling - row.theory) * std::pow(r, alpha + 5.0);
        rep.rows.push_back(row);
        const double x = std::log(r);
        const double y = std::log(std::abs(row.coupling));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double m = static_cast<double>(radii.size());
    rep.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
    rep.slope_ok = std::abs(rep.slope - rep.slope_target) <= slope_tolerance;

    const double r_lo = *std::min_element(radii.begin(), radii.end());
    const double r_hi = *std::max_element(radii.begin(), radii.end());
    rep.f_reference = estimate_f(alpha, r_lo, r_hi, 65);
    rep.residual_bounded = true;
    for (const auto& row : rep.rows)
        if (row.residual_scaled > 1.05 * rep.f_reference) rep.residual_bounded = false;
    rep.passed = rep.slope_ok && rep.residual_bounded;
    return rep;
}

} // namespace rfim
