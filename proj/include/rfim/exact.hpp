#ifndef RFIM_EXACT_HPP
#define RFIM_EXACT_HPP

#include <cstdint>
#include <vector>

#include "rfim/model.hpp"

namespace rfim {

struct EnumOptions {
    int workers = 1;
    int limit_n = 30; // exhaustive-enumeration guard, 2^limit_n states
};

struct GroundResult {
    double energy = 0.0;
    std::vector<SpinState> states; // every state within tolerance of the minimum, lexicographic
};

// The k lowest-energy states, with boundary ties included. `gap` is the
// energy of the cheapest state outside the set minus the costliest inside;
// +infinity when the set is the whole state space.
struct LowEnergySet {
    std::vector<SpinState> states;
    double max_inner_energy = 0.0;
    double min_outer_energy = 0.0;
    double gap = 0.0;
};

struct SpectrumLine {
    double energy = 0.0;
    long long multiplicity = 0;
};

GroundResult ground_states(const IsingModel& model, const EnumOptions& opts = {});

LowEnergySet low_energy_set(const IsingModel& model, long long k, const EnumOptions& opts = {});

// Lowest `top` energy levels grouped by the model tolerance. Memory-bound to
// 24 spins (the full energy list is materialized before sorting).
std::vector<SpectrumLine> energy_spectrum(const IsingModel& model, int top,
                                          const EnumOptions& opts = {});

// Minimum energy over all states whose bitmask is not in `excluded`
// (bit k set = spin k is +1). Used to bound invalid-pattern states without
// materializing the whole spectrum. Returns +infinity if everything is excluded.
double min_energy_excluding(const IsingModel& model, const std::vector<uint64_t>& excluded_masks,
                            const EnumOptions& opts = {});

SpinState state_from_mask(uint64_t mask, int n);
uint64_t mask_from_state(const SpinState& state);

} // namespace rfim

#endif
