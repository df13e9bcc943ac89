#ifndef RFIM_VERIFY_HPP
#define RFIM_VERIFY_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "rfim/exact.hpp"
#include "rfim/model.hpp"
#include "rfim/reduction.hpp"

namespace rfim {

constexpr uint64_t kDefaultSampleSeed = 0x1F1A;

enum class DomainKind { AllStates, ValidStates, Sampled };

struct DomainSpec {
    DomainKind kind = DomainKind::AllStates;
    uint64_t seed = kDefaultSampleSeed;
    int samples = 10000;
};

// Empirical check of one layer's scale/accuracy claim:
//   max over the domain of |E_lower - a * E_upper(decode(.)) - offset| / a <= delta.
struct MapVerificationReport {
    std::string layer;
    std::string domain;
    double log_a = 0.0;
    double delta = 0.0;
    double max_residual = 0.0;
    bool passed = false;
    std::string error; // decode failure inside the domain, reported verbatim
};

MapVerificationReport verify_map(const IsingModel& lower, const IsingModel& upper,
                                 const MapRecord& record, const DomainSpec& domain,
                                 const EnumOptions& opts = {});

// Checks that the preimage of an upper low-energy set G is a low-energy set
// of the lower model with gap >= a * (gap(G) - 2*delta).
struct GapPreservationReport {
    bool hypothesis_ok = false; // delta < gap(G)/2
    std::string rejection;
    double upper_gap = 0.0;
    double lower_gap = 0.0;
    double guaranteed_gap = 0.0;
    bool low_energy_set_ok = false;
    bool passed = false;
};

GapPreservationReport verify_gap_preservation(const IsingModel& lower, const IsingModel& upper,
                                              const MapRecord& record, const LowEnergySet& upper_set,
                                              const EnumOptions& opts = {});

// Per-cardinality audit of the nearest-neighbour encoding: the claimed
// |V|/2 - 4k bound usually fails, while the ground-state <-> maximum
// independent set correspondence holds; both facts are measured.
struct NnThresholdRow {
    int k = 0;
    double min_energy = 0.0; // over states whose -1 spins form an independent set of size k
    bool attainable = false; // some such state exists
    double claimed_bound = 0.0;
    bool bound_holds = false; // min_energy <= claimed_bound
};

struct NnThresholdReport {
    std::vector<NnThresholdRow> rows;
    double ground_energy = 0.0;
    int mis_size = 0;
    bool ground_decodes_to_mis = false;   // representative ground state, repair allowed
    bool all_mis_states_are_ground = false;
};

NnThresholdReport check_nn_threshold(const MisInstance& inst, const EnumOptions& opts = {});

// Exhaustive freeze test: for every assignment of the spins outside gadget
// `target`, the gadget's two lowest internal states must be the two valid
// patterns, strictly below everything else.
struct FrozenPatternReport {
    bool passed = true;
    uint64_t frozen_configs = 0;
    std::string counterexample;
};

FrozenPatternReport verify_frozen_gadget_patterns(const IsingModel& model,
                                                  const std::vector<std::array<int, 8>>& groups,
                                                  int target);

// Scaling law of the gadget pair coupling: slope of log|I12| vs log r close to
// -(alpha+4) and residual * r^(alpha+5) bounded by the measured constant.
struct InteractionLawRow {
    double r = 0.0;
    double coupling = 0.0;
    double theory = 0.0;
    double residual_scaled = 0.0;
};

struct InteractionLawReport {
    double alpha = 0.0;
    std::vector<InteractionLawRow> rows;
    double slope = 0.0;
    double slope_target = 0.0;
    double f_reference = 0.0;
    bool slope_ok = false;
    bool residual_bounded = false;
    bool passed = false;
};

InteractionLawReport verify_interaction_law(double alpha, const std::vector<double>& radii,
                                            double slope_tolerance = 0.15);

} // namespace rfim

#endif
