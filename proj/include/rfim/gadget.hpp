#ifndef RFIM_GADGET_HPP
#define RFIM_GADGET_HPP

#include <array>
#include <vector>

#include "rfim/model.hpp"

namespace rfim {

// One 8-spin logical spin: four corner spins on center + s*(+-1,+-1) carrying
// field +h/8 and four edge spins on center + s*(0,+-1),(+-1,0) carrying -h/8.
struct GadgetSpec {
    Vec2 center{0.0, 0.0};
    double scale = 1.0;
    double alpha = 1.0;
    double logical_field = 0.0;
};

// Spin offsets in canonical order: corners first, then edge midpoints.
inline constexpr std::array<Vec2, 8> kGadgetOffsets = {{
    {1.0, 1.0}, {1.0, -1.0}, {-1.0, 1.0}, {-1.0, -1.0},
    {0.0, 1.0}, {0.0, -1.0}, {1.0, 0.0}, {-1.0, 0.0},
}};

// Sign of spin j in the "plus" valid pattern (corners up, edges down).
inline constexpr int gadget_pattern_sign(int j) { return j < 4 ? 1 : -1; }

// The 8 physical spins of one gadget, ids first_id..first_id+7.
std::vector<SpinRecord> make_logical_spin(const GadgetSpec& spec, int first_id = 0);

// Antiferromagnetic long-range model containing the given gadgets. All specs
// must agree on alpha; coincident spins are rejected by model construction.
IsingModel compose_gadgets(const std::vector<GadgetSpec>& specs);

// Physical state in which gadget i sits in its plus pattern when
// logical_values[i] = +1 and in the flipped pattern when -1.
SpinState valid_physical_state(const std::vector<int>& logical_values);

// Closed-form energy gap between the two degenerate ground patterns of an
// isolated field-free gadget and every other state.
double gadget_gap(double alpha);

// E(minus pattern) - E(plus pattern) of one isolated gadget; equals 2h.
double logical_energy_split(double alpha, double h);

// Minimum center-to-spin distance that keeps the two patterns lowest in
// energy when n_other outside spins are frozen, given |logical field| = h_abs.
double min_separation(double alpha, double h_abs, int n_other);

// Effective pair coupling I12 between two field-free gadgets with centers a
// distance r apart, extracted from the four joint valid-pattern energies.
double effective_coupling(double alpha, double r, double scale = 1.0);

// Leading-order model of I12 for unit-scale gadgets.
double interaction_theory(double alpha, double r);

// Empirical residual constant: max over sampled r in [r_min, r_max] of
// |I12 - interaction_theory| * r^(alpha+5).
double estimate_f(double alpha, double r_min, double r_max, int samples);

} // namespace rfim

#endif
