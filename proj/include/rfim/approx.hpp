#ifndef RFIM_APPROX_HPP
#define RFIM_APPROX_HPP

#include <optional>
#include <string>
#include <vector>

#include "rfim/model.hpp"

namespace rfim {

struct WeightedEdge {
    int u = 0;
    int v = 0;
    double coupling = 0.0;
};

// A distance-pruned interaction graph together with the certificate that the
// discarded weight keeps every state's energy within n*eps/2 of the full model.
struct ApproxGraph {
    std::vector<WeightedEdge> kept_edges;
    double pruned_weight = 0.0; // sum of |J| over pruned pairs
    double epsilon = 0.0;
    double cutoff = 0.0; // final distance cutoff, +inf when nothing was pruned
    bool certified = false;
    // Set when a slow-decay model could only be certified by keeping every
    // edge, i.e. the approximation degenerates to the exact problem.
    bool degenerate_complete = false;
};

struct TreeDecomposition {
    std::vector<std::vector<int>> bags;
    std::vector<std::pair<int, int>> tree; // edges over bag indices
    int width() const;
};

struct DecompositionViolation {
    int axiom = 0; // 1 = vertex coverage, 2 = edge coverage, 3 = connectivity (0 = malformed tree)
    std::string detail;
};

// Restricted Hamiltonian over the kept edges only.
double restricted_energy(const IsingModel& model, const std::vector<WeightedEdge>& kept,
                         const SpinState& state);

// Keeps everything; certified with zero pruned weight.
ApproxGraph full_graph(const IsingModel& model);

// Prunes pairs beyond a distance cutoff, then certifies by summing the pruned
// |J| exactly; the cutoff is doubled until the certificate holds. Requires
// positioned spins.
ApproxGraph build_approx_graph(const IsingModel& model, double epsilon);

// Starting cutoff (epsilon*(alpha-1))^(1/(1-alpha)) used for fast-decay models.
double cutoff_formula(double alpha, double epsilon);

// Sliding-window path decomposition: bags {i..i+window} for spins on a line.
TreeDecomposition path_decomposition_1d(int n, int window);

std::optional<DecompositionViolation> validate_decomposition(int n_vertices,
                                                             const std::vector<WeightedEdge>& edges,
                                                             const TreeDecomposition& decomp);

struct DpResult {
    SpinState state;
    double energy = 0.0; // restricted (pruned) Hamiltonian of `state`
};

// Exact minimizer of the restricted Hamiltonian by dynamic programming over
// the decomposition. O(2^width) per bag.
DpResult dp_ground_state(const IsingModel& model, const ApproxGraph& graph,
                         const TreeDecomposition& decomp);

struct PtasReport {
    SpinState state;
    double energy = 0.0;         // full-model energy of `state`
    double energy_pruned = 0.0;  // restricted Hamiltonian of `state`
    double epsilon = 0.0;
    double cutoff = 0.0;
    int width = 0;
    bool certified = false;
    double pruned_weight = 0.0;
    double error_bound = 0.0; // n * epsilon
};

// The 1D scheme: prune, build the sliding-window decomposition, solve exactly
// on the pruned graph. The returned state's full energy exceeds the true
// minimum by at most n*epsilon (two crossings of the n*eps/2 certificate).
PtasReport ptas_solve(const IsingModel& model, double epsilon);

} // namespace rfim

#endif
