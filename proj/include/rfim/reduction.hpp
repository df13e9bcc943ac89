#ifndef RFIM_REDUCTION_HPP
#define RFIM_REDUCTION_HPP

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "rfim/model.hpp"

namespace rfim {

// A state of the lower model cannot be pulled back through a layer, e.g. a
// gadget is in neither valid pattern. Carries the offending gadget index.
struct DecodeError : std::runtime_error {
    explicit DecodeError(const std::string& what, int gadget_index = -1)
        : std::runtime_error(what), gadget(gadget_index) {}
    int gadget;
};

// Pipeline parameter schedule cannot be satisfied (or materialized in double
// precision). The message names the failing layer.
struct CompileError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Unit-distance graph instance for maximum independent set: vertices on the
// plane, edges exactly at distance 1, max degree 3, non-adjacent pairs at
// distance >= sqrt(2).
struct MisVertex {
    int id = 0;
    Vec2 pos;
};

struct MisInstance {
    std::vector<MisVertex> vertices;
    std::vector<std::pair<int, int>> edges() const; // inferred from unit distances
};

struct MisReport {
    std::vector<std::string> violations;
    std::vector<std::string> warnings; // e.g. non-adjacent pair at exactly sqrt(2)
    bool ok() const { return violations.empty(); }
};

MisReport validate_mis_instance(const MisInstance& inst);

MisInstance load_mis_instance(const std::string& text);
std::string save_mis_instance(const MisInstance& inst);

// Nearest-neighbour encoding: J = -1 on every unit edge and field -1 on every
// vertex, so minimizing the energy maximizes the independent set of spins
// pinned to -1.
IsingModel encode_nn(const MisInstance& inst);

struct DecodedSet {
    std::vector<int> vertices;
    bool repaired = false; // some members had to be dropped to restore independence
};

DecodedSet decode_independent_set(const SpinState& state, const MisInstance& inst);

// Smallest decay exponent for which the long-range lift of a |V|-vertex
// instance stays within the 1/4 energy budget.
double alpha_threshold(int v_count);

// Smallest t >= 0 with alpha_target + 4t above the lift threshold.
int choose_t(int v_count, double alpha_target);

enum class LayerKind { NnLift, GadgetReduce, GridSnap };

// One reduction layer: a scale/accuracy ((a, delta)) pair plus the rule for
// pulling a lower-model state back up. Scale and delta live in log domain
// because deep schedules underflow doubles. `offset` is the additive constant
// the layer's energies carry (gadget internal energy); the map bound is
// |E_lower - a * E_upper(decode(.)) - offset| <= a * delta.
struct MapRecord {
    LayerKind kind = LayerKind::NnLift;
    double log_a = 0.0;
    double log_delta = 0.0;
    // Offset kept as a hi/lo pair: verifying |E - a*E' - offset| <= a*delta
    // needs the constant to better than one ulp of its own magnitude.
    double offset = 0.0;
    double offset_lo = 0.0;
    // GadgetReduce only: the 8 physical spin ids of each logical spin,
    // canonical corner/edge order.
    std::vector<std::array<int, 8>> gadget_groups;

    double a() const { return std::exp(log_a); }
    double delta() const { return std::exp(log_delta); }
};

// Pull one lower-model state up through a layer. Throws DecodeError when a
// gadget is in neither valid pattern.
SpinState decode_layer(const MapRecord& record, const SpinState& lower);

std::pair<IsingModel, MapRecord> lift_long_range(const MisInstance& inst, double alpha);

// Replace every spin of an (alpha+4)-exponent model by an 8-spin gadget of a
// alpha-exponent model at 1/epsilon-rescaled coordinates. Requires |h| <= 1
// upstream, epsilon within the accuracy budget and gadget separations beyond
// the freeze radius.
std::pair<IsingModel, MapRecord> reduce_exponent(const IsingModel& upper, double epsilon,
                                                 double delta,
                                                 std::optional<double> f_with_margin = std::nullopt);

// Floor positions onto the integer grid at pitch epsilon, scaling fields by
// epsilon^alpha.
std::pair<IsingModel, MapRecord> snap_to_grid(const IsingModel& upper, double epsilon, double delta);

// Residual constant used in layer budgets: twice the measured sweep maximum.
double measured_f_with_margin(double alpha);

// Largest layer epsilon admitted by the accuracy budget delta.
double reduce_epsilon_bound(double alpha_lower, int upper_spins, double delta, double f_with_margin);
double snap_epsilon_bound(double alpha, double min_distance, int spins, double delta,
                          double coupling_magnitude = 1.0);

struct ComposedMap {
    double log_scale = 0.0; // log A
    double delta = 0.0;     // composed Delta
    double offset = 0.0;
};

// Folds records ordered outer-to-inner:
//   (A, D, B) o (a, d, b)  ->  (a*A, d/A + D, a*B + b).
ComposedMap compose_maps(const std::vector<MapRecord>& records);

struct PipelineBundle {
    MisInstance instance;
    // Ordered top-down: nearest-neighbour encoding, the lift, one model per
    // reduction layer, and finally the grid model.
    std::vector<IsingModel> models;
    std::vector<MapRecord> records; // outer-to-inner, one per adjacent model pair
    int t = 0;
    double alpha_target = 0.0;
    std::vector<double> layer_epsilons; // reduce layers, outermost first
    std::vector<double> layer_deltas;
    std::vector<double> layer_f_hats;
    double grid_epsilon = 0.0;
    double grid_delta = 0.0;
    ComposedMap composed;

    const IsingModel& nn_model() const { return models.front(); }
    const IsingModel& grid_model() const { return models.back(); }
};

struct CompileOptions {
    std::optional<int> t_override;
    int max_t = 2; // desk-scale guard
    std::optional<double> grid_epsilon; // override, e.g. 1.0 for integer instances
    std::optional<double> grid_delta;
};

PipelineBundle compile_pipeline(const MisInstance& inst, double alpha_target,
                                const CompileOptions& options = {});

struct PipelineDecode {
    std::vector<int> independent_set;
    bool repaired = false;
    SpinState nn_state; // grid state pulled all the way up
};

PipelineDecode decode_pipeline(const PipelineBundle& bundle, const SpinState& grid_state);

void save_bundle(const std::string& directory, const PipelineBundle& bundle);
PipelineBundle load_bundle(const std::string& directory);

} // namespace rfim

#endif
