#ifndef RFIM_MODEL_HPP
#define RFIM_MODEL_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace rfim {

// Thrown when a document or constructor argument violates a model invariant.
// The message carries the offending field path, e.g. "spins[3].id".
struct InvalidModel : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Thrown when an instance is too large for the requested exhaustive operation.
struct GuardExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

double dist(const Vec2& a, const Vec2& b);

struct SpinRecord {
    int id = 0;
    std::optional<Vec2> pos;
    double field = 0.0;
    // Set only on grid models produced by snapping; kept exact so repeated
    // serialization cannot drift off the lattice.
    std::optional<std::array<long long, 2>> grid;
};

struct ExplicitEdge {
    int u = 0;
    int v = 0;
    double coupling = 0.0;
};

// An assignment of +1/-1 to every spin, indexed by spin id.
class SpinState {
public:
    SpinState() = default;
    explicit SpinState(std::vector<signed char> values);
    static SpinState uniform(int n, int value);
    static SpinState from_string(std::string_view text);

    int size() const { return static_cast<int>(values_.size()); }
    int at(int id) const { return values_[static_cast<size_t>(id)]; }
    int operator[](int id) const { return at(id); }
    void set(int id, int value);
    SpinState flipped(int id) const;
    SpinState negated() const;
    std::string to_string() const;

    // Lexicographic with -1 < +1, matching the string form.
    friend bool operator<(const SpinState& a, const SpinState& b) { return a.values_ < b.values_; }
    friend bool operator==(const SpinState& a, const SpinState& b) { return a.values_ == b.values_; }

private:
    std::vector<signed char> values_;
};

struct EnergyBreakdown {
    double interaction_term = 0.0;
    double field_term = 0.0;
    double total = 0.0;
};

class CompensatedSum;

enum class CouplingKind { LongRange, Explicit };

// A random-field Ising model:  H = -sum_{i<j} J_ij s_i s_j - sum_k h_k s_k.
// Couplings are either geometric (J_ij = c * d(i,j)^-alpha over every pair)
// or an explicit edge list. Instances are immutable after construction and
// all evaluation entry points are pure, so they are safe to share across
// worker threads.
class IsingModel {
public:
    static IsingModel make_long_range(std::vector<SpinRecord> spins, double alpha, double c,
                                      double tolerance = 1e-9);
    static IsingModel make_explicit(std::vector<SpinRecord> spins, std::vector<ExplicitEdge> edges,
                                    double tolerance = 1e-9);

    CouplingKind kind() const { return kind_; }
    int spin_count() const { return static_cast<int>(spins_.size()); }
    const std::vector<SpinRecord>& spins() const { return spins_; }
    const std::vector<ExplicitEdge>& edges() const { return edges_; }
    double alpha() const;
    double c() const;
    double tolerance() const { return tolerance_; }
    double min_distance() const { return min_distance_; }
    bool all_positioned() const;
    double distance(int i, int j) const;

    // Pairwise coupling J_ij; zero for explicit non-edges.
    double coupling(int i, int j) const;

    // Deterministic evaluation: pairs in (i<j) lexicographic order, then
    // fields by id, with compensated accumulation. Bit-identical across calls.
    EnergyBreakdown energy(const SpinState& state) const;

    // Feeds the same terms, in the same order, into a caller-owned accumulator.
    // Lets verification subtract constants before the final rounding, which
    // matters when a layer's energies are a large constant plus a tiny signal.
    void accumulate_energy(const SpinState& state, CompensatedSum& acc) const;

    // Energy change of flipping spin k, without re-evaluating the full sum.
    double delta_energy_flip(const SpinState& state, int k) const;

private:
    IsingModel() = default;
    void validate_common() const;

    CouplingKind kind_ = CouplingKind::Explicit;
    std::vector<SpinRecord> spins_;
    std::vector<ExplicitEdge> edges_;       // normalized u < v, sorted
    std::vector<int> edge_row_begin_;       // CSR over normalized edges, by u
    std::vector<double> coupling_cache_;    // n*n, long-range models up to 512 spins
    double alpha_ = 0.0;
    double c_ = 0.0;
    double tolerance_ = 1e-9;
    double min_distance_ = 0.0;
};

// Running compensated sum (Neumaier). Used wherever energies mix magnitudes
// that differ by many orders, e.g. gadget constants plus logical signals.
class CompensatedSum {
public:
    void add(double x) {
        double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

    // Rounded value plus the rounding remainder; hi + lo carries the sum to
    // roughly double-double precision.
    std::pair<double, double> value_pair() const {
        const double hi = sum_ + comp_;
        const double z = hi - sum_;
        const double lo = (sum_ - (hi - z)) + (comp_ - z);
        return {hi, lo};
    }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

} // namespace rfim

#endif
