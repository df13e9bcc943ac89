// Acceptance suite: every quantitative guarantee the toolkit makes, checked
// end to end against brute-force oracles at fixed tolerances. One line per
// criterion; exit code 0 only if all of them hold.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "rfim/approx.hpp"
#include "rfim/exact.hpp"
#include "rfim/gadget.hpp"
#include "rfim/model.hpp"
#include "rfim/reduction.hpp"
#include "rfim/verify.hpp"
#include "test_support.hpp"

using namespace rfim;

namespace {

struct Outcome {
    bool passed = false;
    std::string detail;
};

MisInstance path_instance(int n) {
    MisInstance inst;
    for (int i = 0; i < n; ++i)
        inst.vertices.push_back({i, Vec2{static_cast<double>(i), 0.0}});
    return inst;
}

std::string fmt(double x) {
    std::ostringstream ss;
    ss.precision(3);
    ss << x;
    return ss.str();
}

// 1. Exactly two ground states (the two patterns) and the closed-form gap.
Outcome criterion_gadget_gap() {
    double worst = 0.0;
    for (double alpha : {0.5, 1.0, 2.0, 3.0, 6.0}) {
        auto gadget = compose_gadgets({GadgetSpec{{0, 0}, 1.0, alpha, 0.0}});
        auto set = low_energy_set(gadget, 2);
        if (set.states.size() != 2)
            return {false, "alpha " + fmt(alpha) + ": " + std::to_string(set.states.size()) +
                               " ground states"};
        if (!(set.states[0] == valid_physical_state({-1}) &&
              set.states[1] == valid_physical_state({1})))
            return {false, "alpha " + fmt(alpha) + ": ground states are not the two patterns"};
        worst = std::max(worst, std::abs(set.gap - gadget_gap(alpha)));
    }
    return {worst <= 1e-9, "max |enumerated - formula| = " + fmt(worst)};
}

// 2. Logical field splits the patterns by exactly 2h.
Outcome criterion_field_split() {
    double worst = 0.0;
    for (double h : {0.1, 1.0, -0.5})
        worst = std::max(worst, std::abs(logical_energy_split(2.0, h) - 2.0 * h));
    return {worst <= 1e-12, "max |split - 2h| = " + fmt(worst)};
}

// 3. Pair-coupling power law at alpha = 1.
Outcome criterion_interaction_law() {
    auto rep = verify_interaction_law(1.0, {10.0, 20.0, 40.0, 80.0});
    std::string detail = "slope " + fmt(rep.slope) + " vs -5, scaled residual <= " +
                         fmt(1.05 * rep.f_reference);
    return {rep.passed, detail};
}

// 4. Grid-snap accuracy budget on random models, all 32 states per trial.
Outcome criterion_snap_map() {
    std::mt19937_64 rng(404);
    double worst_margin = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto m = testsupport::random_positioned_model(rng, 5, 1.2 + 0.12 * trial);
        const double delta = 0.1;
        const double eps = 0.5 * snap_epsilon_bound(m.alpha(), m.min_distance(), 5, delta, 1.0);
        auto [grid, rec] = snap_to_grid(m, eps, delta);
        auto rep = verify_map(grid, m, rec, {DomainKind::AllStates});
        if (!rep.passed)
            return {false, "trial " + std::to_string(trial) + " residual " + fmt(rep.max_residual)};
        worst_margin = std::max(worst_margin, rep.max_residual);
    }
    return {true, "20/20 trials, worst residual " + fmt(worst_margin) + " <= 0.1"};
}

// 5. Long-range lift accuracy on random instances, all states.
Outcome criterion_lift_map() {
    std::mt19937_64 rng(505);
    double worst = 0.0;
    int done = 0;
    while (done < 10) {
        auto inst = testsupport::random_grid_instance(rng, 4 + static_cast<int>(rng() % 7));
        const int n = static_cast<int>(inst.vertices.size());
        if (n < 2 || n > 10 || !validate_mis_instance(inst).ok()) continue;
        const double alpha = alpha_threshold(n) + 1e-6;
        auto [lifted, rec] = lift_long_range(inst, alpha);
        auto rep = verify_map(lifted, encode_nn(inst), rec, {DomainKind::AllStates});
        if (!rep.passed)
            return {false, "instance " + std::to_string(done) + " residual " + fmt(rep.max_residual)};
        worst = std::max(worst, rep.max_residual);
        ++done;
    }
    return {true, "10/10 instances, worst residual " + fmt(worst) + " <= 0.25"};
}

// 6. Gadget-reduction accuracy over valid states plus the frozen-neighbour
//    validity check at 16 and 24 physical spins.
Outcome criterion_reduce_map() {
    const double alpha = 2.0;
    const double delta = 0.1;
    const double f_hat = measured_f_with_margin(alpha);

    auto upper2 = IsingModel::make_long_range({{0, Vec2{0, 0}, 0.7, std::nullopt},
                                               {1, Vec2{5, 0}, -0.4, std::nullopt}},
                                              6.0, -1.0);
    auto upper3 = IsingModel::make_long_range(
        {{0, Vec2{0, 0}, 0.5, std::nullopt},
         {1, Vec2{5, 0}, -1.0, std::nullopt},
         {2, Vec2{2.5, 4.330127018922193, }, 0.25, std::nullopt}},
        6.0, -1.0);

    double worst = 0.0;
    for (const auto* upper : {&upper2, &upper3}) {
        const double eps = 0.5 * reduce_epsilon_bound(alpha, upper->spin_count(), delta, f_hat);
        auto [lower, rec] = reduce_exponent(*upper, eps, delta, f_hat);
        auto rep = verify_map(lower, *upper, rec, {DomainKind::ValidStates});
        if (!rep.passed)
            return {false, std::to_string(upper->spin_count()) + " logical spins: residual " +
                               fmt(rep.max_residual) + " > " + fmt(delta)};
        worst = std::max(worst, rep.max_residual);
    }

    // Frozen-neighbour validity at the separation radius, 2 and 3 gadgets.
    for (int gadget_count : {2, 3}) {
        const int outside = 8 * (gadget_count - 1);
        const double radius = min_separation(alpha, 0.0, outside);
        const double spacing = radius + std::sqrt(2.0) + 0.01;
        std::vector<GadgetSpec> specs;
        for (int g = 0; g < gadget_count; ++g)
            specs.push_back(GadgetSpec{{spacing * g, 0.0}, 1.0, alpha, 0.0});
        auto model = compose_gadgets(specs);
        std::vector<std::array<int, 8>> groups;
        for (int g = 0; g < gadget_count; ++g) {
            std::array<int, 8> ids{};
            for (int j = 0; j < 8; ++j) ids[static_cast<size_t>(j)] = 8 * g + j;
            groups.push_back(ids);
        }
        for (int target = 0; target < gadget_count; ++target) {
            auto rep = verify_frozen_gadget_patterns(model, groups, target);
            if (!rep.passed)
                return {false, std::to_string(gadget_count) + " gadgets, target " +
                                   std::to_string(target) + ": " + rep.counterexample};
        }
    }
    return {true, "valid-state residual <= " + fmt(worst) + "; all frozen configurations keep the "
                  "patterns lowest"};
}

// 7. DP equals exhaustive enumeration on banded and tree models.
Outcome criterion_dp_exact() {
    std::mt19937_64 rng(707);
    double worst = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 8 + static_cast<int>(rng() % 13); // 8..20
        IsingModel model = trial % 2 == 0 ? testsupport::random_banded_model(rng, n, 1 + trial % 3)
                                          : testsupport::random_tree_model(rng, n);
        TreeDecomposition decomp = trial % 2 == 0
                                       ? path_decomposition_1d(n, 1 + trial % 3)
                                       : testsupport::tree_decomposition_of(model);
        auto dp = dp_ground_state(model, full_graph(model), decomp);
        auto exact = ground_states(model);
        const double gap = std::abs(dp.energy - exact.energy);
        if (gap > 1e-12)
            return {false, "trial " + std::to_string(trial) + " off by " + fmt(gap)};
        worst = std::max(worst, gap);
    }
    return {true, "50/50 models, worst |dp - exact| = " + fmt(worst)};
}

// 8. 1D approximation quality at n=20, eps=0.1, plus exactness when nothing
//    is pruned.
Outcome criterion_ptas() {
    std::mt19937_64 rng(808);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
        auto chain = testsupport::random_chain_1d(rng, 20, 2.0);
        auto rep = ptas_solve(chain, 0.1);
        auto exact = ground_states(chain);
        const double excess = rep.energy - exact.energy;
        if (excess > 20 * 0.1 + 1e-12 || excess < -1e-12)
            return {false, "trial " + std::to_string(trial) + " excess " + fmt(excess)};
        worst = std::max(worst, excess);
        if (trial < 3) {
            auto tight = ptas_solve(chain, 1e-14);
            if (std::abs(tight.energy - exact.energy) > 1e-12)
                return {false, "unpruned run differs from brute force"};
        }
    }
    return {true, "20/20 trials, worst excess " + fmt(worst) + " <= 2.0; unpruned runs exact"};
}

// 9. End-to-end reduction at t=0: grid ground states decode to maximum
//    independent sets.
Outcome criterion_end_to_end() {
    std::mt19937_64 rng(909);
    int done = 0;
    double worst_delta = 0.0;
    while (done < 10) {
        auto inst = testsupport::random_grid_instance(rng, 2 + static_cast<int>(rng() % 7));
        const int n = static_cast<int>(inst.vertices.size());
        if (n < 2 || n > 8 || !validate_mis_instance(inst).ok()) continue;
        const double alpha = alpha_threshold(n) * 1.01;
        auto bundle = compile_pipeline(inst, alpha, {});
        if (bundle.t != 0) return {false, "expected t=0"};
        if (!(bundle.composed.delta < 5.0 / 12.0))
            return {false, "composed delta " + fmt(bundle.composed.delta)};
        worst_delta = std::max(worst_delta, bundle.composed.delta);

        auto ground = ground_states(bundle.grid_model());
        auto decoded = decode_pipeline(bundle, ground.states.front());
        const auto oracle = testsupport::exhaustive_mis(inst);
        const auto edges = inst.edges();
        for (const auto& [u, v] : edges) {
            const bool bu = std::binary_search(decoded.independent_set.begin(),
                                               decoded.independent_set.end(), u);
            const bool bv = std::binary_search(decoded.independent_set.begin(),
                                               decoded.independent_set.end(), v);
            if (bu && bv) return {false, "decoded set is not independent"};
        }
        if (static_cast<int>(decoded.independent_set.size()) != oracle.size)
            return {false, "instance " + std::to_string(done) + ": decoded " +
                               std::to_string(decoded.independent_set.size()) + " vs oracle " +
                               std::to_string(oracle.size)};
        ++done;
    }
    return {true, "10/10 instances decode to maximum independent sets; worst composed delta " +
                      fmt(worst_delta) + " < 5/12"};
}

// 10. Composition fixtures fold exactly; spin counts follow |V| * 8^t.
Outcome criterion_composition_counting() {
    auto record = [](double a, double delta) {
        MapRecord r;
        r.kind = LayerKind::GridSnap;
        r.log_a = std::log(a);
        r.log_delta = std::log(delta);
        return r;
    };
    auto two = compose_maps({record(2.0, 0.1), record(3.0, 0.2)});
    if (std::abs(std::exp(two.log_scale) - 6.0) > 1e-12 || std::abs(two.delta - 0.2) > 1e-12)
        return {false, "fixture folded to (" + fmt(std::exp(two.log_scale)) + ", " +
                           fmt(two.delta) + ")"};
    std::vector<MapRecord> chain(4, record(1.0, 0.05));
    auto four = compose_maps(chain);
    if (std::abs(four.delta - 0.2) > 1e-12) return {false, "unit-scale chain delta off"};

    auto b0 = compile_pipeline(path_instance(3), 12.0, {});
    if (b0.grid_model().spin_count() != 3) return {false, "t=0 bundle spin count"};

    // each reduction layer multiplies the spin count by exactly 8
    auto upper = IsingModel::make_long_range({{0, Vec2{0, 0}, 0.5, std::nullopt},
                                              {1, Vec2{5, 0}, -0.25, std::nullopt}},
                                             10.0, -1.0);
    const double f1 = measured_f_with_margin(6.0);
    auto [mid, rec1] = reduce_exponent(upper, 0.5 * reduce_epsilon_bound(6.0, 2, 0.1, f1), 0.1, f1);
    const double f2 = measured_f_with_margin(2.0);
    auto [low, rec2] =
        reduce_exponent(mid, 0.5 * reduce_epsilon_bound(2.0, 16, 0.1, f2), 0.1, f2);
    if (mid.spin_count() != 16 || low.spin_count() != 128)
        return {false, "layer spin counts " + std::to_string(mid.spin_count()) + ", " +
                           std::to_string(low.spin_count())};
    return {true, "fixtures exact; t=0 bundle has |V| spins; chained layers give 2 -> 16 -> 128"};
}

// 11. The claimed cardinality bound fails on the 3-path while the
//     ground-state decode still yields maximum independent sets everywhere.
Outcome criterion_threshold_audit() {
    auto rep = check_nn_threshold(path_instance(3));
    if (rep.ground_energy != -3.0) return {false, "path-3 ground " + fmt(rep.ground_energy)};
    const auto& row = rep.rows[2];
    if (std::abs(row.claimed_bound + 6.5) > 1e-12) return {false, "bound row mismatch"};
    if (row.bound_holds) return {false, "expected bound failure did not reproduce"};
    if (!rep.ground_decodes_to_mis) return {false, "path-3 decode failed"};

    std::mt19937_64 rng(1111);
    int done = 0;
    while (done < 10) {
        auto inst = testsupport::random_grid_instance(rng, 3 + static_cast<int>(rng() % 8));
        const int n = static_cast<int>(inst.vertices.size());
        if (n < 2 || n > 10 || !validate_mis_instance(inst).ok()) continue;
        auto r = check_nn_threshold(inst);
        const auto oracle = testsupport::exhaustive_mis(inst);
        if (r.mis_size != oracle.size || !r.ground_decodes_to_mis)
            return {false, "correspondence failed on instance " + std::to_string(done)};
        ++done;
    }
    return {true, "path-3 reports ground -3 vs bound -6.5 (bound fails); decode correct on 10 "
                  "instances"};
}

} // namespace

int main() {
    struct Entry {
        int id;
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Entry> criteria = {
        {1, "gadget degeneracy and gap formula", criterion_gadget_gap},
        {2, "logical field split", criterion_field_split},
        {3, "pair interaction law", criterion_interaction_law},
        {4, "grid-snap map bound", criterion_snap_map},
        {5, "long-range lift map bound", criterion_lift_map},
        {6, "gadget reduction bound and frozen validity", criterion_reduce_map},
        {7, "DP exactness", criterion_dp_exact},
        {8, "1D approximation quality", criterion_ptas},
        {9, "end-to-end reduction (t=0)", criterion_end_to_end},
        {10, "composition and spin counting", criterion_composition_counting},
        {11, "encoding threshold audit", criterion_threshold_audit},
    };

    int passed = 0;
    for (const auto& entry : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = entry.run();
        } catch (const std::exception& e) {
            outcome = {false, std::string("exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("[%s] %2d %s (%s; %.2f s)\n", outcome.passed ? "PASS" : "FAIL", entry.id,
                    entry.name, outcome.detail.c_str(), secs);
        std::fflush(stdout);
        if (outcome.passed) ++passed;
    }
    std::printf("acceptance: %d/%zu criteria passed\n", passed, criteria.size());
    return passed == static_cast<int>(criteria.size()) ? 0 : 1;
}
