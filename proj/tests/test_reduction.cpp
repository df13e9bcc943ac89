#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "rfim/exact.hpp"
#include "rfim/gadget.hpp"
#include "rfim/reduction.hpp"
#include "rfim/verify.hpp"
#include "test_support.hpp"

using namespace rfim;

namespace {

MisInstance path_instance(int n) {
    MisInstance inst;
    for (int i = 0; i < n; ++i)
        inst.vertices.push_back({i, Vec2{static_cast<double>(i), 0.0}});
    return inst;
}

IsingModel two_spin_upper(double alpha_upper, double h0, double h1, double d = 5.0) {
    return IsingModel::make_long_range({{0, Vec2{0, 0}, h0, std::nullopt},
                                        {1, Vec2{d, 0}, h1, std::nullopt}},
                                       alpha_upper, -1.0);
}

} // namespace

TEST_CASE("instance validation") {
    CHECK(validate_mis_instance(path_instance(3)).ok());

    MisInstance close;
    close.vertices = {{0, Vec2{0, 0}}, {1, Vec2{1.2, 0}}};
    auto rep = validate_mis_instance(close);
    CHECK_FALSE(rep.ok());
    CHECK(rep.violations.front().find("sqrt(2)") != std::string::npos);

    MisInstance star;
    star.vertices = {{0, Vec2{0, 0}}, {1, Vec2{1, 0}}, {2, Vec2{-1, 0}},
                     {3, Vec2{0, 1}}, {4, Vec2{0, -1}}};
    auto rep2 = validate_mis_instance(star);
    CHECK_FALSE(rep2.ok());
    bool degree_violation = false;
    for (const auto& v : rep2.violations)
        if (v.find("degree") != std::string::npos) degree_violation = true;
    CHECK(degree_violation);

    MisInstance diagonal;
    diagonal.vertices = {{0, Vec2{0, 0}}, {1, Vec2{1, 0}}, {2, Vec2{1, 1}}};
    auto rep3 = validate_mis_instance(diagonal);
    CHECK(rep3.ok());
    CHECK_FALSE(rep3.warnings.empty());

    const std::string json = save_mis_instance(path_instance(3));
    auto loaded = load_mis_instance(json);
    CHECK(loaded.vertices.size() == 3);
    CHECK(loaded.edges() == path_instance(3).edges());
}

TEST_CASE("nearest-neighbour encoding matches the textbook Hamiltonian") {
    auto single = encode_nn(path_instance(1));
    auto gr = ground_states(single);
    CHECK(gr.energy == -1.0);
    CHECK(gr.states[0].to_string() == "-");

    auto p3 = encode_nn(path_instance(3));
    const auto edges = path_instance(3).edges();
    for (uint64_t mask = 0; mask < 8; ++mask) {
        const SpinState s = state_from_mask(mask, 3);
        double expected = 0.0;
        for (const auto& [u, v] : edges) expected += s.at(u) * s.at(v);
        for (int w = 0; w < 3; ++w) expected += s.at(w);
        CHECK(p3.energy(s).total == doctest::Approx(expected).epsilon(1e-12));
    }
    auto gr3 = ground_states(p3);
    CHECK(gr3.energy == -3.0);
    REQUIRE(gr3.states.size() == 1);
    CHECK(gr3.states[0].to_string() == "-+-");
    auto decoded = decode_independent_set(gr3.states[0], path_instance(3));
    CHECK(decoded.vertices == std::vector<int>{0, 2});
    CHECK_FALSE(decoded.repaired);

    // empty graph on 4 vertices: spins spaced far apart, no inferred edges
    MisInstance sparse;
    for (int i = 0; i < 4; ++i) sparse.vertices.push_back({i, Vec2{3.0 * i, 0.0}});
    auto empty = encode_nn(sparse);
    auto gre = ground_states(empty);
    CHECK(gre.energy == -4.0);
    CHECK(gre.states[0] == SpinState::uniform(4, -1));
    CHECK(decode_independent_set(gre.states[0], sparse).vertices == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("independent-set decoding and the repair rule") {
    CHECK(decode_independent_set(SpinState::from_string("+++"), path_instance(3)).vertices.empty());

    auto k2 = path_instance(2);
    auto decoded = decode_independent_set(SpinState::from_string("--"), k2);
    CHECK(decoded.repaired);
    CHECK(decoded.vertices == std::vector<int>{1});

    // higher degree loses the tie first
    auto p3 = path_instance(3);
    auto decoded3 = decode_independent_set(SpinState::from_string("--+"), p3);
    CHECK(decoded3.repaired);
    CHECK(decoded3.vertices == std::vector<int>{0});
}

TEST_CASE("lift threshold and layer-count choice") {
    CHECK(alpha_threshold(1) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(alpha_threshold(4) == doctest::Approx(10.643856189774724).epsilon(1e-9));
    for (int v = 1; v < 12; ++v) CHECK(alpha_threshold(v + 1) > alpha_threshold(v));

    CHECK(choose_t(4, 3.0) == 2);
    CHECK(choose_t(3, 12.0) == 0);
    CHECK(choose_t(2, 3.5) == 1);
}

TEST_CASE("long-range lift stays within a quarter of the encoding") {
    auto [lifted, rec] = lift_long_range(path_instance(3), 12.0);
    CHECK(lifted.coupling(0, 1) == -1.0);
    CHECK(lifted.coupling(1, 2) == -1.0);
    CHECK(rec.log_a == 0.0);
    CHECK(rec.delta() == doctest::Approx(0.25).epsilon(1e-12));

    auto nn = encode_nn(path_instance(3));
    auto report = verify_map(lifted, nn, rec, {DomainKind::AllStates});
    CHECK(report.passed);
    CHECK(report.max_residual <= 0.25);

    // residual collapses as the exponent grows
    auto [lifted40, rec40] = lift_long_range(path_instance(3), 40.0);
    auto report40 = verify_map(lifted40, nn, rec40, {DomainKind::AllStates});
    CHECK(report40.max_residual <= 1e-5);

    CHECK_THROWS_AS(lift_long_range(path_instance(3), 9.0), InvalidModel);
}

TEST_CASE("exponent reduction layer: bound, fields and spin count") {
    auto upper = two_spin_upper(6.0, 0.5, -0.25);
    const double delta = 0.1;
    const double f_hat = measured_f_with_margin(2.0);
    const double epsilon = 0.5 * reduce_epsilon_bound(2.0, 2, delta, f_hat);
    auto [lower, rec] = reduce_exponent(upper, epsilon, delta, f_hat);

    CHECK(lower.spin_count() == 16);
    CHECK(lower.alpha() == doctest::Approx(2.0));
    REQUIRE(rec.gadget_groups.size() == 2);

    auto report = verify_map(lower, upper, rec, {DomainKind::ValidStates});
    INFO("max residual ", report.max_residual, " delta ", report.delta);
    CHECK(report.passed);

    // zero fields upstream stay zero downstream
    auto flat = two_spin_upper(6.0, 0.0, 0.0);
    auto [lower0, rec0] = reduce_exponent(flat, epsilon, delta, f_hat);
    for (const auto& s : lower0.spins()) CHECK(s.field == 0.0);
    CHECK(verify_map(lower0, flat, rec0, {DomainKind::ValidStates}).passed);

    CHECK_THROWS_AS(reduce_exponent(upper, 10.0 * reduce_epsilon_bound(2.0, 2, delta, f_hat), delta,
                                    f_hat),
                    CompileError);
    auto strong = two_spin_upper(6.0, 1.5, 0.0);
    CHECK_THROWS_AS(reduce_exponent(strong, epsilon, delta, f_hat), InvalidModel);

    // ferromagnetic or sub-unit-spacing uppers are outside the construction
    auto ferro = IsingModel::make_long_range({{0, Vec2{0, 0}, 0.0, std::nullopt},
                                              {1, Vec2{5, 0}, 0.0, std::nullopt}},
                                             6.0, 1.0);
    CHECK_THROWS_AS(reduce_exponent(ferro, epsilon, delta, f_hat), InvalidModel);
    auto tight = two_spin_upper(6.0, 0.0, 0.0, 0.5);
    CHECK_THROWS_AS(reduce_exponent(tight, epsilon, delta, f_hat), InvalidModel);
    auto low_exponent = two_spin_upper(3.0, 0.0, 0.0);
    CHECK_THROWS_AS(reduce_exponent(low_exponent, epsilon, delta, f_hat), InvalidModel);
}

TEST_CASE("exponent reduction preserves the low-energy set") {
    auto upper = two_spin_upper(6.0, 0.5, -0.25);
    const double delta = 0.02;
    const double f_hat = measured_f_with_margin(2.0);
    const double epsilon = 0.5 * reduce_epsilon_bound(2.0, 2, delta, f_hat);
    auto [lower, rec] = reduce_exponent(upper, epsilon, delta, f_hat);

    auto upper_ground = low_energy_set(upper, 1);
    auto rep = verify_gap_preservation(lower, upper, rec, upper_ground);
    CHECK(rep.hypothesis_ok);
    CHECK(rep.low_energy_set_ok);
    CHECK(rep.passed);
}

TEST_CASE("grid snapping") {
    SUBCASE("integer coordinates at unit pitch are untouched") {
        std::mt19937_64 rng(7);
        auto chain = testsupport::random_chain_1d(rng, 4, 3.0);
        auto [grid, rec] = snap_to_grid(chain, 1.0, 0.5);
        CHECK(rec.log_a == 0.0);
        for (int i = 0; i < 4; ++i) {
            CHECK(grid.spins()[i].pos->x == chain.spins()[i].pos->x);
            CHECK(grid.spins()[i].field == chain.spins()[i].field);
            REQUIRE(grid.spins()[i].grid.has_value());
            CHECK((*grid.spins()[i].grid)[0] == i);
        }
        auto report = verify_map(grid, chain, rec, {DomainKind::AllStates});
        CHECK(report.max_residual == 0.0);
    }

    SUBCASE("fields scale by epsilon^alpha") {
        auto m = IsingModel::make_long_range({{0, Vec2{0, 0}, 0.3, std::nullopt},
                                              {1, Vec2{0.3, 0}, 0.0, std::nullopt},
                                              {2, Vec2{1.0, 0.7}, -0.2, std::nullopt}},
                                             2.0, -1.0);
        auto [grid, rec] = snap_to_grid(m, 0.1, 0.5);
        CHECK(grid.spins()[0].field == doctest::Approx(0.003).epsilon(1e-12));
        CHECK(grid.spins()[1].pos->x == 3.0);
        CHECK(grid.spins()[2].pos->y == 7.0);
    }

    SUBCASE("random models pass the accuracy budget over all states") {
        std::mt19937_64 rng(11);
        for (int trial = 0; trial < 5; ++trial) {
            auto m = testsupport::random_positioned_model(rng, 5, 1.5 + 0.4 * trial);
            const double delta = 0.1;
            const double eps =
                0.5 * snap_epsilon_bound(m.alpha(), m.min_distance(), 5, delta, 1.0);
            auto [grid, rec] = snap_to_grid(m, eps, delta);
            auto report = verify_map(grid, m, rec, {DomainKind::AllStates});
            INFO("trial ", trial, " residual ", report.max_residual);
            CHECK(report.passed);
        }
    }

    SUBCASE("budget violations and grid collisions are rejected") {
        std::mt19937_64 rng(13);
        auto m = testsupport::random_positioned_model(rng, 5, 2.0);
        CHECK_THROWS_AS(snap_to_grid(m, 0.21, 0.1), CompileError);
    }
}

TEST_CASE("map composition algebra") {
    auto record = [](double a, double delta) {
        MapRecord r;
        r.kind = LayerKind::GridSnap;
        r.log_a = std::log(a);
        r.log_delta = std::log(delta);
        return r;
    };

    auto single = compose_maps({record(2.0, 0.1)});
    CHECK(std::exp(single.log_scale) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(single.delta == doctest::Approx(0.1).epsilon(1e-12));

    // hand-folded fixture: outer (2, 0.1) then inner (3, 0.2) -> (6, 0.2/2 + 0.1)
    auto two = compose_maps({record(2.0, 0.1), record(3.0, 0.2)});
    CHECK(std::exp(two.log_scale) == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(two.delta == doctest::Approx(0.2).epsilon(1e-12));

    // k unit-scale layers accumulate their deltas linearly
    std::vector<MapRecord> unit(5, record(1.0, 0.03));
    auto five = compose_maps(unit);
    CHECK(std::exp(five.log_scale) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(five.delta == doctest::Approx(0.15).epsilon(1e-12));

    // associativity: composing grouped halves matches the flat fold
    std::vector<MapRecord> records{record(2.0, 0.1), record(0.5, 0.05), record(3.0, 0.2),
                                   record(1.5, 0.01)};
    auto flat = compose_maps(records);
    auto left = compose_maps({records[0], records[1]});
    auto right = compose_maps({records[2], records[3]});
    const double grouped_delta = right.delta / std::exp(left.log_scale) + left.delta;
    const double grouped_log_scale = left.log_scale + right.log_scale;
    CHECK(flat.delta == doctest::Approx(grouped_delta).epsilon(1e-12));
    CHECK(flat.log_scale == doctest::Approx(grouped_log_scale).epsilon(1e-12));

    CHECK_THROWS_AS(compose_maps({}), InvalidModel);
}

TEST_CASE("a single vertex compiles and decodes to itself") {
    auto bundle = compile_pipeline(path_instance(1), 12.0, {});
    CHECK(bundle.grid_model().spin_count() == 1);
    auto gr = ground_states(bundle.grid_model());
    auto decoded = decode_pipeline(bundle, gr.states.front());
    CHECK(decoded.independent_set == std::vector<int>{0});
}

TEST_CASE("pipeline compilation at t=0") {
    auto bundle = compile_pipeline(path_instance(3), 12.0, {});
    CHECK(bundle.t == 0);
    REQUIRE(bundle.models.size() == 3);
    REQUIRE(bundle.records.size() == 2);
    CHECK(bundle.grid_model().spin_count() == 3);
    CHECK(bundle.composed.delta < 5.0 / 12.0);
    CHECK(bundle.composed.delta <= 0.25 + bundle.grid_delta + 1e-12);

    for (size_t i = 0; i < bundle.records.size(); ++i) {
        auto rep = verify_map(bundle.models[i + 1], bundle.models[i], bundle.records[i],
                              {DomainKind::AllStates});
        INFO("layer ", i, " residual ", rep.max_residual, " delta ", rep.delta);
        CHECK(rep.passed);
    }

    // end to end: the grid ground state decodes to a maximum independent set
    auto gr = ground_states(bundle.grid_model());
    auto decoded = decode_pipeline(bundle, gr.states.front());
    auto oracle = testsupport::exhaustive_mis(path_instance(3));
    CHECK(static_cast<int>(decoded.independent_set.size()) == oracle.size);
    CHECK(decoded.independent_set == std::vector<int>{0, 2});
}

TEST_CASE("reduction layers multiply the spin count by 8 each") {
    // one layer: 2 -> 16
    auto upper = two_spin_upper(10.0, 0.5, -0.25);
    const double f1 = measured_f_with_margin(6.0);
    const double eps1 = 0.5 * reduce_epsilon_bound(6.0, 2, 0.1, f1);
    auto [mid, rec1] = reduce_exponent(upper, eps1, 0.1, f1);
    CHECK(mid.spin_count() == 16);
    CHECK(mid.alpha() == doctest::Approx(6.0));

    // chained: 16 -> 128
    const double f2 = measured_f_with_margin(2.0);
    const double eps2 = 0.5 * reduce_epsilon_bound(2.0, 16, 0.1, f2);
    auto [low, rec2] = reduce_exponent(mid, eps2, 0.1, f2);
    CHECK(low.spin_count() == 128);
    CHECK(low.alpha() == doctest::Approx(2.0));
    CHECK(rec2.gadget_groups.size() == 16);
}

TEST_CASE("deep schedules fail loudly instead of silently degrading") {
    CHECK(choose_t(4, 3.0) == 2);
    CHECK_THROWS_AS(compile_pipeline(path_instance(4), 3.0, {}), CompileError);

    // t=1 schedules drive the grid pitch below what double coordinates can
    // address exactly; compilation refuses to build the broken model
    CHECK(choose_t(2, 3.5) == 1);
    CHECK_THROWS_WITH_AS(compile_pipeline(path_instance(2), 3.5, {}),
                         doctest::Contains("grid"), CompileError);

    CompileOptions beyond;
    beyond.t_override = 3;
    CHECK_THROWS_AS(compile_pipeline(path_instance(2), 0.5, beyond), GuardExceeded);

    CompileOptions too_shallow;
    too_shallow.t_override = 0;
    CHECK_THROWS_AS(compile_pipeline(path_instance(3), 3.0, too_shallow), CompileError);
}

TEST_CASE("decoding rejects corrupted gadgets by name") {
    auto upper = two_spin_upper(6.0, 0.0, 0.0);
    const double f_hat = measured_f_with_margin(2.0);
    const double eps = 0.5 * reduce_epsilon_bound(2.0, 2, 0.1, f_hat);
    auto [lower, rec] = reduce_exponent(upper, eps, 0.1, f_hat);

    SpinState good = valid_physical_state({1, -1});
    CHECK(decode_layer(rec, good).to_string() == "+-");

    SpinState corrupt = good.flipped(3); // inside gadget 0
    CHECK_THROWS_AS(decode_layer(rec, corrupt), DecodeError);
    try {
        decode_layer(rec, corrupt);
    } catch (const DecodeError& e) {
        CHECK(e.gadget == 0);
        CHECK(std::string(e.what()).find("gadget 0") != std::string::npos);
    }
    SpinState corrupt2 = good.flipped(12); // inside gadget 1
    try {
        decode_layer(rec, corrupt2);
    } catch (const DecodeError& e) {
        CHECK(e.gadget == 1);
    }
}

TEST_CASE("pipeline input validation") {
    MisInstance broken;
    broken.vertices = {{0, Vec2{0, 0}}, {1, Vec2{1.2, 0}}};
    CHECK_THROWS_AS(compile_pipeline(broken, 12.0, {}), InvalidModel);
    CHECK_THROWS_AS(compile_pipeline(path_instance(3), -1.0, {}), InvalidModel);
    CHECK_THROWS_AS(encode_nn(broken), InvalidModel);

    auto bundle = compile_pipeline(path_instance(3), 12.0, {});
    CHECK_THROWS_AS(decode_pipeline(bundle, SpinState::from_string("-+-+")), InvalidModel);
}

TEST_CASE("identity pipeline decodes states unchanged") {
    CompileOptions options;
    options.grid_epsilon = 1.0; // integer instance: the snap is exact
    auto bundle = compile_pipeline(path_instance(3), 12.0, options);
    const SpinState s = SpinState::from_string("-+-");
    auto decoded = decode_pipeline(bundle, s);
    CHECK(decoded.nn_state == s);
    CHECK(decoded.independent_set == std::vector<int>{0, 2});
}

TEST_CASE("bundles survive a save/load round trip") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "rfim_bundle_test";
    fs::remove_all(dir);
    auto bundle = compile_pipeline(path_instance(3), 12.0, {});
    save_bundle(dir.string(), bundle);
    auto loaded = load_bundle(dir.string());
    CHECK(loaded.t == bundle.t);
    REQUIRE(loaded.models.size() == bundle.models.size());
    for (size_t i = 0; i < loaded.models.size(); ++i)
        CHECK(loaded.models[i].spin_count() == bundle.models[i].spin_count());
    REQUIRE(loaded.records.size() == bundle.records.size());
    for (size_t i = 0; i < loaded.records.size(); ++i) {
        CHECK(loaded.records[i].log_a == bundle.records[i].log_a);
        CHECK(loaded.records[i].offset == bundle.records[i].offset);
    }
    // a reloaded bundle still verifies and decodes
    for (size_t i = 0; i < loaded.records.size(); ++i) {
        auto rep = verify_map(loaded.models[i + 1], loaded.models[i], loaded.records[i],
                              {DomainKind::AllStates});
        CHECK(rep.passed);
    }
    auto gr = ground_states(loaded.grid_model());
    auto decoded = decode_pipeline(loaded, gr.states.front());
    CHECK(decoded.independent_set == std::vector<int>{0, 2});
    fs::remove_all(dir);
}
