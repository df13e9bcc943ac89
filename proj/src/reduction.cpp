#include "rfim/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "rfim/gadget.hpp"
#include "rfim/serialize.hpp"

namespace rfim {

namespace {

constexpr double kGeomTol = 1e-9;
const double kSqrt2 = std::sqrt(2.0);

bool finite_nonzero(double x) { return std::isfinite(x) && x != 0.0; }

std::string pair_name(int i, int j) {
    return "(" + std::to_string(i) + "," + std::to_string(j) + ")";
}

} // namespace

std::vector<std::pair<int, int>> MisInstance::edges() const {
    std::vector<std::pair<int, int>> out;
    for (size_t i = 0; i < vertices.size(); ++i)
        for (size_t j = i + 1; j < vertices.size(); ++j)
            if (std::abs(dist(vertices[i].pos, vertices[j].pos) - 1.0) <= kGeomTol)
                out.emplace_back(static_cast<int>(i), static_cast<int>(j));
    return out;
}

MisReport validate_mis_instance(const MisInstance& inst) {
    MisReport rep;
    const int n = static_cast<int>(inst.vertices.size());
    for (int i = 0; i < n; ++i)
        if (inst.vertices[static_cast<size_t>(i)].id != i)
            rep.violations.push_back("vertices[" + std::to_string(i) + "].id: ids must be dense 0..n-1");
    std::vector<int> degree(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const double d = dist(inst.vertices[static_cast<size_t>(i)].pos,
                                  inst.vertices[static_cast<size_t>(j)].pos);
            if (std::abs(d - 1.0) <= kGeomTol) {
                ++degree[static_cast<size_t>(i)];
                ++degree[static_cast<size_t>(j)];
            } else if (d < 1.0 - kGeomTol) {
                rep.violations.push_back("pair " + pair_name(i, j) + " closer than unit distance");
            } else if (d < kSqrt2 - kGeomTol) {
                rep.violations.push_back("non-adjacent pair " + pair_name(i, j) +
                                         " closer than sqrt(2)");
            } else if (std::abs(d - kSqrt2) <= kGeomTol) {
                rep.warnings.push_back("non-adjacent pair " + pair_name(i, j) + " at exactly sqrt(2)");
            }
        }
    }
    for (int i = 0; i < n; ++i)
        if (degree[static_cast<size_t>(i)] > 3)
            rep.violations.push_back("vertex " + std::to_string(i) + " has degree " +
                                     std::to_string(degree[static_cast<size_t>(i)]) + " > 3");
    return rep;
}

MisInstance load_mis_instance(const std::string& text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidModel(std::string("document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vertices") || !doc["vertices"].is_array())
        throw InvalidModel("vertices: required array");
    MisInstance inst;
    size_t i = 0;
    for (const auto& jv : doc["vertices"]) {
        const std::string path = "vertices[" + std::to_string(i) + "]";
        if (!jv.contains("id") || !jv["id"].is_number_integer())
            throw InvalidModel(path + ".id: required integer");
        if (!jv.contains("pos") || !jv["pos"].is_array() || jv["pos"].size() != 2 ||
            !jv["pos"][0].is_number() || !jv["pos"][1].is_number())
            throw InvalidModel(path + ".pos: expected [x, y]");
        inst.vertices.push_back(
            {jv["id"].get<int>(), Vec2{jv["pos"][0].get<double>(), jv["pos"][1].get<double>()}});
        ++i;
    }
    return inst;
}

std::string save_mis_instance(const MisInstance& inst) {
    nlohmann::ordered_json doc;
    auto verts = nlohmann::ordered_json::array();
    for (const auto& v : inst.vertices) {
        nlohmann::ordered_json jv;
        jv["id"] = v.id;
        jv["pos"] = {v.pos.x, v.pos.y};
        verts.push_back(jv);
    }
    doc["vertices"] = verts;
    return doc.dump();
}

IsingModel encode_nn(const MisInstance& inst) {
    const auto rep = validate_mis_instance(inst);
    if (!rep.ok()) throw InvalidModel("instance: " + rep.violations.front());
    std::vector<SpinRecord> spins;
    spins.reserve(inst.vertices.size());
    for (const auto& v : inst.vertices) spins.push_back({v.id, v.pos, -1.0, std::nullopt});
    std::vector<ExplicitEdge> edges;
    for (const auto& [u, v] : inst.edges()) edges.push_back({u, v, -1.0});
    return IsingModel::make_explicit(std::move(spins), std::move(edges));
}

DecodedSet decode_independent_set(const SpinState& state, const MisInstance& inst) {
    const int n = static_cast<int>(inst.vertices.size());
    if (state.size() != n) throw InvalidModel("state: length does not match instance");
    const auto edges = inst.edges();
    std::vector<int> degree(static_cast<size_t>(n), 0);
    for (const auto& [u, v] : edges) {
        ++degree[static_cast<size_t>(u)];
        ++degree[static_cast<size_t>(v)];
    }
    std::vector<char> member(static_cast<size_t>(n), 0);
    for (int i = 0; i < n; ++i) member[static_cast<size_t>(i)] = state.at(i) < 0 ? 1 : 0;

    DecodedSet out;
    for (;;) {
        const std::pair<int, int>* violated = nullptr;
        for (const auto& e : edges)
            if (member[static_cast<size_t>(e.first)] && member[static_cast<size_t>(e.second)]) {
                violated = &e;
                break;
            }
        if (!violated) break;
        const auto [u, v] = *violated;
        int drop;
        if (degree[static_cast<size_t>(u)] != degree[static_cast<size_t>(v)])
            drop = degree[static_cast<size_t>(u)] > degree[static_cast<size_t>(v)] ? u : v;
        else
            drop = std::min(u, v);
        member[static_cast<size_t>(drop)] = 0;
        out.repaired = true;
    }
    for (int i = 0; i < n; ++i)
        if (member[static_cast<size_t>(i)]) out.vertices.push_back(i);
    return out;
}

double alpha_threshold(int v_count) {
    if (v_count < 1) throw InvalidModel("alpha_threshold: need at least one vertex");
    const double v = static_cast<double>(v_count);
    return 2.0 / std::log(2.0) * std::log(v * (v + 1.0)) + 2.0;
}

int choose_t(int v_count, double alpha_target) {
    if (!(alpha_target > 0.0)) throw InvalidModel("alpha_target: must be > 0");
    const double thr = alpha_threshold(v_count);
    int t = 0;
    while (alpha_target + 4.0 * t <= thr) ++t;
    return t;
}

SpinState decode_layer(const MapRecord& record, const SpinState& lower) {
    if (record.kind != LayerKind::GadgetReduce) return lower;
    std::vector<signed char> upper;
    upper.reserve(record.gadget_groups.size());
    for (size_t g = 0; g < record.gadget_groups.size(); ++g) {
        const auto& ids = record.gadget_groups[g];
        bool plus = true, minus = true;
        for (int j = 0; j < 8; ++j) {
            const int s = lower.at(ids[static_cast<size_t>(j)]);
            if (s != gadget_pattern_sign(j)) plus = false;
            if (s != -gadget_pattern_sign(j)) minus = false;
        }
        if (plus)
            upper.push_back(1);
        else if (minus)
            upper.push_back(-1);
        else
            throw DecodeError("gadget " + std::to_string(g) + " is in neither valid pattern",
                              static_cast<int>(g));
    }
    return SpinState(std::move(upper));
}

std::pair<IsingModel, MapRecord> lift_long_range(const MisInstance& inst, double alpha) {
    const auto rep = validate_mis_instance(inst);
    if (!rep.ok()) throw InvalidModel("instance: " + rep.violations.front());
    const int n = static_cast<int>(inst.vertices.size());
    if (!(alpha > alpha_threshold(n)))
        throw InvalidModel("alpha " + std::to_string(alpha) + " at or below the lift threshold " +
                           std::to_string(alpha_threshold(n)));
    std::vector<SpinRecord> spins;
    spins.reserve(static_cast<size_t>(n));
    for (const auto& v : inst.vertices) spins.push_back({v.id, v.pos, -1.0, std::nullopt});
    IsingModel model = IsingModel::make_long_range(std::move(spins), alpha, -1.0);
    MapRecord rec;
    rec.kind = LayerKind::NnLift;
    rec.log_a = 0.0;
    rec.log_delta = std::log(0.25);
    rec.offset = 0.0;
    return {std::move(model), rec};
}

double measured_f_with_margin(double alpha) { return 2.0 * estimate_f(alpha, 10.0, 100.0, 25); }

double reduce_epsilon_bound(double alpha_lower, int upper_spins, double delta,
                            double f_with_margin) {
    const double coeff = alpha_lower * alpha_lower * (alpha_lower + 2.0) * (alpha_lower + 2.0);
    const double n = static_cast<double>(upper_spins);
    return delta * 2.0 * coeff / (n * (n + 1.0) * f_with_margin);
}

double snap_epsilon_bound(double alpha, double min_distance, int spins, double delta,
                          double coupling_magnitude) {
    const double n = static_cast<double>(spins);
    return std::pow(min_distance, alpha + 1.0) * delta /
           (2.0 * (alpha + 1.0) * n * (n + 1.0) * coupling_magnitude);
}

std::pair<IsingModel, MapRecord> reduce_exponent(const IsingModel& upper, double epsilon,
                                                 double delta,
                                                 std::optional<double> f_with_margin) {
    if (upper.kind() != CouplingKind::LongRange || upper.c() != -1.0)
        throw InvalidModel("reduce: upper model must be unit antiferromagnetic long-range");
    const double alpha_upper = upper.alpha();
    if (!(alpha_upper > 4.0)) throw InvalidModel("reduce: upper exponent must exceed 4");
    const double alpha = alpha_upper - 4.0;
    const int m = upper.spin_count();
    if (m < 1) throw InvalidModel("reduce: empty model");
    // The per-pair residual bound is summed assuming upper distances >= 1.
    if (m > 1 && upper.min_distance() < 1.0 - 1e-12)
        throw InvalidModel("reduce: upper model must keep spins at distance >= 1");
    for (const auto& s : upper.spins())
        if (std::abs(s.field) > 1.0 + 1e-12)
            throw InvalidModel("reduce: |field| of spin " + std::to_string(s.id) + " exceeds 1");
    if (!(epsilon > 0.0) || !(delta > 0.0))
        throw CompileError("reduce: epsilon and delta must be positive (schedule underflow?)");

    const double f_hat = f_with_margin ? *f_with_margin : measured_f_with_margin(alpha);
    const double bound = reduce_epsilon_bound(alpha, m, delta, f_hat);
    if (!(epsilon <= bound))
        throw CompileError("reduce: epsilon " + std::to_string(epsilon) +
                           " exceeds the accuracy budget " + std::to_string(bound));

    const double coeff = alpha * alpha * (alpha + 2.0) * (alpha + 2.0);
    const double log_a = std::log(coeff) + alpha_upper * std::log(epsilon);
    const double a = std::exp(log_a);
    if (!finite_nonzero(a))
        throw CompileError("reduce: scale factor not representable in double precision");

    // Materialize the gadget layer.
    std::vector<GadgetSpec> specs;
    specs.reserve(static_cast<size_t>(m));
    double max_field = 0.0;
    for (const auto& s : upper.spins()) {
        GadgetSpec spec;
        spec.center = Vec2{s.pos->x / epsilon, s.pos->y / epsilon};
        if (!std::isfinite(spec.center.x) || !std::isfinite(spec.center.y))
            throw CompileError("reduce: rescaled coordinates overflow double precision");
        spec.scale = 1.0;
        spec.alpha = alpha;
        spec.logical_field = s.field * a;
        if (s.field != 0.0 && spec.logical_field == 0.0)
            throw CompileError("reduce: logical field underflows double precision");
        max_field = std::max(max_field, std::abs(spec.logical_field));
        specs.push_back(spec);
    }
    IsingModel lower = compose_gadgets(specs);

    // Freeze-radius condition: every spin outside a gadget must sit beyond the
    // separation radius from that gadget's center.
    if (m > 1) {
        const double radius = min_separation(alpha, max_field, 8 * (m - 1));
        double closest = std::numeric_limits<double>::infinity();
        for (int g = 0; g < m; ++g)
            for (int s = 0; s < 8 * m; ++s) {
                if (s / 8 == g) continue;
                closest = std::min(closest, dist(specs[static_cast<size_t>(g)].center,
                                                 *lower.spins()[static_cast<size_t>(s)].pos));
            }
        if (!(closest > radius))
            throw CompileError("reduce: gadget separation " + std::to_string(closest) +
                               " inside the freeze radius " + std::to_string(radius));
    }

    MapRecord rec;
    rec.kind = LayerKind::GadgetReduce;
    rec.log_a = log_a;
    rec.log_delta = std::log(delta);
    rec.gadget_groups.reserve(static_cast<size_t>(m));
    for (int g = 0; g < m; ++g) {
        std::array<int, 8> ids{};
        for (int j = 0; j < 8; ++j) ids[static_cast<size_t>(j)] = 8 * g + j;
        rec.gadget_groups.push_back(ids);
    }
    // Additive constant: internal gadget energy is the same in both valid
    // patterns and never cancels against the upper model.
    CompensatedSum internal;
    for (int g = 0; g < m; ++g)
        for (int i = 8 * g; i < 8 * (g + 1); ++i)
            for (int j = i + 1; j < 8 * (g + 1); ++j)
                internal.add(-lower.coupling(i, j) * gadget_pattern_sign(i - 8 * g) *
                             gadget_pattern_sign(j - 8 * g));
    std::tie(rec.offset, rec.offset_lo) = internal.value_pair();

    // Carry the energy-comparison tolerance down at the layer scale.
    IsingModel scaled = IsingModel::make_long_range(
        std::vector<SpinRecord>(lower.spins()), alpha, -1.0, upper.tolerance() * a);
    return {std::move(scaled), rec};
}

std::pair<IsingModel, MapRecord> snap_to_grid(const IsingModel& upper, double epsilon,
                                              double delta) {
    if (upper.kind() != CouplingKind::LongRange)
        throw InvalidModel("snap: model must be long-range");
    if (!upper.all_positioned()) throw InvalidModel("snap: model must be fully positioned");
    if (!(epsilon > 0.0) || !(delta > 0.0))
        throw CompileError("snap: epsilon and delta must be positive (schedule underflow?)");
    const double alpha = upper.alpha();
    const int n = upper.spin_count();

    // An exact snap (every coordinate an integer multiple of epsilon) has zero
    // residual, so the accuracy budget is moot for it.
    bool exact = true;
    for (const auto& s : upper.spins()) {
        const double qx = s.pos->x / epsilon;
        const double qy = s.pos->y / epsilon;
        if (std::abs(qx - std::round(qx)) > 1e-12 || std::abs(qy - std::round(qy)) > 1e-12) {
            exact = false;
            break;
        }
    }
    if (!exact && n > 1) {
        const double bound =
            snap_epsilon_bound(alpha, upper.min_distance(), n, delta, std::abs(upper.c()));
        if (!(epsilon < bound))
            throw CompileError("snap: epsilon " + std::to_string(epsilon) +
                               " exceeds the accuracy budget " + std::to_string(bound));
    }

    const double a = std::pow(epsilon, alpha);
    if (!finite_nonzero(a)) throw CompileError("snap: scale factor not representable");

    std::vector<SpinRecord> spins;
    spins.reserve(static_cast<size_t>(n));
    std::set<std::pair<double, double>> occupied;
    for (const auto& s : upper.spins()) {
        // round() keeps exact snaps exact; floor() would drop coordinates whose
        // quotient lands a hair below an integer
        const double gx = exact ? std::round(s.pos->x / epsilon) : std::floor(s.pos->x / epsilon);
        const double gy = exact ? std::round(s.pos->y / epsilon) : std::floor(s.pos->y / epsilon);
        // Beyond 2^53 a double no longer addresses individual grid sites, so
        // the built model would not be the snapped model and its accuracy
        // budget would silently be violated.
        constexpr double kExactIntRange = 9007199254740992.0;
        if (!std::isfinite(gx) || !std::isfinite(gy) || std::abs(gx) > kExactIntRange ||
            std::abs(gy) > kExactIntRange)
            throw CompileError("snap: grid coordinates leave the exact integer range of double "
                               "precision");
        if (!occupied.insert({gx, gy}).second)
            throw InvalidModel("snap: spins collide on grid point after snapping");
        SpinRecord rec;
        rec.id = s.id;
        rec.pos = Vec2{gx, gy};
        rec.field = s.field * a;
        if (s.field != 0.0 && rec.field == 0.0)
            throw CompileError("snap: field underflows double precision");
        rec.grid = std::array<long long, 2>{static_cast<long long>(gx), static_cast<long long>(gy)};
        spins.push_back(rec);
    }
    IsingModel grid =
        IsingModel::make_long_range(std::move(spins), alpha, upper.c(), upper.tolerance() * a);

    MapRecord rec;
    rec.kind = LayerKind::GridSnap;
    rec.log_a = alpha * std::log(epsilon);
    rec.log_delta = std::log(delta);
    rec.offset = 0.0;
    return {std::move(grid), rec};
}

ComposedMap compose_maps(const std::vector<MapRecord>& records) {
    if (records.empty()) throw InvalidModel("compose: empty record list");
    ComposedMap acc;
    acc.log_scale = records.front().log_a;
    acc.delta = records.front().delta();
    acc.offset = records.front().offset;
    for (size_t i = 1; i < records.size(); ++i) {
        const auto& r = records[i];
        acc.delta += std::exp(r.log_delta - acc.log_scale);
        acc.offset = std::exp(r.log_a) * acc.offset + r.offset;
        acc.log_scale += r.log_a;
    }
    return acc;
}

PipelineBundle compile_pipeline(const MisInstance& inst, double alpha_target,
                                const CompileOptions& options) {
    const auto rep = validate_mis_instance(inst);
    if (!rep.ok()) throw InvalidModel("instance: " + rep.violations.front());
    const int n_v = static_cast<int>(inst.vertices.size());
    if (n_v < 1) throw InvalidModel("instance: empty");
    if (!(alpha_target > 0.0)) throw InvalidModel("alpha_target: must be > 0");

    const double threshold = alpha_threshold(n_v);
    const int t = options.t_override.value_or(choose_t(n_v, alpha_target));
    if (!(alpha_target + 4.0 * t > threshold))
        throw CompileError("t=" + std::to_string(t) + " leaves the lift exponent " +
                           std::to_string(alpha_target + 4.0 * t) + " at or below the threshold " +
                           std::to_string(threshold));
    if (t > options.max_t)
        throw GuardExceeded("t=" + std::to_string(t) + " exceeds the desk-scale guard " +
                            std::to_string(options.max_t));

    PipelineBundle bundle;
    bundle.instance = inst;
    bundle.t = t;
    bundle.alpha_target = alpha_target;
    bundle.models.push_back(encode_nn(inst));
    auto [lifted, lift_rec] = lift_long_range(inst, alpha_target + 4.0 * t);
    bundle.models.push_back(std::move(lifted));
    bundle.records.push_back(lift_rec);

    // Layer i turns the (alpha + 4i)-exponent model into alpha + 4(i-1).
    // Accuracy budgets shrink with the product of inner layer scales so that
    // each layer contributes at most 1/(12t) to the composed delta; we take
    // half of every budget for float headroom.
    double log_scale_acc = 0.0; // sum of log F_j over layers built so far
    for (int i = t; i >= 1; --i) {
        const double alpha_lower = alpha_target + 4.0 * (i - 1);
        const double log_delta = log_scale_acc - std::log(24.0 * t);
        const double delta = std::exp(log_delta);
        if (!finite_nonzero(delta))
            throw CompileError("layer " + std::to_string(i) +
                               ": accuracy budget underflows double precision");
        const IsingModel& upper = bundle.models.back();
        const double f_hat = measured_f_with_margin(alpha_lower);
        const double epsilon =
            0.5 * reduce_epsilon_bound(alpha_lower, upper.spin_count(), delta, f_hat);
        if (!finite_nonzero(epsilon))
            throw CompileError("layer " + std::to_string(i) +
                               ": epsilon underflows double precision");
        auto [lower, rec] = reduce_exponent(upper, epsilon, delta, f_hat);
        log_scale_acc += rec.log_a;
        bundle.layer_epsilons.push_back(epsilon);
        bundle.layer_deltas.push_back(delta);
        bundle.layer_f_hats.push_back(f_hat);
        bundle.models.push_back(std::move(lower));
        bundle.records.push_back(rec);
    }

    // Grid layer: budget is (product of layer scales)/12, halved.
    {
        const double log_delta = log_scale_acc - std::log(24.0);
        const double grid_delta = options.grid_delta.value_or(std::exp(log_delta));
        if (!finite_nonzero(grid_delta))
            throw CompileError("grid layer: accuracy budget underflows double precision");
        const IsingModel& upper = bundle.models.back();
        double grid_epsilon;
        if (options.grid_epsilon) {
            grid_epsilon = *options.grid_epsilon;
        } else if (upper.spin_count() < 2) {
            grid_epsilon = 1.0; // no pair residuals: any pitch is exact
        } else {
            grid_epsilon = 0.5 * snap_epsilon_bound(alpha_target, upper.min_distance(),
                                                    upper.spin_count(), grid_delta,
                                                    std::abs(upper.c()));
        }
        if (!finite_nonzero(grid_epsilon))
            throw CompileError("grid layer: epsilon underflows double precision");
        auto [grid, rec] = snap_to_grid(upper, grid_epsilon, grid_delta);
        bundle.grid_epsilon = grid_epsilon;
        bundle.grid_delta = grid_delta;
        bundle.models.push_back(std::move(grid));
        bundle.records.push_back(rec);
    }

    bundle.composed = compose_maps(bundle.records);
    if (!(bundle.composed.delta < 5.0 / 12.0))
        throw CompileError("composed delta " + std::to_string(bundle.composed.delta) +
                           " reaches 5/12; gap preservation not guaranteed");

    const long long expected = static_cast<long long>(n_v) * (1ll << (3 * t));
    if (bundle.grid_model().spin_count() != expected)
        throw std::logic_error("grid spin count disagrees with |V|*8^t");
    return bundle;
}

PipelineDecode decode_pipeline(const PipelineBundle& bundle, const SpinState& grid_state) {
    if (grid_state.size() != bundle.grid_model().spin_count())
        throw InvalidModel("state: length does not match the grid model");
    SpinState state = grid_state;
    for (auto it = bundle.records.rbegin(); it != bundle.records.rend(); ++it)
        state = decode_layer(*it, state);
    PipelineDecode out;
    out.nn_state = state;
    auto decoded = decode_independent_set(state, bundle.instance);
    out.independent_set = std::move(decoded.vertices);
    out.repaired = decoded.repaired;
    return out;
}

namespace {

const char* kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::NnLift: return "nn_lift";
        case LayerKind::GadgetReduce: return "gadget_reduce";
        case LayerKind::GridSnap: return "grid_snap";
    }
    return "?";
}

LayerKind kind_from_name(const std::string& s) {
    if (s == "nn_lift") return LayerKind::NnLift;
    if (s == "gadget_reduce") return LayerKind::GadgetReduce;
    if (s == "grid_snap") return LayerKind::GridSnap;
    throw InvalidModel("maps.json: unknown layer kind \"" + s + "\"");
}

} // namespace

void save_bundle(const std::string& directory, const PipelineBundle& bundle) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    for (size_t i = 0; i < bundle.models.size(); ++i) {
        std::ofstream out(fs::path(directory) / ("layer_" + std::to_string(i) + ".json"));
        out << save_model(bundle.models[i]) << "\n";
    }
    nlohmann::ordered_json doc;
    doc["t"] = bundle.t;
    doc["alpha_target"] = bundle.alpha_target;
    doc["instance"] = nlohmann::ordered_json::parse(save_mis_instance(bundle.instance));
    auto records = nlohmann::ordered_json::array();
    for (const auto& r : bundle.records) {
        nlohmann::ordered_json jr;
        jr["kind"] = kind_name(r.kind);
        jr["log_a"] = r.log_a;
        jr["log_delta"] = r.log_delta;
        jr["offset"] = r.offset;
        jr["offset_lo"] = r.offset_lo;
        if (!r.gadget_groups.empty()) {
            auto groups = nlohmann::ordered_json::array();
            for (const auto& g : r.gadget_groups) groups.push_back(g);
            jr["gadgets"] = groups;
        }
        records.push_back(jr);
    }
    doc["records"] = records;
    doc["layer_epsilons"] = bundle.layer_epsilons;
    doc["layer_deltas"] = bundle.layer_deltas;
    doc["layer_f_hats"] = bundle.layer_f_hats;
    doc["grid_epsilon"] = bundle.grid_epsilon;
    doc["grid_delta"] = bundle.grid_delta;
    doc["composed"] = {{"log_scale", bundle.composed.log_scale},
                       {"delta", bundle.composed.delta},
                       {"offset", bundle.composed.offset}};
    std::ofstream maps(fs::path(directory) / "maps.json");
    maps << doc.dump(2) << "\n";
}

PipelineBundle load_bundle(const std::string& directory) {
    namespace fs = std::filesystem;
    const fs::path dir(directory);
    std::ifstream maps(dir / "maps.json");
    if (!maps) throw InvalidModel("bundle: missing maps.json in " + directory);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(maps);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidModel(std::string("maps.json: ") + e.what());
    }
    PipelineBundle bundle;
    bundle.t = doc.at("t").get<int>();
    bundle.alpha_target = doc.value("alpha_target", 0.0);
    bundle.instance = load_mis_instance(doc.at("instance").dump());
    for (const auto& jr : doc.at("records")) {
        MapRecord r;
        r.kind = kind_from_name(jr.at("kind").get<std::string>());
        r.log_a = jr.at("log_a").get<double>();
        r.log_delta = jr.at("log_delta").get<double>();
        r.offset = jr.value("offset", 0.0);
        r.offset_lo = jr.value("offset_lo", 0.0);
        if (jr.contains("gadgets"))
            for (const auto& g : jr["gadgets"]) {
                std::array<int, 8> ids{};
                for (int j = 0; j < 8; ++j) ids[static_cast<size_t>(j)] = g.at(j).get<int>();
                r.gadget_groups.push_back(ids);
            }
        bundle.records.push_back(std::move(r));
    }
    bundle.layer_epsilons = doc.value("layer_epsilons", std::vector<double>{});
    bundle.layer_deltas = doc.value("layer_deltas", std::vector<double>{});
    bundle.layer_f_hats = doc.value("layer_f_hats", std::vector<double>{});
    bundle.grid_epsilon = doc.value("grid_epsilon", 0.0);
    bundle.grid_delta = doc.value("grid_delta", 0.0);
    if (doc.contains("composed")) {
        bundle.composed.log_scale = doc["composed"].value("log_scale", 0.0);
        bundle.composed.delta = doc["composed"].value("delta", 0.0);
        bundle.composed.offset = doc["composed"].value("offset", 0.0);
    }
    for (size_t i = 0;; ++i) {
        const fs::path layer = dir / ("layer_" + std::to_string(i) + ".json");
        if (!fs::exists(layer)) break;
        std::ifstream in(layer);
        std::stringstream ss;
        ss << in.rdbuf();
        bundle.models.push_back(load_model(ss.str()));
    }
    if (bundle.models.size() != bundle.records.size() + 1)
        throw InvalidModel("bundle: layer files do not match the record count");
    return bundle;
}

} // namespace rfim
