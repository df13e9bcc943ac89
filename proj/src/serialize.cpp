#include "rfim/serialize.hpp"

#include <json.hpp>

namespace rfim {

namespace {

using ordered_json = nlohmann::ordered_json;

double require_number(const ordered_json& j, const std::string& path) {
    if (!j.is_number()) throw InvalidModel(path + ": expected a number");
    return j.get<double>();
}

std::vector<SpinRecord> parse_spins(const ordered_json& doc, bool require_pos) {
    if (!doc.contains("spins") || !doc["spins"].is_array())
        throw InvalidModel("spins: required array");
    std::vector<SpinRecord> spins;
    spins.reserve(doc["spins"].size());
    size_t i = 0;
    for (const auto& js : doc["spins"]) {
        const std::string path = "spins[" + std::to_string(i) + "]";
        SpinRecord rec;
        if (!js.contains("id") || !js["id"].is_number_integer())
            throw InvalidModel(path + ".id: required integer");
        rec.id = js["id"].get<int>();
        if (js.contains("pos")) {
            const auto& p = js["pos"];
            if (!p.is_array() || p.size() != 2)
                throw InvalidModel(path + ".pos: expected [x, y]");
            rec.pos = Vec2{require_number(p[0], path + ".pos[0]"), require_number(p[1], path + ".pos[1]")};
        } else if (require_pos) {
            throw InvalidModel(path + ".pos: required for long_range models");
        }
        if (js.contains("field")) rec.field = require_number(js["field"], path + ".field");
        if (js.contains("grid")) {
            const auto& g = js["grid"];
            if (!g.is_array() || g.size() != 2 || !g[0].is_number_integer() || !g[1].is_number_integer())
                throw InvalidModel(path + ".grid: expected [ix, iy] integers");
            rec.grid = std::array<long long, 2>{g[0].get<long long>(), g[1].get<long long>()};
        }
        spins.push_back(rec);
        ++i;
    }
    return spins;
}

} // namespace

IsingModel load_model(const std::string& text) {
    ordered_json doc;
    try {
        doc = ordered_json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw InvalidModel(std::string("document: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("kind") || !doc["kind"].is_string())
        throw InvalidModel("kind: required string");
    const std::string kind = doc["kind"].get<std::string>();
    double tolerance = 1e-9;
    if (doc.contains("tolerance")) tolerance = require_number(doc["tolerance"], "tolerance");
    if (kind == "long_range") {
        if (!doc.contains("alpha")) throw InvalidModel("alpha: required for long_range");
        if (!doc.contains("c")) throw InvalidModel("c: required for long_range");
        const double alpha = require_number(doc["alpha"], "alpha");
        const double c = require_number(doc["c"], "c");
        auto spins = parse_spins(doc, /*require_pos=*/true);
        return IsingModel::make_long_range(std::move(spins), alpha, c, tolerance);
    }
    if (kind == "explicit") {
        if (!doc.contains("edges") || !doc["edges"].is_array())
            throw InvalidModel("edges: required array for explicit");
        auto spins = parse_spins(doc, /*require_pos=*/false);
        std::vector<ExplicitEdge> edges;
        edges.reserve(doc["edges"].size());
        size_t i = 0;
        for (const auto& je : doc["edges"]) {
            const std::string path = "edges[" + std::to_string(i) + "]";
            ExplicitEdge e;
            if (!je.contains("u") || !je["u"].is_number_integer())
                throw InvalidModel(path + ".u: required integer");
            if (!je.contains("v") || !je["v"].is_number_integer())
                throw InvalidModel(path + ".v: required integer");
            if (!je.contains("J")) throw InvalidModel(path + ".J: required number");
            e.u = je["u"].get<int>();
            e.v = je["v"].get<int>();
            e.coupling = require_number(je["J"], path + ".J");
            edges.push_back(e);
            ++i;
        }
        return IsingModel::make_explicit(std::move(spins), std::move(edges), tolerance);
    }
    throw InvalidModel("kind: expected \"long_range\" or \"explicit\"");
}

std::string save_model(const IsingModel& model) {
    ordered_json doc;
    doc["kind"] = model.kind() == CouplingKind::LongRange ? "long_range" : "explicit";
    if (model.tolerance() != 1e-9) doc["tolerance"] = model.tolerance();
    if (model.kind() == CouplingKind::LongRange) {
        doc["alpha"] = model.alpha();
        doc["c"] = model.c();
    }
    ordered_json spins = ordered_json::array();
    for (const auto& s : model.spins()) {
        ordered_json js;
        js["id"] = s.id;
        if (s.pos) js["pos"] = ordered_json::array({s.pos->x, s.pos->y});
        js["field"] = s.field;
        if (s.grid) js["grid"] = ordered_json::array({(*s.grid)[0], (*s.grid)[1]});
        spins.push_back(js);
    }
    doc["spins"] = spins;
    if (model.kind() == CouplingKind::Explicit) {
        ordered_json edges = ordered_json::array();
        for (const auto& e : model.edges()) {
            ordered_json je;
            je["u"] = e.u;
            je["v"] = e.v;
            je["J"] = e.coupling;
            edges.push_back(je);
        }
        doc["edges"] = edges;
    }
    return doc.dump();
}

SpinState load_state(const std::string& text) {
    std::string trimmed;
    trimmed.reserve(text.size());
    for (char ch : text)
        if (ch == '+' || ch == '-') trimmed.push_back(ch);
        else if (!isspace(static_cast<unsigned char>(ch)))
            throw InvalidModel("state: unexpected character");
    return SpinState::from_string(trimmed);
}

} // namespace rfim
