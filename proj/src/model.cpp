#include "drmco/model.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

namespace drmco {

using nlohmann::json;

std::pair<Vec, Vec> Instance::state_box(int t) const {
    if (t == 0) return {x0, x0};
    const auto& list = stages[t - 1];
    const std::size_t d = list.front().state_dim_out();
    Vec lo(d, kInf), hi(d, -kInf);
    for (const auto& node : list) {
        for (std::size_t k = 0; k < d; ++k) {
            lo[k] = std::min(lo[k], node.x_bounds[k].first);
            hi[k] = std::max(hi[k], node.x_bounds[k].second);
        }
    }
    return {lo, hi};
}

bool Diagnostics::has_error() const {
    for (const auto& item : items)
        if (item.severity == Diagnostic::Severity::Error) return true;
    return false;
}

void Diagnostics::error(std::string location, std::string message) {
    items.push_back({Diagnostic::Severity::Error, std::move(location), std::move(message)});
}

void Diagnostics::warning(std::string location, std::string message) {
    items.push_back({Diagnostic::Severity::Warning, std::move(location), std::move(message)});
}

std::string Diagnostics::to_string() const {
    std::ostringstream out;
    for (const auto& item : items) {
        out << (item.severity == Diagnostic::Severity::Error ? "error" : "warning") << " at "
            << item.location << ": " << item.message << '\n';
    }
    return out.str();
}

namespace {

bool bounds_ok(const Bound& b) { return b.first <= b.second; }

// Per-node LP: minimize the stage cost over z in the previous stage box and
// (y, x) in the node's own feasible set.
void check_nonnegative_cost(const Instance& inst, int t, std::size_t node_idx,
                            const StageNodeProblem& node, Diagnostics& diags) {
    const std::string where = "stage " + std::to_string(t) + " node " + std::to_string(node_idx);
    const auto [zlo, zhi] = inst.state_box(t - 1);
    LinearProgram lp;
    std::vector<int> z(node.state_dim_in()), y(node.internal_dim()), x(node.state_dim_out());
    for (std::size_t k = 0; k < z.size(); ++k) z[k] = lp.add_var(zlo[k], zhi[k], node.cost_z[k]);
    for (std::size_t k = 0; k < y.size(); ++k)
        y[k] = lp.add_var(node.y_bounds[k].first, node.y_bounds[k].second, node.cost_y[k]);
    for (std::size_t k = 0; k < x.size(); ++k)
        x[k] = lp.add_var(node.x_bounds[k].first, node.x_bounds[k].second, node.cost_x[k]);
    for (const auto& row : node.rows) {
        std::vector<std::pair<int, double>> terms;
        for (std::size_t k = 0; k < z.size(); ++k)
            if (row.z[k] != 0.0) terms.emplace_back(z[k], row.z[k]);
        for (std::size_t k = 0; k < y.size(); ++k)
            if (row.y[k] != 0.0) terms.emplace_back(y[k], row.y[k]);
        for (std::size_t k = 0; k < x.size(); ++k)
            if (row.x[k] != 0.0) terms.emplace_back(x[k], row.x[k]);
        lp.add_row(row.sense, row.rhs, terms);
    }
    const LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible) {
        diags.error(where, "node is infeasible for every incoming state");
    } else if (sol.status == LpStatus::Unbounded) {
        diags.error(where, "stage cost is unbounded below (nonnegativity fails)");
    } else if (sol.objective_value + node.cost_const < -1e-9) {
        diags.error(where, "stage cost can be negative: minimum " +
                               std::to_string(sol.objective_value + node.cost_const));
    }
}

}  // namespace

Diagnostics validate(const Instance& inst) {
    Diagnostics diags;
    if (inst.T < 1) {
        diags.error("instance", "stage count must be at least 1");
        return diags;
    }
    if (inst.stages.size() != static_cast<std::size_t>(inst.T)) {
        diags.error("stages", "expected " + std::to_string(inst.T) + " stage node lists");
        return diags;
    }
    if (!inst.stages.empty() && inst.stages.front().size() != 1)
        diags.error("stage 1", "first stage must have exactly one node");
    if (inst.diameters.size() != static_cast<std::size_t>(inst.T))
        diags.error("diameters", "expected one diameter per stage");
    for (std::size_t i = 0; i < inst.diameters.size(); ++i)
        if (!(inst.diameters[i] > 0.0))
            diags.error("diameters[" + std::to_string(i) + "]", "diameter must be positive");

    std::vector<std::vector<bool>> node_ok(inst.T);
    for (int t = 1; t <= inst.T; ++t) {
        const auto& list = inst.stages[t - 1];
        const std::string stage_where = "stage " + std::to_string(t);
        node_ok[t - 1].assign(list.size(), true);
        if (list.empty()) {
            diags.error(stage_where, "stage has no nodes");
            continue;
        }
        const std::size_t d_out = list.front().state_dim_out();
        const std::size_t d_in_expected =
            t == 1 ? inst.x0.size() : inst.stages[t - 2].front().state_dim_out();
        for (std::size_t n = 0; n < list.size(); ++n) {
            const auto& node = list[n];
            const std::string where = stage_where + " node " + std::to_string(n);
            bool ok = true;
            if (node.state_dim_out() != d_out) {
                diags.error(where, "outgoing state dimension differs within the stage");
                ok = false;
            }
            if (node.state_dim_in() != d_in_expected) {
                diags.error(where, t == 1 ? "incoming state dimension must match x0"
                                          : "incoming state dimension must match previous stage");
                ok = false;
            }
            if (node.y_bounds.size() != node.internal_dim() ||
                node.x_bounds.size() != node.state_dim_out()) {
                diags.error(where, "bound list lengths do not match variable counts");
                ok = false;
            } else {
                for (std::size_t k = 0; k < node.y_bounds.size(); ++k)
                    if (!bounds_ok(node.y_bounds[k])) {
                        diags.error(where, "crossed y bound " + std::to_string(k));
                        ok = false;
                    }
                for (std::size_t k = 0; k < node.x_bounds.size(); ++k) {
                    if (!bounds_ok(node.x_bounds[k])) {
                        diags.error(where, "crossed x bound " + std::to_string(k));
                        ok = false;
                    }
                    if (!std::isfinite(node.x_bounds[k].first) ||
                        !std::isfinite(node.x_bounds[k].second)) {
                        diags.error(where, "state bounds must be finite (compact state space)");
                        ok = false;
                    }
                }
            }
            for (std::size_t r = 0; r < node.rows.size(); ++r) {
                const auto& row = node.rows[r];
                if (row.z.size() != node.state_dim_in() || row.y.size() != node.internal_dim() ||
                    row.x.size() != node.state_dim_out()) {
                    diags.error(where, "row " + std::to_string(r) + " coefficient lengths mismatch");
                    ok = false;
                }
            }
            node_ok[t - 1][n] = ok;
        }
    }

    const std::size_t expected_amb = inst.T > 0 ? static_cast<std::size_t>(inst.T - 1) : 0;
    if (inst.ambiguity.size() != expected_amb) {
        diags.error("ambiguity", "expected " + std::to_string(expected_amb) + " ambiguity sets");
    } else {
        for (int t = 1; t < inst.T; ++t) {
            const std::string where = "ambiguity[" + std::to_string(t - 1) + "]";
            const auto& set = inst.ambiguity[t - 1];
            if (set.support != inst.stages[t].size()) {
                diags.error(where, "support size " + std::to_string(set.support) +
                                       " does not match stage " + std::to_string(t + 1) + " node count " +
                                       std::to_string(inst.stages[t].size()));
                continue;
            }
            try {
                set.check();
            } catch (const InvalidParams& e) {
                diags.error(where, e.what());
            }
        }
    }

    if (inst.regularized()) {
        if (inst.reg_factors->size() != expected_amb) {
            diags.error("reg_factors", "expected " + std::to_string(expected_amb) + " factors");
        } else {
            for (std::size_t i = 0; i < inst.reg_factors->size(); ++i)
                if (!((*inst.reg_factors)[i] > 0.0))
                    diags.error("reg_factors[" + std::to_string(i) + "]",
                                "regularization factor must be positive");
        }
    }

    if (diags.has_error()) return diags;

    for (int t = 1; t <= inst.T; ++t) {
        for (std::size_t n = 0; n < inst.stages[t - 1].size(); ++n) {
            if (!node_ok[t - 1][n]) continue;
            check_nonnegative_cost(inst, t, n, inst.stages[t - 1][n], diags);
        }
        const auto [lo, hi] = inst.state_box(t);
        Vec diag(lo.size());
        for (std::size_t k = 0; k < lo.size(); ++k) diag[k] = hi[k] - lo[k];
        const double implied = norm_2(diag);
        if (std::isfinite(implied) && inst.diameters[t - 1] < implied - 1e-9)
            diags.warning("diameters[" + std::to_string(t - 1) + "]",
                          "declared diameter " + std::to_string(inst.diameters[t - 1]) +
                              " is smaller than the bound-box diagonal " + std::to_string(implied));
    }
    return diags;
}

namespace {

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& required, const std::set<std::string>& optional) {
    if (!obj.is_object()) throw SchemaError(where + ": expected an object");
    for (const auto& key : required)
        if (!obj.contains(key)) throw SchemaError(where + ": missing field '" + key + "'");
    for (const auto& [key, unused] : obj.items()) {
        (void)unused;
        if (!required.count(key) && !optional.count(key))
            throw SchemaError(where + ": unknown field '" + key + "'");
    }
}

double parse_bound_entry(const json& j, const std::string& where, bool is_lower) {
    if (j.is_null()) return is_lower ? -kInf : kInf;
    if (!j.is_number()) throw SchemaError(where + ": bound entries must be numbers or null");
    return j.get<double>();
}

std::vector<Bound> parse_bounds(const json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array of [lo, hi] pairs");
    std::vector<Bound> out;
    for (const auto& entry : j) {
        if (!entry.is_array() || entry.size() != 2)
            throw SchemaError(where + ": each bound must be a [lo, hi] pair");
        out.emplace_back(parse_bound_entry(entry[0], where, true),
                         parse_bound_entry(entry[1], where, false));
    }
    return out;
}

json dump_bounds(const std::vector<Bound>& bounds) {
    json out = json::array();
    for (const auto& [lo, hi] : bounds) {
        json pair = json::array();
        if (std::isfinite(lo)) pair.push_back(lo); else pair.push_back(nullptr);
        if (std::isfinite(hi)) pair.push_back(hi); else pair.push_back(nullptr);
        out.push_back(std::move(pair));
    }
    return out;
}

Vec parse_vec(const json& j, const std::string& where) {
    if (!j.is_array()) throw SchemaError(where + ": expected an array of numbers");
    Vec out;
    for (const auto& v : j) {
        if (!v.is_number()) throw SchemaError(where + ": expected an array of numbers");
        out.push_back(v.get<double>());
    }
    return out;
}

Sense parse_sense(const json& j, const std::string& where) {
    if (!j.is_string()) throw SchemaError(where + ": sense must be a string");
    const std::string s = j.get<std::string>();
    if (s == "<=") return Sense::Le;
    if (s == "=") return Sense::Eq;
    if (s == ">=") return Sense::Ge;
    throw SchemaError(where + ": sense must be one of \"<=\", \"=\", \">=\"");
}

StageNodeProblem parse_node(const json& j, const std::string& where) {
    require_keys(j, where,
                 {"cost_z", "cost_y", "cost_x", "cost_const", "rows", "y_bounds", "x_bounds"}, {});
    StageNodeProblem node;
    node.cost_z = parse_vec(j["cost_z"], where + ".cost_z");
    node.cost_y = parse_vec(j["cost_y"], where + ".cost_y");
    node.cost_x = parse_vec(j["cost_x"], where + ".cost_x");
    if (!j["cost_const"].is_number()) throw SchemaError(where + ".cost_const: expected a number");
    node.cost_const = j["cost_const"].get<double>();
    if (!j["rows"].is_array()) throw SchemaError(where + ".rows: expected an array");
    std::size_t r = 0;
    for (const auto& row_json : j["rows"]) {
        const std::string row_where = where + ".rows[" + std::to_string(r++) + "]";
        require_keys(row_json, row_where, {"z", "y", "x", "sense", "rhs"}, {});
        StageNodeProblem::Row row;
        row.z = parse_vec(row_json["z"], row_where + ".z");
        row.y = parse_vec(row_json["y"], row_where + ".y");
        row.x = parse_vec(row_json["x"], row_where + ".x");
        row.sense = parse_sense(row_json["sense"], row_where);
        if (!row_json["rhs"].is_number()) throw SchemaError(row_where + ".rhs: expected a number");
        row.rhs = row_json["rhs"].get<double>();
        node.rows.push_back(std::move(row));
    }
    node.y_bounds = parse_bounds(j["y_bounds"], where + ".y_bounds");
    node.x_bounds = parse_bounds(j["x_bounds"], where + ".x_bounds");
    return node;
}

json dump_node(const StageNodeProblem& node) {
    json j;
    j["cost_z"] = node.cost_z;
    j["cost_y"] = node.cost_y;
    j["cost_x"] = node.cost_x;
    j["cost_const"] = node.cost_const;
    j["rows"] = json::array();
    for (const auto& row : node.rows) {
        j["rows"].push_back({{"z", row.z},
                             {"y", row.y},
                             {"x", row.x},
                             {"sense", row.sense == Sense::Le ? "<=" : row.sense == Sense::Eq ? "=" : ">="},
                             {"rhs", row.rhs}});
    }
    j["y_bounds"] = dump_bounds(node.y_bounds);
    j["x_bounds"] = dump_bounds(node.x_bounds);
    return j;
}

AmbiguitySet parse_ambiguity(const json& j, const std::string& where, std::size_t support) {
    require_keys(j, where, {"kind"}, {"p_hat", "dist", "sigma", "beta"});
    if (!j["kind"].is_string()) throw SchemaError(where + ".kind: expected a string");
    const std::string kind = j["kind"].get<std::string>();
    AmbiguitySet set;
    if (kind == "simplex") {
        set.kind = AmbiguityKind::FullSimplex;
        set.support = support;
        return set;
    }
    if (kind == "singleton") {
        if (!j.contains("p_hat")) throw SchemaError(where + ": singleton needs p_hat");
        set.kind = AmbiguityKind::Singleton;
        set.p_hat = parse_vec(j["p_hat"], where + ".p_hat");
        set.support = set.p_hat.size();
        return set;
    }
    if (kind == "wasserstein") {
        if (!j.contains("p_hat") || !j.contains("dist"))
            throw SchemaError(where + ": wasserstein needs p_hat and dist");
        if (j.contains("sigma") == j.contains("beta"))
            throw SchemaError(where + ": wasserstein needs exactly one of sigma or beta");
        set.kind = AmbiguityKind::WassersteinBall;
        set.p_hat = parse_vec(j["p_hat"], where + ".p_hat");
        set.support = set.p_hat.size();
        if (!j["dist"].is_array()) throw SchemaError(where + ".dist: expected a matrix");
        for (const auto& row : j["dist"]) set.dist.push_back(parse_vec(row, where + ".dist"));
        double total = 0.0;
        for (const auto& row : set.dist)
            for (double v : row) total += v;
        if (j.contains("sigma")) {
            if (!j["sigma"].is_number()) throw SchemaError(where + ".sigma: expected a number");
            set.sigma = j["sigma"].get<double>();
        } else {
            if (!j["beta"].is_number()) throw SchemaError(where + ".beta: expected a number");
            set.sigma = j["beta"].get<double>() * total;
        }
        return set;
    }
    throw SchemaError(where + ".kind: expected singleton, simplex, or wasserstein");
}

json dump_ambiguity(const AmbiguitySet& set) {
    json j;
    switch (set.kind) {
        case AmbiguityKind::FullSimplex:
            j["kind"] = "simplex";
            break;
        case AmbiguityKind::Singleton:
            j["kind"] = "singleton";
            j["p_hat"] = set.p_hat;
            break;
        case AmbiguityKind::WassersteinBall:
            j["kind"] = "wasserstein";
            j["p_hat"] = set.p_hat;
            j["dist"] = set.dist;
            j["sigma"] = set.sigma;
            break;
    }
    return j;
}

}  // namespace

Instance instance_from_json(const std::string& text) {
    json doc;
    try {
        doc = json::parse(text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("instance JSON: ") + e.what());
    }
    require_keys(doc, "instance", {"T", "stages", "ambiguity", "reg_factors", "x0", "diameters"}, {});
    Instance inst;
    if (!doc["T"].is_number_integer()) throw SchemaError("T: expected an integer");
    inst.T = doc["T"].get<int>();
    if (!doc["stages"].is_array()) throw SchemaError("stages: expected an array");
    int t = 1;
    for (const auto& stage_json : doc["stages"]) {
        if (!stage_json.is_array()) throw SchemaError("stages: each stage must be a node array");
        std::vector<StageNodeProblem> nodes;
        std::size_t n = 0;
        for (const auto& node_json : stage_json)
            nodes.push_back(parse_node(node_json, "stage " + std::to_string(t) + " node " +
                                                      std::to_string(n++)));
        inst.stages.push_back(std::move(nodes));
        ++t;
    }
    if (!doc["ambiguity"].is_array()) throw SchemaError("ambiguity: expected an array");
    std::size_t a = 0;
    for (const auto& amb_json : doc["ambiguity"]) {
        const std::size_t support =
            a + 1 < inst.stages.size() ? inst.stages[a + 1].size() : 0;
        inst.ambiguity.push_back(
            parse_ambiguity(amb_json, "ambiguity[" + std::to_string(a) + "]", support));
        ++a;
    }
    if (doc["reg_factors"].is_string()) {
        if (doc["reg_factors"].get<std::string>() != "unregularized")
            throw SchemaError("reg_factors: expected an array or the string \"unregularized\"");
        inst.reg_factors.reset();
    } else {
        inst.reg_factors = parse_vec(doc["reg_factors"], "reg_factors");
    }
    inst.x0 = parse_vec(doc["x0"], "x0");
    inst.diameters = parse_vec(doc["diameters"], "diameters");
    return inst;
}

std::string instance_to_json(const Instance& inst) {
    json doc;
    doc["T"] = inst.T;
    doc["stages"] = json::array();
    for (const auto& stage : inst.stages) {
        json nodes = json::array();
        for (const auto& node : stage) nodes.push_back(dump_node(node));
        doc["stages"].push_back(std::move(nodes));
    }
    doc["ambiguity"] = json::array();
    for (const auto& set : inst.ambiguity) doc["ambiguity"].push_back(dump_ambiguity(set));
    if (inst.regularized()) doc["reg_factors"] = *inst.reg_factors;
    else doc["reg_factors"] = "unregularized";
    doc["x0"] = inst.x0;
    doc["diameters"] = inst.diameters;
    return doc.dump(2);
}

Instance load_instance(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open instance file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    Instance inst = instance_from_json(buf.str());
    Diagnostics diags = validate(inst);
    if (diags.has_error()) throw ValidationError(std::move(diags));
    return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write instance file: " + path);
    out << instance_to_json(inst);
    out << '\n';
    if (!out) throw IoError("short write to " + path);
}

VertexReformulation vertices_to_dr(
    const Vec& box_lo, const Vec& box_hi,
    const std::function<StageNodeProblem(const Vec& vertex)>& builder) {
    const std::size_t E = box_lo.size();
    if (box_hi.size() != E) throw DimensionMismatch("box bounds length mismatch");
    if (E == 0 || E > 20) throw DimensionTooLarge("box dimension must be in 1..20");
    for (std::size_t k = 0; k < E; ++k)
        if (box_lo[k] > box_hi[k]) throw InvalidParams("crossed box bounds");

    VertexReformulation out;
    const std::size_t count = std::size_t{1} << E;
    out.nodes.reserve(count);
    Vec vertex(E);
    for (std::size_t idx = 0; idx < count; ++idx) {
        for (std::size_t k = 0; k < E; ++k) {
            const bool high = (idx >> (E - 1 - k)) & 1U;  // first coordinate most significant
            vertex[k] = high ? box_hi[k] : box_lo[k];
        }
        out.nodes.push_back(builder(vertex));
    }
    out.ambiguity = AmbiguitySet::full_simplex(count);
    return out;
}

}  // namespace drmco
