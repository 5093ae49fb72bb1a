// sfdm: command-line runner for the decision-model reduction pipeline.
//
//   sfdm <subcommand> [--config PATH] [--set key=value]... [--out DIR] [--seed N] [--quiet]
//
// Exit codes: 0 ok, 2 config/schema error, 3 numerical failure, 4 validity failure.

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include "CLI11.hpp"
#include "json.hpp"
#include "sfdm/model_json.hpp"
#include "sfdm/sfdm.hpp"

extern char** environ;

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sfdm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitValidity = 4;

const std::vector<std::string> kSubcommands = {"equilibria", "bifurcation", "manifold",  "potential", "stationary",
                                               "evolve1d",   "evolve2d",    "behavior",  "simulate"};

// Defaults of every subcommand block. A key absent here is rejected.
json block_defaults(const std::string& sub) {
    json reduction = {{"grid_resolution", 40}, {"n_points", 2001}, {"y_m", 0.0}};
    json b;
    if (sub == "equilibria") {
        b = {{"grid_resolution", 40}};
    } else if (sub == "bifurcation") {
        b = {{"grid_resolution", 40}, {"w_lo", 1.0}, {"w_hi", 3.0}, {"steps", 201}, {"fold_tol", 1e-4}};
    } else if (sub == "manifold" || sub == "potential") {
        b = reduction;
        b["require_valid"] = true;
    } else if (sub == "stationary") {
        b = reduction;
    } else if (sub == "evolve1d") {
        b = reduction;
        b.update({{"dt", 0.01}, {"t_end", 200.0}, {"initial_mean", 0.0}, {"initial_sd", 0.3},
                  {"snapshots", json::array()}, {"binary", false}});
    } else if (sub == "evolve2d") {
        b = reduction;
        b.update({{"cells", 256}, {"dt", 0.1}, {"t_end", 200.0}, {"initial_sd", 0.3}, {"subcells", 32},
                  {"dt_1d", 0.01}, {"write_density", true}, {"binary", false}});
    } else if (sub == "behavior") {
        b = reduction;
        b["n_points"] = 8001;
    } else if (sub == "simulate") {
        b = reduction;
        b.update({{"mode", "reduced"}, {"n_trials", 1000}, {"dt", 0.01}, {"t_max", 5000.0}, {"seed", 0},
                  {"y0", 0.0}, {"y_lower", nullptr}, {"y_upper", nullptr}, {"brownian_bridge", true},
                  {"decision_threshold", nullptr}, {"initial", nullptr}, {"per_trial_csv", false}});
    }
    b["sweep"] = json::object();
    return b;
}

bool same_kind(const json& def, const json& v) {
    if (def.is_null()) return v.is_null() || v.is_number() || v.is_array();
    if (def.is_number_integer()) return v.is_number_integer() || (v.is_number_float() && v.get<double>() == std::floor(v.get<double>()));
    if (def.is_number()) return v.is_number();
    if (def.is_boolean()) return v.is_boolean();
    if (def.is_string()) return v.is_string();
    if (def.is_array()) return v.is_array();
    if (def.is_object()) return v.is_object();
    return false;
}

void check_block(const std::string& sub, json& block) {
    if (!block.is_object()) throw config_error("block '" + sub + "' must be an object");
    const json def = block_defaults(sub);
    for (auto& [key, value] : block.items()) {
        const auto it = def.find(key);
        if (it == def.end()) throw config_error("unknown key '" + sub + "." + key + "'");
        if (!same_kind(*it, value)) throw config_error("key '" + sub + "." + key + "' has the wrong type");
        if (it->is_number_integer() && value.is_number_float()) value = static_cast<long long>(value.get<double>());
    }
    for (const auto& [key, values] : block["sweep"].items()) {
        if (!is_model_param_key(key)) throw config_error("sweep key '" + key + "' is not a model parameter");
        if (!values.is_array() || values.empty()) throw config_error("sweep '" + key + "' must be a non-empty array");
        for (const auto& v : values)
            if (!v.is_number()) throw config_error("sweep '" + key + "' must hold numbers");
    }
}

/// Validates the whole document and fills in defaults.
json resolve(const std::string& sub, const json& doc) {
    if (!doc.is_object()) throw config_error("config root must be a JSON object");
    json out = {{"model", to_json(ModelParams{})}};
    for (const auto& [key, value] : doc.items()) {
        if (key == "model") {
            out["model"] = to_json(model_params_from_json(value));
        } else if (std::find(kSubcommands.begin(), kSubcommands.end(), key) != kSubcommands.end()) {
            json block = block_defaults(key);
            if (!value.is_object()) throw config_error("block '" + key + "' must be an object");
            for (const auto& [k, v] : value.items()) block[k] = v;
            check_block(key, block);
            out[key] = block;
        } else {
            throw config_error("unknown top-level key '" + key + "'");
        }
    }
    if (!out.contains(sub)) out[sub] = block_defaults(sub);
    return out;
}

json parse_value(const std::string& text) {
    try {
        return json::parse(text);
    } catch (const json::parse_error&) {
        return text;
    }
}

/// key=value override. Keys are "model.k", "<subcommand>.k", a bare model
/// parameter, or a bare key of the active block; dots descend into objects.
void apply_override(json& doc, const std::string& sub, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) throw config_error("override '" + assignment + "' is not key=value");
    const std::string key = assignment.substr(0, eq);
    std::vector<std::string> path;
    std::stringstream ss(key);
    for (std::string part; std::getline(ss, part, '.');) {
        if (part.empty()) throw config_error("override key '" + key + "' is malformed");
        path.push_back(part);
    }
    const bool explicit_root = path[0] == "model" ||
                               std::find(kSubcommands.begin(), kSubcommands.end(), path[0]) != kSubcommands.end();
    if (!explicit_root) path.insert(path.begin(), is_model_param_key(path[0]) ? "model" : sub);
    if (path.size() < 2) throw config_error("override key '" + key + "' names a whole block");
    json* node = &doc;
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        if (!node->is_object() && !node->is_null()) throw config_error("override key '" + key + "' is malformed");
        node = &(*node)[path[i]];
    }
    (*node)[path.back()] = parse_value(assignment.substr(eq + 1));
}

std::vector<std::string> env_overrides() {
    std::vector<std::string> out;
    for (char** e = environ; *e != nullptr; ++e) {
        const std::string entry(*e);
        if (entry.rfind("SFDM_", 0) != 0) continue;
        const auto eq = entry.find('=');
        if (eq == std::string::npos) continue;
        std::string key = entry.substr(5, eq - 5);
        for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        for (std::size_t p; (p = key.find("__")) != std::string::npos;) key.replace(p, 2, ".");
        out.push_back(key + entry.substr(eq));
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

class Csv {
public:
    explicit Csv(const std::vector<std::string>& header) { row_strings(header); }

    template <class... T>
    void row(const T&... cells) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(cells), first = false), ...);
        out_ << '\n';
    }

    std::string str() const { return out_.str(); }

private:
    static std::string cell(double v) { return fmt(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(std::size_t v) { return std::to_string(v); }
    static std::string cell(std::string_view v) { return std::string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    void row_strings(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    std::ostringstream out_;
};

struct Outputs {
    std::vector<std::pair<std::string, std::string>> files;
    json summary = json::object();

    void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
    void add_json(std::string name, const json& j) { add(std::move(name), j.dump(2) + "\n"); }
};

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.parent_path() / ("." + path.filename().string() + ".tmp" + std::to_string(::getpid()));
    {
        std::ofstream f(tmp, std::ios::binary);
        f << content;
        if (!f) throw std::runtime_error("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

json vec_json(Vec2 v) { return json::array({v.x, v.y}); }

json opt_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// One model parameter set per run: the cartesian product of the sweep arrays.
struct Run {
    ModelParams params;
    json overrides = json::object();
};

std::vector<Run> expand_runs(const json& model, const json& sweep) {
    std::vector<Run> runs{{model_params_from_json(model), json::object()}};
    for (const auto& [key, values] : sweep.items()) {
        std::vector<Run> next;
        for (const auto& base : runs)
            for (const auto& v : values) {
                json m = to_json(base.params);
                m[key] = v;
                Run r{model_params_from_json(m), base.overrides};
                r.overrides[key] = v;
                next.push_back(std::move(r));
            }
        runs = std::move(next);
    }
    return runs;
}

std::string run_name(const std::string& stem, std::size_t k, std::size_t n, const std::string& ext) {
    return n == 1 ? stem + ext : stem + "_" + std::to_string(k) + ext;
}

ReductionOptions reduction_options(const json& b) {
    ReductionOptions o;
    o.grid_resolution = b["grid_resolution"].get<int>();
    o.n_points = b["n_points"].get<int>();
    o.y_m = b["y_m"].get<double>();
    return o;
}

json equilibrium_json(const Equilibrium& e, double y) {
    return {{"nu", vec_json(e.location)},
            {"re_mu", json::array({e.mu1.real(), e.mu2.real()})}, {"im_mu", json::array({e.mu1.imag(), e.mu2.imag()})},
            {"stability", std::string(to_string(e.stability))},
            {"role", std::string(to_string(e.role))},
            {"y", y}};
}

json frame_json(const Reduction& r) {
    json eqs = json::array();
    for (std::size_t i = 0; i < r.equilibria.equilibria.size(); ++i)
        eqs.push_back(equilibrium_json(r.equilibria.equilibria[i], r.equilibrium_y[i]));
    const auto& c = r.curve;
    return {{"S0", vec_json(r.frame.S0)},
            {"mu1", r.frame.mu1},
            {"mu2", r.frame.mu2},
            {"epsilon", r.frame.epsilon},
            {"beta_y", r.frame.beta_y},
            {"P", json::array({json::array({r.frame.P.a11, r.frame.P.a12}), json::array({r.frame.P.a21, r.frame.P.a22})})},
            {"y_m", c.y_m},
            {"valid", c.valid},
            {"valid_span", json::array({c.valid_lo, c.valid_hi})},
            {"violation_y", opt_json(c.violation_y)},
            {"violation_nu", c.violation_nu ? vec_json(*c.violation_nu) : json(nullptr)},
            {"truncated", c.truncated},
            {"root_lost", json::array({opt_json(c.root_lost_lo), opt_json(c.root_lost_hi)})},
            {"equilibria", eqs}};
}

void require_valid(const Reduction& r) {
    const auto& c = r.curve;
    if (c.valid) return;
    std::ostringstream msg;
    msg << "slow manifold leaves the positive quadrant";
    if (c.violation_y) msg << " at y = " << fmt(*c.violation_y);
    if (c.violation_nu) msg << " (nu = " << fmt(c.violation_nu->x) << ", " << fmt(c.violation_nu->y) << ")";
    if (c.truncated) msg << "; continuation lost the root";
    msg << " for w_plus = " << fmt(r.params.w_plus) << ", delta_lambda = " << fmt(r.params.delta_lambda);
    throw validity_error("InvalidManifold", msg.str());
}

void cmd_equilibria(const json& b, const std::vector<Run>& runs, Outputs& out) {
    Csv csv({"w_plus", "branch_id", "nu1", "nu2", "re_mu1", "re_mu2", "stability"});
    json counts = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto eqs = find_equilibria(runs[k].params, b["grid_resolution"].get<int>());
        Csv one({"w_plus", "branch_id", "nu1", "nu2", "re_mu1", "re_mu2", "stability"});
        for (std::size_t i = 0; i < eqs.equilibria.size(); ++i) {
            const auto& e = eqs.equilibria[i];
            one.row(runs[k].params.w_plus, i, e.location.x, e.location.y, e.mu1.real(), e.mu2.real(), to_string(e.stability));
        }
        out.add(run_name("equilibria", k, runs.size(), ".csv"), one.str());
        json roles = json::object();
        for (const auto& e : eqs.equilibria) roles[std::string(to_string(e.role))] = vec_json(e.location);
        counts.push_back({{"run", k},
                          {"overrides", runs[k].overrides},
                          {"count", eqs.count()},
                          {"seeds_converged", eqs.seeds_converged},
                          {"seeds_total", eqs.seeds_total},
                          {"roles", roles}});
    }
    out.add_json("equilibria.json", counts);
    out.summary["counts"] = json::array();
    for (const auto& c : counts) out.summary["counts"].push_back(c["count"]);
}

void cmd_bifurcation(const json& b, const std::vector<Run>& runs, Outputs& out) {
    ScanOptions opts;
    opts.grid_resolution = b["grid_resolution"].get<int>();
    opts.fold_tol = b["fold_tol"].get<double>();
    json folds_all = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto d = bifurcation_scan(runs[k].params, b["w_lo"].get<double>(), b["w_hi"].get<double>(),
                                        b["steps"].get<int>(), opts);
        Csv csv({"w_plus", "branch_id", "nu1", "nu2", "re_mu1", "re_mu2", "stability"});
        for (const auto& s : d.samples)
            for (std::size_t i = 0; i < s.equilibria.size(); ++i) {
                const auto& e = s.equilibria[i];
                csv.row(s.w_plus, s.branch_ids[i], e.location.x, e.location.y, e.mu1.real(), e.mu2.real(), to_string(e.stability));
            }
        out.add(run_name("bifurcation", k, runs.size(), ".csv"), csv.str());
        json folds = json::array();
        for (const auto& f : d.folds)
            folds.push_back({{"w_plus", f.w_plus}, {"count_below", f.count_below}, {"count_above", f.count_above}});
        folds_all.push_back({{"run", k},
                             {"overrides", runs[k].overrides},
                             {"delta_lambda", runs[k].params.delta_lambda},
                             {"branch_count", d.branch_count},
                             {"folds", folds}});
    }
    out.add_json("folds.json", folds_all);
    out.summary["folds"] = folds_all;
}

void cmd_manifold(const std::string& stem, const json& b, const std::vector<Run>& runs, Outputs& out) {
    const auto opts = reduction_options(b);
    json validity = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto r = reduce(runs[k].params, opts);
        if (b["require_valid"].get<bool>()) require_valid(r);
        Csv csv({"y", "x_star", "nu1", "nu2", "g_slow", "G"});
        const auto& c = r.curve;
        for (std::size_t i = 0; i < c.y.size(); ++i) {
            const Vec2 nu = r.frame.to_rates({c.x_star[i], c.y[i]});
            csv.row(c.y[i], c.x_star[i], nu.x, nu.y, r.potential.g()[i], r.potential.G()[i]);
        }
        out.add(run_name(stem, k, runs.size(), ".csv"), csv.str());
        json side = frame_json(r);
        side["model"] = to_json(r.params);
        if (stem == "potential") {
            try {
                const auto bs = find_barriers(r.potential);
                json ex = json::array();
                for (const auto& e : bs.extrema) ex.push_back({{"y", e.y}, {"G", e.G}, {"is_max", e.is_max}});
                side["regime"] = std::string(to_string(bs.regime));
                side["a_minus"] = bs.a_minus;
                side["a_plus"] = bs.a_plus;
                side["wells"] = json::array({bs.well_left, bs.well_right});
                side["extrema"] = ex;
            } catch (const Error& e) {
                side["regime"] = nullptr;
                side["regime_error"] = e.name();
            }
        }
        out.add_json(run_name(stem, k, runs.size(), ".json"), side);
        validity.push_back(c.valid);
    }
    out.summary["valid"] = validity;
}

std::string binary_blob(const std::vector<double>& v) {
    std::string s(v.size() * sizeof(double), '\0');
    std::memcpy(s.data(), v.data(), s.size());
    return s;
}

void cmd_stationary(const json& b, const std::vector<Run>& runs, Outputs& out) {
    const auto opts = reduction_options(b);
    json info = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto r = reduce(runs[k].params, opts);
        const auto q = stationary_density_1d(r.potential);
        Csv csv({"y", "q"});
        for (std::size_t i = 0; i < q.y.size(); ++i) csv.row(q.y[i], q.q[i]);
        out.add(run_name("stationary", k, runs.size(), ".csv"), csv.str());
        info.push_back({{"run", k},
                        {"overrides", runs[k].overrides},
                        {"mass", q.mass()},
                        {"valid", r.curve.valid},
                        {"mean_nu1", moment(q, r.curve, r.frame, [](Vec2 v) { return v.x; })},
                        {"mean_nu2", moment(q, r.curve, r.frame, [](Vec2 v) { return v.y; })}});
    }
    out.add_json("stationary.json", info);
    out.summary["runs_info"] = info;
}

void cmd_evolve1d(const json& b, const std::vector<Run>& runs, Outputs& out) {
    const auto opts = reduction_options(b);
    const double dt = b["dt"].get<double>();
    const double t_end = b["t_end"].get<double>();
    std::vector<double> snaps;
    for (const auto& s : b["snapshots"]) {
        if (!s.is_number() || s.get<double>() <= 0.0 || s.get<double>() > t_end)
            throw config_error("evolve1d.snapshots must be times in (0, t_end]");
        snaps.push_back(s.get<double>());
    }
    std::sort(snaps.begin(), snaps.end());
    json info = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto r = reduce(runs[k].params, opts);
        const auto qs = stationary_density_1d(r.potential);
        const auto q0 = gaussian_1d(r.potential.y(), b["initial_mean"].get<double>(), b["initial_sd"].get<double>());
        Csv csv({"t", "y", "q"});
        auto emit = [&](double t, const Density1D& q) {
            for (std::size_t i = 0; i < q.y.size(); ++i) csv.row(t, q.y[i], q.q[i]);
        };
        emit(0.0, q0);
        // integrate piecewise between snapshot times so each lands exactly
        Density1D q = q0;
        double t = 0.0;
        for (double ts : snaps) {
            if (ts > t) q = evolve_1d(q, r.potential, dt, ts - t);
            t = ts;
            if (ts < t_end) emit(ts, q);
        }
        if (t < t_end) q = evolve_1d(q, r.potential, dt, t_end - t);
        emit(t_end, q);
        out.add(run_name("evolve1d", k, runs.size(), ".csv"), csv.str());
        if (b["binary"].get<bool>()) {
            out.add(run_name("evolve1d", k, runs.size(), ".bin"), binary_blob(q.q));
            out.add_json(run_name("evolve1d", k, runs.size(), ".bin.json"),
                         {{"format", "float64 little-endian"},
                          {"shape", json::array({q.q.size()})},
                          {"y_min", q.y.front()},
                          {"y_max", q.y.back()},
                          {"t", t_end},
                          {"mass", q.mass()}});
        }
        info.push_back({{"run", k},
                        {"overrides", runs[k].overrides},
                        {"mass", q.mass()},
                        {"l1_to_stationary", l1_distance(q, qs)}});
    }
    out.add_json("evolve1d.json", info);
    out.summary["runs_info"] = info;
}

void cmd_evolve2d(const json& b, const std::vector<Run>& runs, Outputs& out) {
    const auto opts = reduction_options(b);
    const auto cells = b["cells"].get<std::size_t>();
    const double dt = b["dt"].get<double>();
    const double t_end = b["t_end"].get<double>();
    json info = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& p = runs[k].params;
        const auto r = reduce(p, opts);
        const auto p0 = gaussian_2d(cells, p.nu_max, r.frame.S0, b["initial_sd"].get<double>());
        const auto e = evolve_2d(p0, p, dt, t_end);
        const auto m = marginal_along_y(e.density, r.frame, r.potential.y(), b["subcells"].get<int>());
        const auto q1 = evolve_1d(gaussian_1d(r.potential.y(), 0.0, b["initial_sd"].get<double>()), r.potential,
                                  b["dt_1d"].get<double>(), t_end);
        Csv marg({"y", "q_2d", "q_1d"});
        for (std::size_t i = 0; i < q1.y.size(); ++i) marg.row(q1.y[i], m.density.q[i], q1.q[i]);
        out.add(run_name("marginal", k, runs.size(), ".csv"), marg.str());
        const auto& d = e.density;
        if (b["write_density"].get<bool>()) {
            Csv csv({"nu1", "nu2", "p"});
            for (std::size_t i = 0; i < d.n; ++i)
                for (std::size_t j = 0; j < d.n; ++j) csv.row(d.centre(i), d.centre(j), d.at(i, j));
            out.add(run_name("evolve2d", k, runs.size(), ".csv"), csv.str());
        }
        if (b["binary"].get<bool>()) {
            out.add(run_name("evolve2d", k, runs.size(), ".bin"), binary_blob(d.p));
            out.add_json(run_name("evolve2d", k, runs.size(), ".bin.json"),
                         {{"format", "float64 little-endian, row-major, nu1 index outermost"},
                          {"shape", json::array({d.n, d.n})},
                          {"nu_max", d.nu_max},
                          {"h", d.h()},
                          {"t", t_end},
                          {"mass", d.mass()}});
        }
        info.push_back({{"run", k},
                        {"overrides", runs[k].overrides},
                        {"mass", d.mass()},
                        {"steps", e.steps},
                        {"max_peclet", e.max_peclet},
                        {"out_of_range_mass", m.out_of_range_mass},
                        {"l1_marginal_vs_1d", l1_distance(m.density, q1)}});
    }
    out.add_json("evolve2d.json", info);
    out.summary["runs_info"] = info;
}

void cmd_behavior(const json& b, const std::vector<Run>& runs, Outputs& out) {
    const auto opts = reduction_options(b);
    Csv csv({"w_plus", "delta_lambda", "beta", "P_a", "RT_ms", "regime", "a_minus", "a_plus"});
    json extra = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& p = runs[k].params;
        const auto res = behavior(reduce(p, opts));
        csv.row(p.w_plus, p.delta_lambda, p.beta, res.performance, res.reaction_time, to_string(res.regime),
                res.barriers.a_minus, res.barriers.a_plus);
        extra.push_back({{"run", k},
                         {"w_plus", p.w_plus},
                         {"delta_lambda", p.delta_lambda},
                         {"P_split", res.performance_split},
                         {"P_mass", res.performance_mass},
                         {"interval", json::array({res.interval_lo, res.interval_hi})},
                         {"correct_side", res.correct_side}});
    }
    out.add("behavior.csv", csv.str());
    out.add_json("behavior.json", extra);
}

void cmd_simulate(const json& b, const std::vector<Run>& runs, Outputs& out) {
    const std::string mode = b["mode"].get<std::string>();
    if (mode != "reduced" && mode != "rates") throw config_error("simulate.mode must be 'reduced' or 'rates'");
    const auto seed = b["seed"].get<std::uint64_t>();
    const auto n_trials = b["n_trials"].get<std::size_t>();
    json all = json::array();
    for (std::size_t k = 0; k < runs.size(); ++k) {
        const auto& p = runs[k].params;
        std::vector<TrialOutcome> outcomes;
        json s;
        if (mode == "reduced") {
            const auto r = reduce(p, reduction_options(b));
            ReducedTrialConfig c;
            c.dt = b["dt"].get<double>();
            c.t_max = b["t_max"].get<double>();
            c.y0 = b["y0"].get<double>();
            c.brownian_bridge = b["brownian_bridge"].get<bool>();
            c.master_seed = seed;
            c.n_trials = n_trials;
            const auto beh = behavior(r);
            c.y_lower = b["y_lower"].is_null() ? beh.interval_lo : b["y_lower"].get<double>();
            c.y_upper = b["y_upper"].is_null() ? beh.interval_hi : b["y_upper"].get<double>();
            c.pool_1_side = beh.correct_side;
            c.validate();
            outcomes = run_trials([&](std::uint64_t i) { return simulate_1d(r, c, i); }, n_trials);
            s["thresholds"] = json::array({c.y_lower, c.y_upper});
            if (c.y0 >= c.y_lower && c.y0 <= c.y_upper) {
                const auto split = exit_split(r.potential, c.y0, c.y_lower, c.y_upper);
                s["quadrature_P_a"] = c.pool_1_side > 0 ? split.right : split.left;
                s["quadrature_RT"] = mean_exit_time(r.potential, c.y0, c.y_lower, c.y_upper);
            }
        } else {
            const auto eqs = find_equilibria(p, b["grid_resolution"].get<int>());
            TrialConfig c;
            c.dt = b["dt"].get<double>();
            c.t_max = b["t_max"].get<double>();
            c.master_seed = seed;
            c.n_trials = n_trials;
            c.decision_threshold = b["decision_threshold"].is_null() ? default_decision_threshold(eqs)
                                                                      : b["decision_threshold"].get<double>();
            if (b["initial"].is_null()) {
                const auto* s0 = eqs.find(Role::spontaneous);
                if (s0 == nullptr) throw numerical_error("NoSpontaneousState", "no spontaneous equilibrium to start from");
                c.initial = s0->location;
            } else {
                const auto& init = b["initial"];
                if (!init.is_array() || init.size() != 2 || !init[0].is_number() || !init[1].is_number())
                    throw config_error("simulate.initial must be [nu1, nu2]");
                c.initial = {init[0].get<double>(), init[1].get<double>()};
            }
            c.validate();
            outcomes = run_trials([&](std::uint64_t i) { return simulate_2d(p, c, i); }, n_trials);
            s["decision_threshold"] = c.decision_threshold;
        }
        const auto sum = summarize(outcomes);
        s.update({{"run", k},
                  {"overrides", runs[k].overrides},
                  {"mode", mode},
                  {"seed", seed},
                  {"n_trials", sum.n_trials},
                  {"n_decided", sum.n_decided},
                  {"n_pool_1", sum.n_pool_1},
                  {"n_invalid", sum.n_invalid},
                  {"clamp_events", sum.clamp_events},
                  {"P_a", sum.n_decided ? json(sum.p_a) : json(nullptr)},
                  {"P_a_se", opt_json(sum.p_a_se)},
                  {"RT_ms", sum.n_decided ? json(sum.mean_rt) : json(nullptr)},
                  {"RT_se", opt_json(sum.rt_se)},
                  {"undecided_fraction", sum.undecided_fraction}});
        all.push_back(s);
        if (b["per_trial_csv"].get<bool>()) {
            Csv csv({"trial", "decision", "decision_time"});
            for (std::size_t i = 0; i < outcomes.size(); ++i) {
                const auto& o = outcomes[i];
                csv.row(i, o.valid ? to_string(o.decision) : std::string_view("invalid"),
                        o.decision_time ? fmt(*o.decision_time) : std::string());
            }
            out.add(run_name("trials", k, runs.size(), ".csv"), csv.str());
        }
    }
    out.add_json("summary.json", all);
    out.summary["results"] = all;
}

int exit_code(const Error& e) {
    switch (e.category()) {
        case ErrorCategory::config: return kExitConfig;
        case ErrorCategory::numerical: return kExitNumerical;
        case ErrorCategory::validity: return kExitValidity;
    }
    return kExitNumerical;
}

int fail(const std::string& sub, int code, const std::string& name, const std::string& what) {
    std::cerr << "sfdm " << sub << ": " << name << ": " << what << "\n";
    std::cout << json{{"subcommand", sub}, {"status", "error"}, {"exit_code", code}, {"error", name}, {"message", what}}
                     .dump()
              << std::endl;
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Slow-fast reduction of a two-pool decision model"};
    app.require_subcommand(1);
    std::string config_path;
    std::vector<std::string> sets;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    bool quiet = false;
    app.add_option("--config", config_path, "JSON experiment config");
    app.add_option("--set", sets, "override key=value (repeatable)")->take_all();
    app.add_option("--out", out_dir, "output directory (default out/<subcommand>)");
    app.add_option("--seed", seed, "master seed for simulate");
    app.add_flag("--quiet", quiet, "suppress progress messages");
    const std::map<std::string, std::string> help = {
        {"equilibria", "fixed points and their stability"},
        {"bifurcation", "equilibria over a w_plus sweep with folds"},
        {"manifold", "slow manifold in chart and rate coordinates"},
        {"potential", "effective potential G(y) with barriers"},
        {"stationary", "stationary density of the reduced equation"},
        {"evolve1d", "Fokker-Planck evolution of the reduced density"},
        {"evolve2d", "2D Fokker-Planck evolution and its y-marginal"},
        {"behavior", "performance and reaction time"},
        {"simulate", "Monte Carlo trial ensembles"}};
    for (const auto& name : kSubcommands) app.add_subcommand(name, help.at(name))->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitConfig;
    }
    const std::string sub = app.get_subcommands().front()->get_name();

    json resolved;
    try {
        json doc = json::object();
        if (!config_path.empty()) {
            std::ifstream f(config_path);
            if (!f) throw config_error("cannot open config file '" + config_path + "'");
            try {
                doc = json::parse(f);
            } catch (const json::parse_error& e) {
                throw config_error("config file '" + config_path + "' is not valid JSON: " + e.what());
            }
            if (!doc.is_object()) throw config_error("config root must be a JSON object");
        }
        for (const auto& s : env_overrides()) apply_override(doc, sub, s);
        for (const auto& s : sets) apply_override(doc, sub, s);
        if (seed) {
            if (sub != "simulate") throw config_error("--seed applies only to simulate");
            doc["simulate"]["seed"] = *seed;
        }
        resolved = resolve(sub, doc);
    } catch (const Error& e) {
        return fail(sub, kExitConfig, e.name(), e.what());
    } catch (const json::exception& e) {
        return fail(sub, kExitConfig, "ConfigError", e.what());
    }

    const json& block = resolved[sub];
    Outputs out;
    try {
        const auto runs = expand_runs(resolved["model"], block["sweep"]);
        if (!quiet) std::cerr << "sfdm " << sub << ": " << runs.size() << " run(s)\n";
        if (sub == "equilibria") cmd_equilibria(block, runs, out);
        else if (sub == "bifurcation") cmd_bifurcation(block, runs, out);
        else if (sub == "manifold" || sub == "potential") cmd_manifold(sub, block, runs, out);
        else if (sub == "stationary") cmd_stationary(block, runs, out);
        else if (sub == "evolve1d") cmd_evolve1d(block, runs, out);
        else if (sub == "evolve2d") cmd_evolve2d(block, runs, out);
        else if (sub == "behavior") cmd_behavior(block, runs, out);
        else if (sub == "simulate") cmd_simulate(block, runs, out);
        out.summary["runs"] = runs.size();
    } catch (const Error& e) {
        return fail(sub, exit_code(e), e.name(), e.what());
    } catch (const json::exception& e) {
        return fail(sub, kExitConfig, "ConfigError", e.what());
    }

    const fs::path dir = out_dir.empty() ? fs::path("out") / sub : fs::path(out_dir);
    json files = json::array();
    try {
        fs::create_directories(dir);
        write_atomic(dir / "resolved_config.json", resolved.dump(2) + "\n");
        for (const auto& [name, content] : out.files) {
            write_atomic(dir / name, content);
            files.push_back(name);
        }
    } catch (const std::exception& e) {
        return fail(sub, kExitNumerical, "OutputError", e.what());
    }
    json summary = {{"subcommand", sub}, {"status", "ok"}, {"out", dir.string()}, {"files", files}};
    summary.update(out.summary);
    std::cout << summary.dump() << std::endl;
    return kExitOk;
}
