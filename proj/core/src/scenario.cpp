#include "tvfluid/scenario.hpp"

#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tvfluid/errors.hpp"

namespace tvfluid {

namespace {

using Json = nlohmann::ordered_json;

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("scenario field '" + path + "': " + what);
}

const Json& member(const Json& j, const std::string& path, const char* key) {
    if (!j.is_object()) fail(path, "expected an object");
    auto it = j.find(key);
    if (it == j.end()) fail(path + "." + key, "missing");
    return *it;
}

double num(const Json& j, const std::string& path) {
    if (!j.is_number()) fail(path, "expected a number");
    return j.get<double>();
}

double num_member(const Json& j, const std::string& path, const char* key) {
    return num(member(j, path, key), path + "." + key);
}

int int_member(const Json& j, const std::string& path, const char* key) {
    const Json& v = member(j, path, key);
    if (!v.is_number_integer()) fail(path + "." + key, "expected an integer");
    return v.get<int>();
}

std::vector<std::pair<double, double>> pair_list(const Json& j, const std::string& path) {
    if (!j.is_array()) fail(path, "expected an array of [x, y] pairs");
    std::vector<std::pair<double, double>> out;
    for (std::size_t i = 0; i < j.size(); ++i) {
        const Json& e = j[i];
        const std::string p = path + "[" + std::to_string(i) + "]";
        if (!e.is_array() || e.size() != 2) fail(p, "expected a [x, y] pair");
        out.emplace_back(num(e[0], p + "[0]"), num(e[1], p + "[1]"));
    }
    return out;
}

Scenario::DistSpec parse_dist(const Json& j, const std::string& path) {
    Scenario::DistSpec d;
    const Json& fam = member(j, path, "family");
    if (!fam.is_string()) fail(path + ".family", "expected a string");
    d.family = fam.get<std::string>();
    if (d.family == "exponential") {
        d.rate = num_member(j, path, "rate");
    } else if (d.family == "erlang") {
        d.shape = int_member(j, path, "shape");
        d.rate = num_member(j, path, "rate");
    } else if (d.family == "hyperexponential") {
        for (const Json& w : member(j, path, "weights")) d.weights.push_back(num(w, path + ".weights"));
        for (const Json& r : member(j, path, "rates")) d.rates.push_back(num(r, path + ".rates"));
    } else if (d.family == "uniform") {
        d.lower = num_member(j, path, "lower");
        d.upper = num_member(j, path, "upper");
    } else if (d.family == "weibull-continuous") {
        d.wb_shape = num_member(j, path, "shape");
        d.wb_scale = num_member(j, path, "scale");
    } else if (d.family == "empirical-smooth") {
        d.cdf_knots = pair_list(member(j, path, "cdf_knots"), path + ".cdf_knots");
        if (j.contains("lipschitz")) d.lipschitz = num_member(j, path, "lipschitz");
    } else {
        fail(path + ".family", "unknown family '" + d.family + "'");
    }
    return d;
}

Json emit_dist(const Scenario::DistSpec& d) {
    Json j;
    j["family"] = d.family;
    if (d.family == "exponential") {
        j["rate"] = d.rate;
    } else if (d.family == "erlang") {
        j["shape"] = d.shape;
        j["rate"] = d.rate;
    } else if (d.family == "hyperexponential") {
        j["weights"] = d.weights;
        j["rates"] = d.rates;
    } else if (d.family == "uniform") {
        j["lower"] = d.lower;
        j["upper"] = d.upper;
    } else if (d.family == "weibull-continuous") {
        j["shape"] = d.wb_shape;
        j["scale"] = d.wb_scale;
    } else if (d.family == "empirical-smooth") {
        Json knots = Json::array();
        for (auto& [x, p] : d.cdf_knots) knots.push_back({x, p});
        j["cdf_knots"] = std::move(knots);
        if (d.lipschitz) j["lipschitz"] = *d.lipschitz;
    }
    return j;
}

}  // namespace

Scenario parse_scenario(const std::string& json_text) {
    Json j;
    try {
        j = Json::parse(json_text);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("scenario: invalid JSON: ") + e.what());
    }
    Scenario s;
    const Json& name = member(j, "", "name");
    if (!name.is_string()) fail("name", "expected a string");
    s.name = name.get<std::string>();

    s.rate_breakpoints = pair_list(member(member(j, "", "rate"), "rate", "breakpoints"),
                                   "rate.breakpoints");
    s.patience = parse_dist(member(j, "", "patience"), "patience");
    s.service = parse_dist(member(j, "", "service"), "service");

    const Json& initial = member(j, "", "initial");
    const bool has_res = initial.contains("residual");
    const bool has_ela = initial.contains("elapsed");
    if (has_res == has_ela)
        fail("initial", "exactly one of 'residual' or 'elapsed' must be present");
    if (has_res) {
        const Json& r = initial["residual"];
        Scenario::ResidualIcSpec spec;
        spec.omega0 = num_member(r, "initial.residual", "omega0");
        const Json& prof = member(r, "initial.residual", "in_service");
        const Json& kind = member(prof, "initial.residual.in_service", "kind");
        if (!kind.is_string()) fail("initial.residual.in_service.kind", "expected a string");
        spec.profile_kind = kind.get<std::string>();
        if (spec.profile_kind == "zero") {
        } else if (spec.profile_kind == "exp_decay") {
            spec.mass = num_member(prof, "initial.residual.in_service", "mass");
            spec.decay = num_member(prof, "initial.residual.in_service", "rate");
        } else if (spec.profile_kind == "equilibrium_tail") {
            spec.mass = num_member(prof, "initial.residual.in_service", "mass");
        } else if (spec.profile_kind == "table") {
            spec.knots = pair_list(member(prof, "initial.residual.in_service", "knots"),
                                   "initial.residual.in_service.knots");
        } else {
            fail("initial.residual.in_service.kind", "unknown kind '" + spec.profile_kind + "'");
        }
        s.residual_initial = std::move(spec);
    } else {
        const Json& e = initial["elapsed"];
        Scenario::ElapsedIcSpec spec;
        spec.queue_age_knots =
            pair_list(member(e, "initial.elapsed", "queue_age"), "initial.elapsed.queue_age");
        spec.service_age_knots =
            pair_list(member(e, "initial.elapsed", "service_age"), "initial.elapsed.service_age");
        s.elapsed_initial = std::move(spec);
    }

    const Json& grid = member(j, "", "grid");
    s.grid_h = num_member(grid, "grid", "h");
    s.grid_horizon = num_member(grid, "grid", "T");
    if (!(s.grid_h > 0.0)) fail("grid.h", "must be positive");
    if (!(s.grid_horizon > 0.0)) fail("grid.T", "must be positive");

    if (j.contains("solver")) {
        const Json& sv = j["solver"];
        if (sv.contains("picard_tol")) s.solver.picard_tol = num_member(sv, "solver", "picard_tol");
        if (sv.contains("max_iters")) s.solver.max_iters = int_member(sv, "solver", "max_iters");
        if (sv.contains("kappa_target"))
            s.solver.kappa_target = num_member(sv, "solver", "kappa_target");
        if (sv.contains("window_cap")) s.solver.window_cap = num_member(sv, "solver", "window_cap");
        s.solver.validate();
    }

    if (j.contains("sim")) {
        const Json& sim = j["sim"];
        Scenario::SimSpec spec;
        const Json& servers = member(sim, "sim", "servers");
        if (!servers.is_array() || servers.empty()) fail("sim.servers", "expected a nonempty array");
        for (const Json& v : servers) {
            if (!v.is_number_integer() || v.get<int>() < 1)
                fail("sim.servers", "server counts must be positive integers");
            spec.servers.push_back(v.get<int>());
        }
        spec.replications = int_member(sim, "sim", "replications");
        if (spec.replications < 1) fail("sim.replications", "must be at least 1");
        const Json& seed = member(sim, "sim", "seed");
        if (!seed.is_number_unsigned() && !seed.is_number_integer())
            fail("sim.seed", "expected an integer");
        spec.seed = seed.get<std::uint64_t>();
        s.sim = std::move(spec);
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("scenario: cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_scenario(buf.str());
}

std::string emit_scenario(const Scenario& s) {
    Json j;
    j["name"] = s.name;
    {
        Json bp = Json::array();
        for (auto& [t, v] : s.rate_breakpoints) bp.push_back({t, v});
        j["rate"]["breakpoints"] = std::move(bp);
    }
    j["patience"] = emit_dist(s.patience);
    j["service"] = emit_dist(s.service);
    if (s.residual_initial) {
        const auto& r = *s.residual_initial;
        Json prof;
        prof["kind"] = r.profile_kind;
        if (r.profile_kind == "exp_decay") {
            prof["mass"] = r.mass;
            prof["rate"] = r.decay;
        } else if (r.profile_kind == "equilibrium_tail") {
            prof["mass"] = r.mass;
        } else if (r.profile_kind == "table") {
            Json knots = Json::array();
            for (auto& [t, v] : r.knots) knots.push_back({t, v});
            prof["knots"] = std::move(knots);
        }
        j["initial"]["residual"]["omega0"] = r.omega0;
        j["initial"]["residual"]["in_service"] = std::move(prof);
    } else if (s.elapsed_initial) {
        Json q = Json::array(), z = Json::array();
        for (auto& [x, y] : s.elapsed_initial->queue_age_knots) q.push_back({x, y});
        for (auto& [x, y] : s.elapsed_initial->service_age_knots) z.push_back({x, y});
        j["initial"]["elapsed"]["queue_age"] = std::move(q);
        j["initial"]["elapsed"]["service_age"] = std::move(z);
    }
    j["grid"]["h"] = s.grid_h;
    j["grid"]["T"] = s.grid_horizon;
    j["solver"]["picard_tol"] = s.solver.picard_tol;
    j["solver"]["max_iters"] = s.solver.max_iters;
    j["solver"]["kappa_target"] = s.solver.kappa_target;
    if (std::isfinite(s.solver.window_cap)) j["solver"]["window_cap"] = s.solver.window_cap;
    if (s.sim) {
        j["sim"]["servers"] = s.sim->servers;
        j["sim"]["replications"] = s.sim->replications;
        j["sim"]["seed"] = s.sim->seed;
    }
    return j.dump(2) + "\n";
}

std::shared_ptr<const Distribution> build_distribution(const Scenario::DistSpec& spec,
                                                       const std::string& field_path) {
    try {
        if (spec.family == "exponential")
            return std::make_shared<Distribution>(Distribution::exponential(spec.rate));
        if (spec.family == "erlang")
            return std::make_shared<Distribution>(Distribution::erlang(spec.shape, spec.rate));
        if (spec.family == "hyperexponential")
            return std::make_shared<Distribution>(
                Distribution::hyperexponential(spec.weights, spec.rates));
        if (spec.family == "uniform")
            return std::make_shared<Distribution>(Distribution::uniform(spec.lower, spec.upper));
        if (spec.family == "weibull-continuous")
            return std::make_shared<Distribution>(
                Distribution::weibull(spec.wb_shape, spec.wb_scale));
        if (spec.family == "empirical-smooth")
            return std::make_shared<Distribution>(
                Distribution::empirical_smooth(spec.cdf_knots, spec.lipschitz));
    } catch (const ConfigError& e) {
        throw ConfigError("scenario field '" + field_path + "': " + e.what());
    }
    throw ConfigError("scenario field '" + field_path + ".family': unknown family");
}

ScenarioModel build_model(const Scenario& scenario, std::optional<double> grid_h_override) {
    const double h = grid_h_override.value_or(scenario.grid_h);
    Grid grid(h, scenario.grid_horizon);

    std::vector<double> times, values;
    for (auto& [t, v] : scenario.rate_breakpoints) {
        times.push_back(t);
        values.push_back(v);
    }
    RateFunction base_rate(std::move(times), std::move(values));

    auto patience = build_distribution(scenario.patience, "patience");
    auto service = build_distribution(scenario.service, "service");

    ScenarioModel model{grid, ModelInputs{}, scenario.solver, std::nullopt, scenario.sim};
    model.inputs.patience = patience;
    model.inputs.service = service;

    if (scenario.residual_initial) {
        const auto& r = *scenario.residual_initial;
        InServiceProfile profile = InServiceProfile::zero();
        if (r.profile_kind == "exp_decay")
            profile = InServiceProfile::exp_decay(r.mass, r.decay);
        else if (r.profile_kind == "equilibrium_tail")
            profile = InServiceProfile::equilibrium_tail(r.mass, service);
        else if (r.profile_kind == "table")
            profile = InServiceProfile::table(r.knots);
        model.inputs.rate = std::make_shared<RateFunction>(std::move(base_rate));
        model.inputs.initial = InitialCondition{r.omega0, std::move(profile)};
    } else {
        ElapsedInitialCondition eic;
        if (!scenario.elapsed_initial->queue_age_knots.empty())
            eic.queue_age = DensityTable(scenario.elapsed_initial->queue_age_knots);
        if (!scenario.elapsed_initial->service_age_knots.empty())
            eic.service_age = DensityTable(scenario.elapsed_initial->service_age_knots);
        ResidualCorrespondence corr =
            to_residual(eic, base_rate, *patience, *service, grid);
        model.inputs.rate = corr.rate;
        model.inputs.initial = std::move(corr.initial);
        model.elapsed = std::move(eic);
    }
    return model;
}

}  // namespace tvfluid
