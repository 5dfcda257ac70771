#include "slipcert/config.hpp"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace slipcert {

namespace {

using nlohmann::json;

void require_keys(const json& obj, const std::string& where,
                  const std::set<std::string>& allowed) {
    if (!obj.is_object()) {
        throw std::invalid_argument("config: expected object at " + where);
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw std::invalid_argument("config: unknown key \"" + it.key() + "\" at " +
                                        where + "/" + it.key());
        }
    }
}

NonlinearityConfig parse_nonlinearity(const json& j, const std::string& where) {
    require_keys(j, where, {"preset", "beta", "period", "sigma", "phi", "dphi"});
    NonlinearityConfig c;
    c.preset = j.value("preset", c.preset);
    if (c.preset == "sine_minus_beta") {
        c.beta = j.at("beta").get<double>();
    } else if (c.preset == "tabulated") {
        c.period = j.at("period").get<double>();
        c.sigma = j.at("sigma").get<std::vector<double>>();
        c.phi = j.at("phi").get<std::vector<double>>();
        c.dphi = j.at("dphi").get<std::vector<double>>();
    } else {
        throw std::invalid_argument("config: unknown nonlinearity preset at " + where);
    }
    return c;
}

LinearPartConfig parse_linear_part(const json& j, const std::string& where) {
    require_keys(j, where, {"preset", "T", "s", "h0", "terms", "rho", "h", "M", "r", "b"});
    LinearPartConfig c;
    c.preset = j.value("preset", c.preset);
    if (c.preset == "pll_pi_filter") {
        c.T = j.at("T").get<double>();
        c.s = j.at("s").get<double>();
        c.h0 = j.at("h0").get<double>();
    } else if (c.preset == "explicit") {
        for (const auto& term : j.at("terms")) {
            require_keys(term, where + "/terms", {"num", "den", "delay"});
            RationalDelayTerm t;
            t.num = term.at("num").get<std::vector<double>>();
            t.den = term.at("den").get<std::vector<double>>();
            t.delay = term.value("delay", 0.0);
            c.terms.push_back(std::move(t));
        }
        c.rho = j.value("rho", 0.0);
        c.h = j.value("h", 0.0);
        c.M = j.at("M").get<double>();
        c.r = j.at("r").get<double>();
        c.b = j.value("b", 0.0);
    } else {
        throw std::invalid_argument("config: unknown linear_part preset at " + where);
    }
    return c;
}

Multipliers parse_multipliers(const json& j, const std::string& where) {
    require_keys(j, where, {"theta", "eps", "delta", "tau", "a"});
    Multipliers m;
    m.theta = j.at("theta").get<double>();
    m.eps = j.at("eps").get<double>();
    m.delta = j.at("delta").get<double>();
    m.tau = j.at("tau").get<double>();
    m.a = j.value("a", 1.0);
    return m;
}

TaskConfig parse_task(const json& j) {
    require_keys(j, "/task",
                 {"name", "theorem", "k_max", "iterations", "restarts", "seed", "Q",
                  "root_start", "mu", "horizon", "step", "sigma0", "sigma_dot0",
                  "multipliers", "sweep"});
    TaskConfig c;
    c.name = j.value("name", c.name);
    c.theorem = j.value("theorem", c.theorem);
    c.k_max = j.value("k_max", c.k_max);
    c.iterations = j.value("iterations", c.iterations);
    c.restarts = j.value("restarts", c.restarts);
    c.seed = j.value("seed", c.seed);
    if (j.contains("Q")) c.Q = j.at("Q").get<double>();
    c.root_start = j.value("root_start", c.root_start);
    c.mu = j.value("mu", c.mu);
    c.horizon = j.value("horizon", c.horizon);
    c.step = j.value("step", c.step);
    if (j.contains("sigma0")) c.sigma0 = j.at("sigma0").get<double>();
    c.sigma_dot0 = j.value("sigma_dot0", c.sigma_dot0);
    if (j.contains("multipliers")) {
        c.multipliers = parse_multipliers(j.at("multipliers"), "/task/multipliers");
    }
    if (j.contains("sweep")) {
        const auto& sw = j.at("sweep");
        require_keys(sw, "/task/sweep", {"beta", "T", "h0", "s", "inits"});
        if (sw.contains("beta")) c.sweep.beta = sw.at("beta").get<std::vector<double>>();
        if (sw.contains("T")) c.sweep.T = sw.at("T").get<std::vector<double>>();
        if (sw.contains("h0")) c.sweep.h0 = sw.at("h0").get<std::vector<double>>();
        if (sw.contains("s")) c.sweep.s = sw.at("s").get<std::vector<double>>();
        c.sweep.inits = sw.value("inits", c.sweep.inits);
    }
    return c;
}

}  // namespace

RunConfig parse_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw std::invalid_argument(std::string("config: JSON parse error: ") + e.what());
    }
    require_keys(j, "", {"system", "task", "output"});
    if (!j.contains("system")) throw std::invalid_argument("config: missing /system");
    const auto& sys = j.at("system");
    require_keys(sys, "/system", {"nonlinearity", "linear_part"});

    RunConfig c;
    c.nonlinearity = parse_nonlinearity(sys.at("nonlinearity"), "/system/nonlinearity");
    c.linear_part = parse_linear_part(sys.at("linear_part"), "/system/linear_part");
    if (j.contains("task")) c.task = parse_task(j.at("task"));
    if (j.contains("output")) {
        require_keys(j.at("output"), "/output", {"dir"});
        c.output_dir = j.at("output").value("dir", "");
    }
    return c;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("config: cannot open " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& c) {
    json j;
    json nl;
    nl["preset"] = c.nonlinearity.preset;
    if (c.nonlinearity.preset == "sine_minus_beta") {
        nl["beta"] = c.nonlinearity.beta;
    } else {
        nl["period"] = c.nonlinearity.period;
        nl["sigma"] = c.nonlinearity.sigma;
        nl["phi"] = c.nonlinearity.phi;
        nl["dphi"] = c.nonlinearity.dphi;
    }
    json lp;
    lp["preset"] = c.linear_part.preset;
    if (c.linear_part.preset == "pll_pi_filter") {
        lp["T"] = c.linear_part.T;
        lp["s"] = c.linear_part.s;
        lp["h0"] = c.linear_part.h0;
    } else {
        json terms = json::array();
        for (const auto& t : c.linear_part.terms) {
            terms.push_back({{"num", t.num}, {"den", t.den}, {"delay", t.delay}});
        }
        lp["terms"] = terms;
        lp["rho"] = c.linear_part.rho;
        lp["h"] = c.linear_part.h;
        lp["M"] = c.linear_part.M;
        lp["r"] = c.linear_part.r;
        lp["b"] = c.linear_part.b;
    }
    j["system"] = {{"nonlinearity", nl}, {"linear_part", lp}};

    json task;
    task["name"] = c.task.name;
    task["theorem"] = c.task.theorem;
    task["k_max"] = c.task.k_max;
    task["iterations"] = c.task.iterations;
    task["restarts"] = c.task.restarts;
    task["seed"] = c.task.seed;
    if (c.task.Q) task["Q"] = *c.task.Q;
    task["root_start"] = c.task.root_start;
    task["mu"] = c.task.mu;
    task["horizon"] = c.task.horizon;
    task["step"] = c.task.step;
    if (c.task.sigma0) task["sigma0"] = *c.task.sigma0;
    task["sigma_dot0"] = c.task.sigma_dot0;
    if (c.task.multipliers) {
        task["multipliers"] = {{"theta", c.task.multipliers->theta},
                               {"eps", c.task.multipliers->eps},
                               {"delta", c.task.multipliers->delta},
                               {"tau", c.task.multipliers->tau},
                               {"a", c.task.multipliers->a}};
    }
    json sweep;
    if (!c.task.sweep.beta.empty()) sweep["beta"] = c.task.sweep.beta;
    if (!c.task.sweep.T.empty()) sweep["T"] = c.task.sweep.T;
    if (!c.task.sweep.h0.empty()) sweep["h0"] = c.task.sweep.h0;
    if (!c.task.sweep.s.empty()) sweep["s"] = c.task.sweep.s;
    sweep["inits"] = c.task.sweep.inits;
    task["sweep"] = sweep;
    j["task"] = task;
    j["output"] = {{"dir", c.output_dir}};
    return j.dump(2);
}

PeriodicNonlinearity build_nonlinearity(const NonlinearityConfig& config) {
    if (config.preset == "sine_minus_beta") {
        return PeriodicNonlinearity::sine_minus_beta(config.beta);
    }
    return PeriodicNonlinearity::tabulated(config.sigma, config.phi, config.dphi,
                                           config.period);
}

SystemModel build_model(const RunConfig& config) {
    if (config.linear_part.preset == "pll_pi_filter") {
        if (config.nonlinearity.preset != "sine_minus_beta") {
            throw std::invalid_argument(
                "config: the pll_pi_filter preset requires the sine_minus_beta nonlinearity");
        }
        return make_pll_example(config.linear_part.T, config.linear_part.s,
                                config.nonlinearity.beta, config.linear_part.h0);
    }
    DelayRationalTransfer transfer(config.linear_part.terms, config.linear_part.rho,
                                   config.linear_part.h);
    SystemModel model{std::move(transfer),
                      build_nonlinearity(config.nonlinearity),
                      config.linear_part.M,
                      config.linear_part.r,
                      config.linear_part.b,
                      std::nullopt,
                      {}};
    return model;
}

}  // namespace slipcert
