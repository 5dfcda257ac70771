#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "slipcert/config.hpp"
#include "slipcert/errors.hpp"
#include "slipcert/slip_bounds.hpp"

using namespace slipcert;

namespace {

const char* kMinimalConfig = R"({
  "system": {
    "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9},
    "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
  }
})";

struct RunResult {
    int exit_code = -1;
    std::string output;
};

// Runs the command-line tool (path baked in at build time, overridable via
// the environment) and captures stdout+stderr and the exit status.
RunResult run_cli(const std::string& args) {
    const char* cli = std::getenv("SLIPCERT_CLI_PATH");
#ifdef SLIPCERT_CLI_PATH
    if (!cli) cli = SLIPCERT_CLI_PATH;
#endif
    REQUIRE(cli != nullptr);
    std::string cmd = std::string(cli) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    RunResult res;
    std::array<char, 4096> buf;
    while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe)) {
        res.output += buf.data();
    }
    int status = pclose(pipe);
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return res;
}

std::string write_temp(const std::string& name, const std::string& text) {
    std::string path = std::string("/tmp/slipcert_test_") + name;
    std::ofstream out(path);
    out << text;
    return path;
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("minimal config parses with documented defaults") {
    RunConfig cfg = parse_config(kMinimalConfig);
    CHECK(cfg.nonlinearity.preset == "sine_minus_beta");
    CHECK(cfg.nonlinearity.beta == 0.9);
    CHECK(cfg.linear_part.preset == "pll_pi_filter");
    CHECK(cfg.linear_part.T == 0.1);
    CHECK(cfg.task.name == "certify");
    CHECK(cfg.task.theorem == "T3");
    CHECK(cfg.task.k_max == 100);
    CHECK(cfg.task.iterations == 80);
    CHECK(cfg.task.restarts == 3);
    CHECK(cfg.task.seed == 1);
    CHECK_FALSE(cfg.task.Q.has_value());
    CHECK(cfg.task.root_start);
    CHECK(cfg.task.mu == 0.0);
    CHECK(cfg.task.sweep.inits == 5);
    CHECK(cfg.output_dir.empty());
}

TEST_CASE("parse/serialize round trip is a fixed point") {
    RunConfig cfg = parse_config(kMinimalConfig);
    cfg.task.theorem = "T2";
    cfg.task.Q = 1.5;
    cfg.task.multipliers = Multipliers{1.0, 0.25, 0.125, 0.0625, 0.5};
    cfg.task.sweep.beta = {0.88, 0.9};
    cfg.output_dir = "/tmp/out";
    std::string once = serialize_config(cfg);
    std::string twice = serialize_config(parse_config(once));
    CHECK(once == twice);

    RunConfig back = parse_config(once);
    CHECK(back.task.theorem == "T2");
    REQUIRE(back.task.Q.has_value());
    CHECK(*back.task.Q == 1.5);
    REQUIRE(back.task.multipliers.has_value());
    CHECK(back.task.multipliers->eps == 0.25);
    CHECK(back.task.sweep.beta == std::vector<double>{0.88, 0.9});
    CHECK(back.output_dir == "/tmp/out");
}

TEST_CASE("unknown keys are rejected with their location") {
    std::string text = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9, "betaa": 1.0},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      }
    })";
    try {
        parse_config(text);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        std::string msg = e.what();
        CHECK(msg.find("betaa") != std::string::npos);
        CHECK(msg.find("/system/nonlinearity") != std::string::npos);
    }

    std::string task_text = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      },
      "task": {"bogus": 1}
    })";
    try {
        parse_config(task_text);
        FAIL("expected invalid_argument");
    } catch (const std::invalid_argument& e) {
        CHECK(std::string(e.what()).find("/task/bogus") != std::string::npos);
    }
}

TEST_CASE("missing required keys and malformed JSON are rejected") {
    CHECK_THROWS_AS(parse_config("{\"task\": {}}"), std::invalid_argument);
    std::string no_beta = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta"},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      }
    })";
    CHECK_THROWS_AS(parse_config(no_beta), std::exception);
    CHECK_THROWS_AS(parse_config("not json at all {"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config(""), std::invalid_argument);
    CHECK_THROWS_AS(load_config("/nonexistent/path.json"), std::invalid_argument);
}

TEST_CASE("build_model covers both linear-part presets") {
    RunConfig cfg = parse_config(kMinimalConfig);
    SystemModel preset = build_model(cfg);
    REQUIRE(preset.example.has_value());
    CHECK(preset.example->T == 0.1);
    CHECK(preset.decay_r == doctest::Approx(10.0));

    std::string explicit_text = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9},
        "linear_part": {
          "preset": "explicit",
          "terms": [{"num": [0.06], "den": [1.0, 0.1], "delay": 0.1}],
          "rho": -0.04, "h": 0.1, "M": 1.0, "r": 10.0, "b": 0.09
        }
      }
    })";
    SystemModel ex = build_model(parse_config(explicit_text));
    CHECK_FALSE(ex.example.has_value());
    CHECK(ex.transfer.eval_freq(0.0).real() == doctest::Approx(0.1));

    std::string mismatch = R"({
      "system": {
        "nonlinearity": {"preset": "tabulated", "period": 6.283185307179586,
                         "sigma": [0.0], "phi": [0.0], "dphi": [1.0]},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      }
    })";
    CHECK_THROWS_AS(build_model(parse_config(mismatch)), std::invalid_argument);
}

TEST_CASE("cli: reproduce-paper exits 0 and prints the expected bounds") {
    RunResult res = run_cli("reproduce-paper");
    CHECK(res.exit_code == 0);
    CHECK(res.output.find("0.9") != std::string::npos);
    CHECK(res.output.find("0.204384") != std::string::npos);
}

TEST_CASE("cli: malformed or missing config exits with usage code") {
    std::string bad = write_temp("bad.json", "{ nope");
    CHECK(run_cli("certify --config " + bad).exit_code == 1);
    CHECK(run_cli("certify --config /nonexistent.json").exit_code == 1);
    CHECK(run_cli("frobnicate").exit_code == 1);
}

TEST_CASE("cli: certify is deterministic under a fixed seed and verify agrees") {
    std::string cfg = write_temp("min.json", kMinimalConfig);
    std::string cert_a = "/tmp/slipcert_test_cert_a.txt";
    std::string cert_b = "/tmp/slipcert_test_cert_b.txt";

    RunResult a = run_cli("certify --config " + cfg + " --seed 7 --out " + cert_a);
    CHECK(a.exit_code == 0);
    RunResult b = run_cli("certify --config " + cfg + " --seed 7 --out " + cert_b);
    CHECK(b.exit_code == 0);
    CHECK(slurp(cert_a) == slurp(cert_b));

    SlipCertificate cert = parse_certificate(slurp(cert_a));
    CHECK(cert.seed == 7);
    CHECK(cert.k_bound >= 1);

    RunResult v = run_cli("verify --config " + cfg + " --certificate " + cert_a);
    CHECK(v.exit_code == 0);

    // Tampering with the bound must fail verification.
    std::string tampered = slurp(cert_a);
    auto pos = tampered.find("k_bound");
    REQUIRE(pos != std::string::npos);
    SlipCertificate weak = cert;
    weak.k_bound = 0;
    std::string cert_c = write_temp("cert_c.txt", serialize_certificate(weak));
    CHECK(run_cli("verify --config " + cfg + " --certificate " + cert_c).exit_code != 0);
}

TEST_CASE("cli: certify reports no-certificate on an infeasible system") {
    std::string text = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9999},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      },
      "task": {"k_max": 3, "iterations": 10, "restarts": 1}
    })";
    std::string cfg = write_temp("infeasible.json", text);
    RunResult res = run_cli("certify --config " + cfg);
    CHECK(res.exit_code == 2);
}

TEST_CASE("cli: simulate writes a CSV with the expected columns") {
    std::string text = R"({
      "system": {
        "nonlinearity": {"preset": "sine_minus_beta", "beta": 0.9},
        "linear_part": {"preset": "pll_pi_filter", "T": 0.1, "s": 0.4, "h0": 1.0}
      },
      "task": {"name": "simulate", "horizon": 1.0, "step": 0.005}
    })";
    std::string cfg = write_temp("sim.json", text);
    std::string out = "/tmp/slipcert_test_sim.csv";
    RunResult res = run_cli("simulate --config " + cfg + " --out " + out);
    CHECK(res.exit_code == 0);
    std::string csv = slurp(out);
    CHECK(csv.rfind("t,sigma,sigma_dot,slips_so_far,I_T", 0) == 0);
    size_t lines = static_cast<size_t>(std::count(csv.begin(), csv.end(), '\n'));
    CHECK(lines == 202);  // header + 201 samples
}
