#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <fstream>

#include "ampx/config.hpp"

using namespace ampx;
using nlohmann::json;
using Catch::Approx;

TEST_CASE("defaults form a valid configuration") {
    const RunConfig c = config_from_json(json::object());
    CHECK(c.human.K_h == Approx(50.18));
    CHECK(c.actuator.k_s == Approx(796958.0));
    CHECK(c.spring_loop.k_ss == Approx(2.0 * 796958.0));
    CHECK(c.spring_loop.b_ss == Approx(0.039 * 796958.0));
    CHECK(c.amplifier.alpha == Approx(10.0));
    CHECK(c.delay_s == Approx(0.006));
    CHECK(c.ensemble.K_h.count == 20);
    CHECK(c.ensemble.r.count == 5);
    CHECK_NOTHROW(c.validate());
}

TEST_CASE("sections load from JSON") {
    const json j = json::parse(R"({
        "human":  {"K_h": 27.12, "B_h": 2.34, "M_h": 0.09},
        "exo":    {"M_e_bar": 0.1, "M_e_tilde": 0.09, "r": 0.01},
        "actuator": {"k_s": 800000.0, "m_a": 260.0, "b_a": 4600.0},
        "spring_loop": {"k_ss": 1600000.0, "b_ss": 31000.0, "q_cutoff_hz": 38.0,
                        "q_order": 4},
        "amplifier": {"alpha": 8.0, "k_p": 0.125, "z": 20.0, "p": 0.02},
        "delay_s": 0.004,
        "ensemble": {"K_h": {"lo": 10.0, "hi": 60.0, "count": 6}, "zeta": 0.25},
        "experiment": {"kind": "step_release", "duration_s": 6.0, "dt": 0.0002,
                       "step_tau_Nm": 12.0},
        "sysid": {"window_s": 30.0, "noise_rms_frac": 0.05, "seed": 99},
        "bode": {"which": "open_loop", "points": 128, "sweep": true},
        "margins": {"sweep": false}
    })");
    const RunConfig c = config_from_json(j);
    CHECK(c.human.K_h == Approx(27.12));
    CHECK(c.exo.r == Approx(0.01));
    CHECK(c.actuator.m_a == Approx(260.0));
    CHECK(c.spring_loop.q_order == 4);
    CHECK(c.amplifier.k_p == Approx(0.125));
    CHECK(c.delay_s == Approx(0.004));
    CHECK(c.ensemble.K_h.lo == Approx(10.0));
    CHECK(c.ensemble.K_h.count == 6);
    CHECK(c.ensemble.zeta == Approx(0.25));
    CHECK(c.ensemble.M_e.count == 20);  // untouched sections keep defaults
    CHECK(c.experiment.kind == ExperimentKind::step_release);
    CHECK(c.experiment.step_tau_Nm == Approx(12.0));
    CHECK(c.sysid.seed == 99);
    CHECK(c.bode.which == "open_loop");
    CHECK_FALSE(c.margins.sweep);
}

TEST_CASE("unknown keys are rejected at every level") {
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"humans": {}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"human": {"Kh": 1.0}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"ensemble": {"K_h": {"low": 1}}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": {"speed": 2}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"bode": {"color": "red"}})")),
                    ConfigError);
}

TEST_CASE("type errors carry the offending path") {
    try {
        config_from_json(json::parse(R"({"human": {"K_h": "strong"}})"));
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(std::string(e.what()).find("human.K_h") != std::string::npos);
    }
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"human": 3})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"([1, 2])")), ConfigError);
}

TEST_CASE("enumerated strings parse or reject") {
    auto kind_of = [](const std::string& k) {
        return config_from_json(json::parse(R"({"experiment": {"kind": ")" + k + R"("}})"))
            .experiment.kind;
    };
    CHECK(kind_of("tracking") == ExperimentKind::tracking);
    CHECK(kind_of("chirp") == ExperimentKind::chirp);
    CHECK_THROWS_AS(kind_of("jump"), ConfigError);

    auto wave_of = [](const std::string& w) {
        return config_from_json(
                   json::parse(R"({"experiment": {"waveform": ")" + w + R"("}})"))
            .experiment.waveform;
    };
    CHECK(wave_of("sinusoid") == WaveformKind::sinusoid);
    CHECK_THROWS_AS(wave_of("square"), ConfigError);

    CHECK_THROWS_AS(config_from_json(json::parse(R"({"bode": {"which": "closed"}})")),
                    ConfigError);
}

TEST_CASE("physical invariants are re-validated") {
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"exo": {"r": 0.0}})")), ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"human": {"M_h": -1.0}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"actuator": {"k_s": -5.0}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"spring_loop": {"q_order": 1}})")),
                    ConfigError);
    // Inner module invariants surface as ConfigError, not their native type.
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"amplifier": {"k_p": 0.0}})")),
                    ConfigError);
    CHECK_THROWS_AS(config_from_json(json::parse(R"({"experiment": {"dt": 0.01}})")),
                    ConfigError);
    CHECK_THROWS_AS(
        config_from_json(json::parse(R"({"ensemble": {"K_h": {"count": 0}}})")),
        ConfigError);
    CHECK_THROWS_AS(
        config_from_json(json::parse(R"({"sysid": {"coherence_threshold": 1.5}})")),
        ConfigError);
}

TEST_CASE("dotted overrides edit the raw document") {
    json j = json::object();
    apply_override(j, "human.K_h=7.44");
    apply_override(j, "experiment.kind=tracking");  // bare string fallback
    apply_override(j, "ensemble.K_h.count=3");
    apply_override(j, "bode.sweep=true");
    const RunConfig c = config_from_json(j);
    CHECK(c.human.K_h == Approx(7.44));
    CHECK(c.experiment.kind == ExperimentKind::tracking);
    CHECK(c.ensemble.K_h.count == 3);
    CHECK(c.bode.sweep);

    CHECK_THROWS_AS(apply_override(j, "no_equals_sign"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
    CHECK_THROWS_AS(apply_override(j, "human..K_h=1"), ConfigError);

    // Overrides land in the document first; validation still has the last word.
    json bad = json::object();
    apply_override(bad, "exo.r=-1");
    CHECK_THROWS_AS(config_from_json(bad), ConfigError);
    json typo = json::object();
    apply_override(typo, "human.Kh=1");
    CHECK_THROWS_AS(config_from_json(typo), ConfigError);
}

TEST_CASE("config files load with overrides applied on top") {
    const std::string path = "test_config_tmp.json";
    {
        std::ofstream out(path);
        out << R"({"human": {"K_h": 31.91, "B_h": 1.84}, "delay_s": 0.006})";
    }
    const RunConfig c = load_config(path, {"human.K_h=70.11", "delay_s=0.002"});
    CHECK(c.human.K_h == Approx(70.11));  // override wins over the file
    CHECK(c.human.B_h == Approx(1.84));   // untouched file value survives
    CHECK(c.delay_s == Approx(0.002));
    std::remove(path.c_str());

    CHECK_THROWS_AS(load_config("does_not_exist.json"), ConfigError);

    {
        std::ofstream out(path);
        out << "{ not json";
    }
    CHECK_THROWS_AS(load_config(path), ConfigError);
    std::remove(path.c_str());

    // Empty file name means pure defaults plus overrides.
    const RunConfig d = load_config("", {"amplifier.z=30", "amplifier.p=0"});
    CHECK(d.amplifier.z == Approx(30.0));
    CHECK(d.amplifier.p == Approx(0.0));
}
