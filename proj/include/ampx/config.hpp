#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ampx/control.hpp"
#include "ampx/errors.hpp"
#include "ampx/plant.hpp"
#include "ampx/simulate.hpp"
#include "ampx/sysid.hpp"

namespace ampx {

/// Options for the identification pipeline (cmd_identify and tests).
struct SysidOptions {
    double window_s = 40.0;
    double omega_lo = 0.8;          // rad/s, fit band
    double omega_hi = 90.0;
    double coherence_threshold = 0.9;
    int record_stride = 20;         // simulation samples per logged sample
    double noise_rms_frac = 0.0;    // additive output noise, fraction of RMS
    unsigned seed = 12345;

    void validate() const {
        if (window_s <= 0.0) throw ConfigError("sysid.window_s must be > 0");
        if (!(0.0 < omega_lo && omega_lo < omega_hi))
            throw ConfigError("sysid: require 0 < omega_lo < omega_hi");
        if (coherence_threshold < 0.0 || coherence_threshold > 1.0)
            throw ConfigError("sysid.coherence_threshold must be in [0, 1]");
        if (record_stride < 1) throw ConfigError("sysid.record_stride must be >= 1");
        if (noise_rms_frac < 0.0) throw ConfigError("sysid.noise_rms_frac must be >= 0");
    }
};

/// Options for the bode command.
struct BodeOptions {
    std::string which = "P_alpha";  // P_s | P_alpha | open_loop
    double omega_lo = 1e-2;         // rad/s
    double omega_hi = 1e4;
    int points = 400;
    bool sweep = false;             // one block per ensemble member

    void validate() const {
        if (which != "P_s" && which != "P_alpha" && which != "open_loop")
            throw ConfigError("bode.which must be one of P_s | P_alpha | open_loop");
        if (!(0.0 < omega_lo && omega_lo < omega_hi))
            throw ConfigError("bode: require 0 < omega_lo < omega_hi");
        if (points < 2) throw ConfigError("bode.points must be >= 2");
    }
};

struct MarginsOptions {
    bool sweep = true;  // sweep the ensemble; false analyzes the single nominal plant
};

/// Complete experiment manifest: every module's parameters in one document.
struct RunConfig {
    HumanParams human{50.18, 4.21, 0.09};
    ExoParams exo{0.1, 0.95, 0.025};
    ActuatorParams actuator{796958.0, 250.0, 4500.0};
    SpringLoopConfig spring_loop{2.0 * 796958.0, 0.039 * 796958.0, 40.0, 2};
    AmplifierConfig amplifier{10.0, 0.1, 10.0, 0.01};
    double delay_s = 0.006;
    EnsembleSpec ensemble{{7.44, 70.11, 20}, {0.1, 1.05, 20}, {0.005, 0.025, 5},
                          0.23, 0.006, 0.09, 0.1};
    ExperimentSpec experiment{};
    SysidOptions sysid{};
    BodeOptions bode{};
    MarginsOptions margins{};

    void validate() const {
        if (human.K_h < 0.0 || human.B_h < 0.0 || human.M_h <= 0.0)
            throw ConfigError("human: require K_h >= 0, B_h >= 0, M_h > 0");
        if (exo.r <= 0.0) throw ConfigError("exo.r must be > 0");
        if (exo.M_e_bar < 0.0 || exo.M_e_tilde < 0.0)
            throw ConfigError("exo: inertias must be >= 0");
        if (actuator.k_s <= 0.0 || actuator.m_a <= 0.0 || actuator.b_a < 0.0)
            throw ConfigError("actuator: require k_s > 0, m_a > 0, b_a >= 0");
        if (spring_loop.k_ss <= 0.0 || spring_loop.b_ss < 0.0)
            throw ConfigError("spring_loop: require k_ss > 0, b_ss >= 0");
        if (spring_loop.q_cutoff_hz <= 0.0 || spring_loop.q_order < 2)
            throw ConfigError("spring_loop: require q_cutoff_hz > 0, q_order >= 2");
        if (delay_s < 0.0) throw ConfigError("delay_s must be >= 0");
        try {
            amplifier.validate();
            ensemble.validate();
            experiment.validate();
        } catch (const Error& e) {
            throw ConfigError(e.what());
        }
        sysid.validate();
        bode.validate();
    }
};

namespace detail {

using Json = nlohmann::json;

inline void require_object(const Json& j, const std::string& path) {
    if (!j.is_object()) throw ConfigError(path + ": expected an object");
}

inline void check_keys(const Json& j, const std::string& path,
                       std::initializer_list<const char*> known) {
    require_object(j, path);
    for (const auto& [key, _] : j.items()) {
        bool ok = false;
        for (const char* k : known)
            if (key == k) { ok = true; break; }
        if (!ok) throw ConfigError(path + ": unknown key '" + key + "'");
    }
}

template <typename T>
inline void get_to(const Json& j, const char* key, const std::string& path, T& out) {
    if (!j.contains(key)) return;
    try {
        j.at(key).get_to(out);
    } catch (const Json::exception& e) {
        throw ConfigError(path + "." + key + ": " + e.what());
    }
}

inline void load_range(const Json& j, const std::string& path, Range& r) {
    check_keys(j, path, {"lo", "hi", "count"});
    get_to(j, "lo", path, r.lo);
    get_to(j, "hi", path, r.hi);
    get_to(j, "count", path, r.count);
}

}  // namespace detail

inline RunConfig config_from_json(const nlohmann::json& j) {
    using detail::check_keys;
    using detail::get_to;
    RunConfig c;
    check_keys(j, "config",
               {"human", "exo", "actuator", "spring_loop", "amplifier", "delay_s",
                "ensemble", "experiment", "sysid", "bode", "margins"});
    if (j.contains("human")) {
        const auto& s = j["human"];
        check_keys(s, "human", {"K_h", "B_h", "M_h"});
        get_to(s, "K_h", "human", c.human.K_h);
        get_to(s, "B_h", "human", c.human.B_h);
        get_to(s, "M_h", "human", c.human.M_h);
    }
    if (j.contains("exo")) {
        const auto& s = j["exo"];
        check_keys(s, "exo", {"M_e_bar", "M_e_tilde", "r"});
        get_to(s, "M_e_bar", "exo", c.exo.M_e_bar);
        get_to(s, "M_e_tilde", "exo", c.exo.M_e_tilde);
        get_to(s, "r", "exo", c.exo.r);
    }
    if (j.contains("actuator")) {
        const auto& s = j["actuator"];
        check_keys(s, "actuator", {"k_s", "m_a", "b_a"});
        get_to(s, "k_s", "actuator", c.actuator.k_s);
        get_to(s, "m_a", "actuator", c.actuator.m_a);
        get_to(s, "b_a", "actuator", c.actuator.b_a);
    }
    if (j.contains("spring_loop")) {
        const auto& s = j["spring_loop"];
        check_keys(s, "spring_loop", {"k_ss", "b_ss", "q_cutoff_hz", "q_order"});
        get_to(s, "k_ss", "spring_loop", c.spring_loop.k_ss);
        get_to(s, "b_ss", "spring_loop", c.spring_loop.b_ss);
        get_to(s, "q_cutoff_hz", "spring_loop", c.spring_loop.q_cutoff_hz);
        get_to(s, "q_order", "spring_loop", c.spring_loop.q_order);
    }
    if (j.contains("amplifier")) {
        const auto& s = j["amplifier"];
        check_keys(s, "amplifier", {"alpha", "k_p", "z", "p"});
        get_to(s, "alpha", "amplifier", c.amplifier.alpha);
        get_to(s, "k_p", "amplifier", c.amplifier.k_p);
        get_to(s, "z", "amplifier", c.amplifier.z);
        get_to(s, "p", "amplifier", c.amplifier.p);
    }
    get_to(j, "delay_s", "config", c.delay_s);
    if (j.contains("ensemble")) {
        const auto& s = j["ensemble"];
        check_keys(s, "ensemble",
                   {"K_h", "M_e", "r", "zeta", "delay_s", "M_h", "M_e_bar"});
        if (s.contains("K_h")) detail::load_range(s["K_h"], "ensemble.K_h", c.ensemble.K_h);
        if (s.contains("M_e")) detail::load_range(s["M_e"], "ensemble.M_e", c.ensemble.M_e);
        if (s.contains("r")) detail::load_range(s["r"], "ensemble.r", c.ensemble.r);
        get_to(s, "zeta", "ensemble", c.ensemble.zeta);
        get_to(s, "delay_s", "ensemble", c.ensemble.delay_s);
        get_to(s, "M_h", "ensemble", c.ensemble.M_h);
        get_to(s, "M_e_bar", "ensemble", c.ensemble.M_e_bar);
    }
    if (j.contains("experiment")) {
        const auto& s = j["experiment"];
        check_keys(s, "experiment",
                   {"kind", "duration_s", "dt", "waveform", "waveform_freq_hz",
                    "waveform_amplitude_rad", "tracking_bias_tau_Nm", "step_tau_Nm",
                    "release_time_s", "chirp_f0_hz", "chirp_f1_hz", "chirp_tau_Nm",
                    "saturation_N"});
        if (s.contains("kind")) {
            const std::string k = s["kind"].get<std::string>();
            if (k == "step_release") c.experiment.kind = ExperimentKind::step_release;
            else if (k == "tracking") c.experiment.kind = ExperimentKind::tracking;
            else if (k == "chirp") c.experiment.kind = ExperimentKind::chirp;
            else throw ConfigError("experiment.kind: unknown kind '" + k + "'");
        }
        if (s.contains("waveform")) {
            const std::string w = s["waveform"].get<std::string>();
            if (w == "trapezoid") c.experiment.waveform = WaveformKind::trapezoid;
            else if (w == "sinusoid") c.experiment.waveform = WaveformKind::sinusoid;
            else throw ConfigError("experiment.waveform: unknown waveform '" + w + "'");
        }
        get_to(s, "duration_s", "experiment", c.experiment.duration_s);
        get_to(s, "dt", "experiment", c.experiment.dt);
        get_to(s, "waveform_freq_hz", "experiment", c.experiment.waveform_freq_hz);
        get_to(s, "waveform_amplitude_rad", "experiment",
               c.experiment.waveform_amplitude_rad);
        get_to(s, "tracking_bias_tau_Nm", "experiment", c.experiment.tracking_bias_tau_Nm);
        get_to(s, "step_tau_Nm", "experiment", c.experiment.step_tau_Nm);
        get_to(s, "release_time_s", "experiment", c.experiment.release_time_s);
        get_to(s, "chirp_f0_hz", "experiment", c.experiment.chirp_f0_hz);
        get_to(s, "chirp_f1_hz", "experiment", c.experiment.chirp_f1_hz);
        get_to(s, "chirp_tau_Nm", "experiment", c.experiment.chirp_tau_Nm);
        get_to(s, "saturation_N", "experiment", c.experiment.saturation_N);
    }
    if (j.contains("sysid")) {
        const auto& s = j["sysid"];
        check_keys(s, "sysid",
                   {"window_s", "omega_lo", "omega_hi", "coherence_threshold",
                    "record_stride", "noise_rms_frac", "seed"});
        get_to(s, "window_s", "sysid", c.sysid.window_s);
        get_to(s, "omega_lo", "sysid", c.sysid.omega_lo);
        get_to(s, "omega_hi", "sysid", c.sysid.omega_hi);
        get_to(s, "coherence_threshold", "sysid", c.sysid.coherence_threshold);
        get_to(s, "record_stride", "sysid", c.sysid.record_stride);
        get_to(s, "noise_rms_frac", "sysid", c.sysid.noise_rms_frac);
        get_to(s, "seed", "sysid", c.sysid.seed);
    }
    if (j.contains("bode")) {
        const auto& s = j["bode"];
        check_keys(s, "bode", {"which", "omega_lo", "omega_hi", "points", "sweep"});
        get_to(s, "which", "bode", c.bode.which);
        get_to(s, "omega_lo", "bode", c.bode.omega_lo);
        get_to(s, "omega_hi", "bode", c.bode.omega_hi);
        get_to(s, "points", "bode", c.bode.points);
        get_to(s, "sweep", "bode", c.bode.sweep);
    }
    if (j.contains("margins")) {
        const auto& s = j["margins"];
        check_keys(s, "margins", {"sweep"});
        get_to(s, "sweep", "margins", c.margins.sweep);
    }
    c.validate();
    return c;
}

/// Applies a "dotted.path=value" override onto the raw JSON document.
/// Values parse as JSON when possible (numbers, booleans), else as strings.
inline void apply_override(nlohmann::json& j, const std::string& kv) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
        throw ConfigError("--set expects key.path=value, got '" + kv + "'");
    const std::string path = kv.substr(0, eq);
    const std::string raw = kv.substr(eq + 1);
    nlohmann::json value;
    try {
        value = nlohmann::json::parse(raw);
    } catch (const nlohmann::json::exception&) {
        value = raw;  // bare strings like tracking or P_alpha
    }
    nlohmann::json* node = &j;
    size_t start = 0;
    while (true) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot - start);
        if (key.empty()) throw ConfigError("--set: empty key segment in '" + path + "'");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dot + 1;
    }
}

/// Loads a config file (JSON) and applies --set overrides, then validates.
inline RunConfig load_config(const std::string& file,
                             const std::vector<std::string>& overrides = {}) {
    nlohmann::json j = nlohmann::json::object();
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in) throw ConfigError("cannot open config file '" + file + "'");
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError(std::string("config parse error: ") + e.what());
        }
    }
    for (const auto& kv : overrides) apply_override(j, kv);
    return config_from_json(j);
}

}  // namespace ampx
