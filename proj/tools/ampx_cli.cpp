// ampx: control-design and simulation toolkit for strength-amplifying
// exoskeletons with series-elastic actuation.
//
// Subcommands:
//   bode      frequency-response CSV of P_s, P_alpha, or the compensated loop
//   margins   stability margins for the nominal plant or the uncertainty grid
//   simulate  closed-loop time-domain experiment -> trace CSV + metrics JSON
//   identify  impedance fit from time-series CSV logs -> JSON
//
// Exit codes: 0 ok, 2 config error, 3 robustness failure, 4 identification
// failure.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "ampx/config.hpp"
#include "ampx/control.hpp"
#include "ampx/plant.hpp"
#include "ampx/simulate.hpp"
#include "ampx/sysid.hpp"

namespace {

constexpr const char* kVersionHeader = "# ampx 1.0";

using nlohmann::json;

std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/// Output sink: a file under --out, or stdout when no directory was given.
class Sink {
  public:
    Sink(const std::string& out_dir, const std::string& name) {
        if (!out_dir.empty()) {
            std::filesystem::create_directories(out_dir);
            path_ = out_dir + "/" + name;
            file_.open(path_);
            if (!file_) throw ampx::Error("cannot open output file " + path_);
        }
    }
    std::ostream& stream() { return path_.empty() ? std::cout : file_; }
    const std::string& path() const { return path_; }

  private:
    std::string path_;
    std::ofstream file_;
};

struct BuiltPlants {
    ampx::LinearParams lp;
    ampx::TransferFunction P_s;
    ampx::TransferFunction P_alpha;  // delay attached
};

BuiltPlants build_plants(const ampx::RunConfig& c) {
    BuiltPlants b;
    b.lp = ampx::reflect_to_linear(c.human, c.exo);
    b.P_s = ampx::force_plant_dob(b.lp, c.actuator, c.spring_loop);
    b.P_alpha = ampx::amplification_plant(b.lp, c.actuator, c.spring_loop,
                                          c.amplifier.alpha, c.delay_s);
    return b;
}

void write_bode_block(std::ostream& os, const ampx::TransferFunction& g,
                      const std::vector<double>& grid) {
    os << "omega_rad_s,mag_db,phase_deg\n";
    const auto fr = ampx::tf_eval_grid(g, grid);
    const auto phase = ampx::detail::unwrap_phase_deg(fr.values);
    for (size_t i = 0; i < grid.size(); ++i) {
        os << fmt17(grid[i]) << ',' << fmt17(20.0 * std::log10(std::abs(fr.values[i])))
           << ',' << fmt17(phase[i]) << '\n';
    }
}

int cmd_bode(const ampx::RunConfig& c, const std::string& out_dir) {
    Sink sink(out_dir, "bode.csv");
    auto& os = sink.stream();
    os << kVersionHeader << '\n';
    const auto grid = ampx::log_grid(c.bode.omega_lo, c.bode.omega_hi, c.bode.points);
    const auto controller = ampx::make_amplification_controller(c.amplifier);

    auto plant_of = [&](const ampx::LinearParams& lp) {
        if (c.bode.which == "P_s") return ampx::force_plant_dob(lp, c.actuator, c.spring_loop);
        const auto pa = ampx::amplification_plant(lp, c.actuator, c.spring_loop,
                                                  c.amplifier.alpha, c.delay_s);
        return c.bode.which == "P_alpha" ? pa : ampx::open_loop(pa, controller);
    };

    if (!c.bode.sweep) {
        write_bode_block(os, plant_of(ampx::reflect_to_linear(c.human, c.exo)), grid);
        return 0;
    }
    const auto& e = c.ensemble;
    for (int ik = 0; ik < e.K_h.count; ++ik)
        for (int im = 0; im < e.M_e.count; ++im)
            for (int ir = 0; ir < e.r.count; ++ir) {
                const double K = e.K_h.at(ik), Me = e.M_e.at(im), r = e.r.at(ir);
                ampx::HumanParams h{K, ampx::human_damping_from_zeta(K, e.M_h, Me, e.zeta),
                                    e.M_h};
                ampx::ExoParams x{std::min(e.M_e_bar, Me), Me - std::min(e.M_e_bar, Me), r};
                os << "# member K_h=" << fmt17(K) << " M_e=" << fmt17(Me)
                   << " r=" << fmt17(r) << '\n';
                write_bode_block(os, plant_of(ampx::reflect_to_linear(h, x)), grid);
            }
    return 0;
}

json report_to_json(const ampx::MarginReport& rep) {
    json j;
    j["stable"] = rep.stable;
    j["crossovers"] = json::array();
    for (const auto& cr : rep.crossovers)
        j["crossovers"].push_back({{"omega_c", cr.omega_c},
                                   {"phase_margin_deg", cr.phase_margin}});
    if (rep.worst_pm) j["worst_pm_deg"] = *rep.worst_pm;
    if (rep.gain_margin_db) j["gain_margin_db"] = *rep.gain_margin_db;
    return j;
}

int cmd_margins(const ampx::RunConfig& c, const std::string& out_dir) {
    const auto grid = ampx::default_margin_grid();
    json out;
    out["version"] = kVersionHeader + 2;  // strip "# "
    bool all_stable = true;

    if (!c.margins.sweep) {
        const auto b = build_plants(c);
        const auto rep = ampx::margins(
            ampx::open_loop(b.P_alpha, ampx::make_amplification_controller(c.amplifier)),
            grid);
        all_stable = rep.stable;
        out["nominal"] = report_to_json(rep);
        std::cout << "nominal plant: " << (rep.stable ? "stable" : "UNSTABLE");
        if (rep.worst_pm) std::cout << ", phase margin " << *rep.worst_pm << " deg";
        std::cout << '\n';
    } else {
        const auto members = ampx::ensemble_sweep(c.ensemble, c.actuator, c.spring_loop,
                                                  c.amplifier, grid);
        double min_pm = std::numeric_limits<double>::infinity();
        int unstable = 0;
        out["members"] = json::array();
        for (const auto& m : members) {
            json jm = report_to_json(m.report);
            jm["K_h"] = m.human.K_h;
            jm["B_h"] = m.human.B_h;
            jm["M_e"] = m.exo.M_e_bar + m.exo.M_e_tilde;
            jm["r"] = m.exo.r;
            out["members"].push_back(std::move(jm));
            if (!m.report.stable) ++unstable;
            if (m.report.worst_pm) min_pm = std::min(min_pm, *m.report.worst_pm);
        }
        all_stable = unstable == 0;
        out["min_phase_margin_deg"] = min_pm;
        out["unstable_members"] = unstable;
        std::cout << members.size() << " plants, " << unstable << " unstable, min phase margin "
                  << min_pm << " deg\n";
    }
    if (!out_dir.empty()) {
        Sink sink(out_dir, "margins.json");
        sink.stream() << out.dump(2) << '\n';
    } else {
        std::cout << out.dump(2) << '\n';
    }
    return all_stable ? 0 : 3;
}

int cmd_simulate(const ampx::RunConfig& c, const std::string& out_dir) {
    const auto lp = ampx::reflect_to_linear(c.human, c.exo);
    const bool amp_on = c.experiment.kind != ampx::ExperimentKind::chirp;
    const auto sys = ampx::assemble(lp, c.actuator, c.spring_loop, c.amplifier,
                                    amp_on ? c.delay_s : 0.0, amp_on);
    const int stride =
        c.experiment.kind == ampx::ExperimentKind::chirp ? c.sysid.record_stride : 1;
    const auto tr = ampx::run(sys, c.experiment, stride);

    {
        Sink sink(out_dir, "trace.csv");
        auto& os = sink.stream();
        os << kVersionHeader << '\n';
        os << "t,theta_e,omega_e,tau_s,tau_c,tau_d,x_e,v_e,x_a,v_a,f_s,f_c,f_d,f_alpha\n";
        for (size_t i = 0; i < tr.size(); ++i) {
            os << fmt17(tr.t[i]) << ',' << fmt17(tr.theta_e[i]) << ','
               << fmt17(tr.omega_e[i]) << ',' << fmt17(tr.tau_s[i]) << ','
               << fmt17(tr.tau_c[i]) << ',' << fmt17(tr.f_d[i] * tr.r) << ','
               << fmt17(tr.x_e[i]) << ',' << fmt17(tr.v_e[i]) << ',' << fmt17(tr.x_a[i])
               << ',' << fmt17(tr.v_a[i]) << ',' << fmt17(tr.f_s[i]) << ','
               << fmt17(tr.f_c[i]) << ',' << fmt17(tr.f_d[i]) << ','
               << fmt17(tr.f_alpha[i]) << '\n';
        }
    }

    json mj;
    mj["version"] = kVersionHeader + 2;
    mj["verdict"] = tr.diverged ? "unstable" : "completed";
    mj["samples"] = tr.size();
    try {
        if (c.experiment.kind == ampx::ExperimentKind::tracking && !tr.diverged) {
            const auto m = ampx::amplification_metrics(
                tr, c.experiment.waveform_freq_hz,
                c.experiment.waveform == ampx::WaveformKind::trapezoid);
            mj["static_gain"] = m.static_gain;
            mj["flat_windows"] = m.flat_windows;
            mj["dynamic_gain"] = m.dynamic_gain;
            mj["dynamic_phase_deg"] = m.dynamic_phase_deg;
        } else if (c.experiment.kind == ampx::ExperimentKind::step_release) {
            const auto m = ampx::step_metrics(tr, c.experiment.release_time_s);
            mj["growth_ratio"] = m.growth_ratio;
            mj["settling_time_s"] = m.settling_time_s;
            mj["unstable"] = m.unstable;
            if (!tr.diverged) {
                const auto f = ampx::fit_human_from_trace(
                    tr, c.exo.M_e_bar + c.exo.M_e_tilde, c.human.M_h);
                mj["fit"] = {{"K_hat", f.K_hat},
                             {"B_hat", f.B_hat},
                             {"zeta_hat_Me", f.zeta_hat_Me},
                             {"zeta_hat_Mtotal", f.zeta_hat_Mtotal},
                             {"r_squared", f.r_squared}};
            }
        }
    } catch (const ampx::Error& e) {
        mj["metrics_error"] = e.what();
    }
    if (!out_dir.empty()) {
        Sink sink(out_dir, "metrics.json");
        sink.stream() << mj.dump(2) << '\n';
    } else {
        std::cout << mj.dump(2) << '\n';
    }
    return 0;
}

struct LoadedLog {
    std::vector<double> t, tau_s, theta_e;
};

LoadedLog load_log_csv(const std::string& file) {
    std::ifstream in(file);
    if (!in) throw ampx::Error("cannot open input file '" + file + "'");
    std::string line;
    // Skip comment lines, then read the header.
    do {
        if (!std::getline(in, line)) throw ampx::TooShort(file + ": no header row");
    } while (!line.empty() && line[0] == '#');
    std::vector<std::string> cols;
    {
        std::stringstream ss(line);
        std::string c;
        while (std::getline(ss, c, ',')) cols.push_back(c);
    }
    auto col = [&](const std::string& name) {
        for (size_t i = 0; i < cols.size(); ++i)
            if (cols[i] == name) return static_cast<int>(i);
        throw ampx::Error(file + ": missing column '" + name + "'");
    };
    const int it = col("t"), is = col("tau_s"), ie = col("theta_e");
    LoadedLog log;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        int k = 0;
        double vt = 0, vs = 0, ve = 0;
        while (std::getline(ss, cell, ',')) {
            if (k == it) vt = std::stod(cell);
            if (k == is) vs = std::stod(cell);
            if (k == ie) ve = std::stod(cell);
            ++k;
        }
        log.t.push_back(vt);
        log.tau_s.push_back(vs);
        log.theta_e.push_back(ve);
    }
    if (log.t.size() < 2) throw ampx::TooShort(file + ": fewer than 2 samples");
    return log;
}

int cmd_identify(const ampx::RunConfig& c, const std::vector<std::string>& inputs,
                 const std::string& out_dir) {
    if (inputs.empty()) throw ampx::Error("identify: no input files given");
    json out;
    out["version"] = kVersionHeader + 2;
    out["fits"] = json::array();
    std::vector<ampx::ImpedanceFit> fits;
    for (const auto& file : inputs) {
        auto log = load_log_csv(file);
        if (c.sysid.noise_rms_frac > 0.0) {
            double rms = 0.0;
            for (double v : log.tau_s) rms += v * v;
            rms = std::sqrt(rms / static_cast<double>(log.tau_s.size()));
            std::mt19937 rng(c.sysid.seed);
            std::normal_distribution<double> g(0.0, c.sysid.noise_rms_frac * rms);
            for (double& v : log.tau_s) v += g(rng);
        }
        const double fs = 1.0 / (log.t[1] - log.t[0]);
        const auto frf =
            ampx::estimate_frf(log.theta_e, log.tau_s, fs, c.sysid.window_s);
        ampx::FitOptions opt;
        opt.coherence_threshold = c.sysid.coherence_threshold;
        const auto fit = ampx::fit_impedance(frf, c.sysid.omega_lo, c.sysid.omega_hi, opt);
        fits.push_back(fit);
        out["fits"].push_back({{"file", file},
                               {"K_h", fit.K_h},
                               {"B_h", fit.B_h},
                               {"M_total", fit.M_total},
                               {"zeta", fit.zeta},
                               {"omega_h_defined", fit.omega_h_defined},
                               {"band_lo", fit.band_lo},
                               {"band_hi", fit.band_hi},
                               {"bins_used", fit.bins_used}});
        std::cout << file << ": K_h=" << fit.K_h << " B_h=" << fit.B_h
                  << " M_total=" << fit.M_total << " zeta=" << fit.zeta << '\n';
    }
    if (fits.size() >= 2) {
        const auto st = ampx::zeta_statistics(fits);
        out["zeta"] = {{"mean", st.mean}, {"min", st.min}, {"max", st.max}};
        std::cout << "zeta mean " << st.mean << " range [" << st.min << ", " << st.max
                  << "]\n";
    }
    if (!out_dir.empty()) {
        Sink sink(out_dir, "identify.json");
        sink.stream() << out.dump(2) << '\n';
    } else {
        std::cout << out.dump(2) << '\n';
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Exoskeleton amplification control toolkit"};
    app.require_subcommand(1);

    std::string config_file, out_dir;
    std::vector<std::string> overrides, inputs;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_file, "JSON config file");
        sub->add_option("--out", out_dir, "output directory (default: stdout)");
        sub->add_option("--set", overrides, "override config values, key.path=value")
            ->take_all();
    };
    auto* bode = app.add_subcommand("bode", "frequency response CSV");
    auto* margins = app.add_subcommand("margins", "stability margin report");
    auto* simulate = app.add_subcommand("simulate", "closed-loop experiment");
    auto* identify = app.add_subcommand("identify", "impedance fit from CSV logs");
    for (auto* s : {bode, margins, simulate, identify}) add_common(s);
    identify->add_option("--input", inputs, "time-series CSV log(s)")->take_all();

    CLI11_PARSE(app, argc, argv);

    ampx::RunConfig cfg;
    try {
        cfg = ampx::load_config(config_file, overrides);
    } catch (const ampx::Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    }

    try {
        if (bode->parsed()) return cmd_bode(cfg, out_dir);
        if (margins->parsed()) return cmd_margins(cfg, out_dir);
        if (simulate->parsed()) return cmd_simulate(cfg, out_dir);
        if (identify->parsed()) return cmd_identify(cfg, inputs, out_dir);
    } catch (const ampx::BandTooNoisy& e) {
        std::cerr << "identification failure: " << e.what() << '\n';
        return 4;
    } catch (const ampx::NoInertialAsymptote& e) {
        std::cerr << "identification failure: " << e.what() << '\n';
        return 4;
    } catch (const ampx::TooShort& e) {
        std::cerr << "identification failure: " << e.what() << '\n';
        return 4;
    } catch (const ampx::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
