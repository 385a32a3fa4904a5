// spinamp: command-line front end for the spin-amplification toolkit.
//
// Subcommands wrap one library operation each; `run` executes a JSON scenario
// and writes an artifact bundle with a manifest. All flags can also come from
// an INI config file via --config; explicit flags win over config values.
//
// Exit codes: 0 success, 2 configuration error (including bad flags),
// 3 numerical failure, 4 I/O error.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spinamp/bloch.hpp"
#include "spinamp/constants.hpp"
#include "spinamp/core.hpp"
#include "spinamp/errors.hpp"
#include "spinamp/fitting.hpp"
#include "spinamp/scenario.hpp"
#include "spinamp/signal.hpp"
#include "spinamp/timeseries.hpp"
#include "spinamp/version.hpp"
#include "spinamp/zerofield.hpp"

namespace {

using spinamp::scenario::json;

struct SampleOpts {
    std::string nuclide = "1H";
    double gamma_mhz_per_t = 0.0;  // 0 = use nuclide
    double n_per_cm3 = 1e22;
    double volume_ml = 0.5;
    double p0 = 2e-4;
    double t1_s = 0.8;
    double t2_s = 0.8;
    double xi_per_cm3 = 0.02;
    std::string nuclides_file;

    spinamp::PhysicalConstants constants() const {
        return nuclides_file.empty() ? spinamp::default_constants()
                                     : spinamp::load_nuclide_table(nuclides_file);
    }

    spinamp::SampleSpec resolve() const {
        spinamp::SampleSpec s;
        s.gamma = gamma_mhz_per_t != 0.0
                      ? spinamp::si::rad_s_t_from_mhz_t(gamma_mhz_per_t)
                      : constants().gamma(nuclide);
        s.n = spinamp::si::per_m3_from_per_cm3(n_per_cm3);
        s.volume = spinamp::si::m3_from_ml(volume_ml);
        s.p0 = p0;
        s.t1 = t1_s;
        s.t2 = t2_s;
        s.xi = spinamp::si::per_m3_from_per_cm3(xi_per_cm3);
        s.validate();
        return s;
    }
};

void add_sample_options(CLI::App* cmd, SampleOpts& opts) {
    cmd->add_option("--nuclide", opts.nuclide, "Sensing nuclide label")
        ->capture_default_str();
    cmd->add_option("--gamma-mhz-per-t", opts.gamma_mhz_per_t,
                    "Explicit gyromagnetic ratio (MHz/T, signed); overrides --nuclide");
    cmd->add_option("--n-per-cm3", opts.n_per_cm3, "Spin number density (cm^-3)")
        ->capture_default_str();
    cmd->add_option("--volume-ml", opts.volume_ml, "Sample volume (mL)")
        ->capture_default_str();
    cmd->add_option("--p0", opts.p0, "Polarization, fraction in [0,1]")
        ->capture_default_str();
    cmd->add_option("--t1-s", opts.t1_s, "Longitudinal relaxation time (s)")
        ->capture_default_str();
    cmd->add_option("--t2-s", opts.t2_s, "Transverse relaxation time (s)")
        ->capture_default_str();
    cmd->add_option("--xi-per-cm3", opts.xi_per_cm3, "Geometry/detection factor (cm^-3)")
        ->capture_default_str();
    cmd->add_option("--nuclides", opts.nuclides_file,
                    "Nuclide table file (label + MHz/T per line)");
}

std::map<std::string, double> parse_assignments(const std::string& text) {
    std::map<std::string, double> out;
    if (text.empty()) return out;
    std::istringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto eq = item.find('=');
        if (eq == std::string::npos)
            throw spinamp::config_error("expected name=value, got '" + item + "'");
        try {
            out[item.substr(0, eq)] = std::stod(item.substr(eq + 1));
        } catch (const std::exception&) {
            throw spinamp::config_error("bad number in '" + item + "'");
        }
    }
    return out;
}

int run_app(int argc, char** argv) {
    CLI::App app{"spinamp: nuclear-spin magnetic amplification toolkit"};
    app.require_subcommand(1);
    app.set_version_flag("--version", spinamp::kVersion);
    app.set_config("--config", "", "Read options from an INI file");

    // ---- constants ----------------------------------------------------
    auto* cmd_constants =
        app.add_subcommand("constants", "Print physical constants and the nuclide table");
    std::string nuclides_file;
    bool as_json = false;
    cmd_constants->add_option("--nuclides", nuclides_file,
                              "Merge a nuclide table file over the built-ins");
    cmd_constants->add_flag("--json", as_json, "Emit JSON instead of text");
    cmd_constants->callback([&] {
        const spinamp::PhysicalConstants c =
            nuclides_file.empty() ? spinamp::default_constants()
                                  : spinamp::load_nuclide_table(nuclides_file);
        if (as_json) {
            json j;
            j["mu0_T_m_per_A"] = c.mu0;
            j["hbar_J_s"] = c.hbar;
            j["gamma_mhz_per_t"] = json::object();
            for (const auto& [label, gamma] : c.gamma_table)
                j["gamma_mhz_per_t"][label] = spinamp::si::mhz_t_from_rad_s_t(gamma);
            std::cout << j.dump(2) << "\n";
        } else {
            const auto g12 = [](double v) {
                char buf[32];
                std::snprintf(buf, sizeof(buf), "%.12g", v);
                return std::string(buf);
            };
            std::cout << "mu0_T_m_per_A " << g12(c.mu0) << "\n";
            std::cout << "hbar_J_s " << g12(c.hbar) << "\n";
            for (const auto& [label, gamma] : c.gamma_table)
                std::cout << "gamma_MHz_per_T " << label << " "
                          << g12(spinamp::si::mhz_t_from_rad_s_t(gamma)) << "\n";
        }
    });

    // ---- bloch-evolve --------------------------------------------------
    auto* cmd_evolve = app.add_subcommand(
        "bloch-evolve", "Integrate the driven Bloch equations; write the dipolar field");
    SampleOpts evolve_sample;
    add_sample_options(cmd_evolve, evolve_sample);
    double nu0_hz = 250.0, amplitude_nt = 0.6, detuning_rad_s = 0.0, phase_rad = 0.0;
    double duration_s = 2.4, kappa = 0.0;
    int samples_per_period = 256;
    std::string out_path, envelope_out;
    cmd_evolve->add_option("--nu0-hz", nu0_hz, "Resonance frequency (Hz)")
        ->capture_default_str();
    cmd_evolve->add_option("--amplitude-nt", amplitude_nt, "Drive amplitude (nT)")
        ->capture_default_str();
    cmd_evolve->add_option("--detuning-rad-s", detuning_rad_s, "Angular detuning (rad/s)")
        ->capture_default_str();
    cmd_evolve->add_option("--phase-rad", phase_rad, "Drive phase (rad)")
        ->capture_default_str();
    cmd_evolve->add_option("--duration-s", duration_s, "Integration time (s)")
        ->capture_default_str();
    cmd_evolve->add_option("--samples-per-period", samples_per_period,
                           "Integrator samples per drive period (>= 50)")
        ->capture_default_str();
    cmd_evolve->add_option("--kappa", kappa,
                           "Dipolar readout calibration; 0 = calibrate automatically")
        ->capture_default_str();
    cmd_evolve->add_option("--out", out_path, "Dipolar time-series CSV path")->required();
    cmd_evolve->add_option("--envelope-out", envelope_out,
                           "Optional envelope CSV (t_s,value_T)");
    cmd_evolve->callback([&] {
        using namespace spinamp;
        const PhysicalConstants c = evolve_sample.constants();
        BlochParams params;
        params.sample = evolve_sample.resolve();
        params.b0 = kTwoPi * nu0_hz / params.sample.gamma;
        params.drive.amplitude = si::tesla_from_nanotesla(amplitude_nt);
        params.drive.frequency = nu0_hz + detuning_rad_s / kTwoPi;
        params.drive.phase = phase_rad;
        params.kappa = kappa != 0.0 ? kappa : calibrate_kappa(params.sample, params.b0, c);
        const double dt = 1.0 / (samples_per_period * params.drive.frequency);
        const Trajectory traj = evolve(params, duration_s, dt, c);
        write_timeseries_csv(dipolar_field(traj, params, c), out_path);
        if (!envelope_out.empty()) {
            const double omega = kTwoPi * params.drive.frequency;
            const double window = 1.0 / params.drive.frequency;
            const double scale =
                params.kappa * 2.0 * params.sample.xi * c.mu0 * params.sample.volume;
            TimeSeries env;
            env.rate = 100.0;
            env.t0 = window;
            for (double t = window; t <= duration_s - window; t += 0.01)
                env.samples.push_back(scale * envelope_at(traj, omega, t, 1));
            write_timeseries_csv(env, envelope_out);
        }
        std::cout << "kappa " << format_g17(params.kappa) << "\n";
        std::cout << "samples " << traj.states.size() << "\n";
    });

    // ---- zf-spectrum ----------------------------------------------------
    auto* cmd_zf = app.add_subcommand(
        "zf-spectrum", "Zero-field eigen-lines and Lorentzian spectrum of a cluster");
    std::string cluster_path, rho0_path, spectrum_out, lines_out, zf_nuclides;
    double t2_j = 10.5, t2_2j = 5.3, t2_other = 0.0, epsilon = 1.0;
    int polarized_spin = -1;
    double grid_min = 0.5, grid_max = 4.5;
    int grid_points = 2001;
    cmd_zf->add_option("--cluster", cluster_path, "Cluster definition JSON")->required();
    cmd_zf->add_option("--rho0", rho0_path, "Initial density matrix JSON (optional)");
    cmd_zf->add_option("--t2-j", t2_j, "T2 of the J manifold (s)")->capture_default_str();
    cmd_zf->add_option("--t2-2j", t2_2j, "T2 of the 2J manifold (s)")->capture_default_str();
    cmd_zf->add_option("--t2-other", t2_other, "T2 for untagged lines (s); 0 = reject them");
    cmd_zf->add_option("--epsilon", epsilon, "Zeeman-order polarization of rho0")
        ->capture_default_str();
    cmd_zf->add_option("--polarized-spin", polarized_spin,
                       "Index of the polarized spin; -1 = auto (heteronucleus)");
    cmd_zf->add_option("--grid-min-hz", grid_min, "Spectrum grid start (Hz)")
        ->capture_default_str();
    cmd_zf->add_option("--grid-max-hz", grid_max, "Spectrum grid end (Hz)")
        ->capture_default_str();
    cmd_zf->add_option("--grid-points", grid_points, "Spectrum grid points")
        ->capture_default_str();
    cmd_zf->add_option("--out", spectrum_out, "Spectrum CSV path (freq_hz,amplitude)");
    cmd_zf->add_option("--lines-out", lines_out, "Line table CSV path");
    cmd_zf->add_option("--nuclides", zf_nuclides, "Nuclide table file");
    cmd_zf->callback([&] {
        using namespace spinamp;
        using namespace spinamp::zerofield;
        const PhysicalConstants c = zf_nuclides.empty()
                                        ? default_constants()
                                        : load_nuclide_table(zf_nuclides);
        const SpinCluster cluster = load_cluster_json(cluster_path, c);
        Op rho0;
        if (!rho0_path.empty()) {
            rho0 = load_operator_json(rho0_path);
        } else {
            std::size_t index;
            if (polarized_spin >= 0) {
                index = static_cast<std::size_t>(polarized_spin);
            } else {
                const auto hetero = cluster.hetero_index();
                index = hetero ? *hetero : 0;
            }
            rho0 = zeeman_rho0(cluster, index, epsilon);
        }
        const EigenSystem sys = eigensystem(build_hamiltonian(cluster), cluster);
        const TransitionTable table = transitions(sys, rho0, detect_operator(cluster, 'z'),
                                                  cluster.reference_j());
        for (const auto& line : table.lines)
            std::cout << "line " << format_g17(line.freq_hz) << " Hz  amp "
                      << format_g17(std::real(line.amplitude)) << "  ["
                      << manifold_name(line.tag) << "]  " << line.from << " -> "
                      << line.to << "\n";
        if (!lines_out.empty()) {
            std::ofstream out(lines_out, std::ios::binary);
            if (!out) throw io_error("cannot open for writing: " + lines_out);
            out << "freq_hz,amplitude,manifold,from,to\n";
            for (const auto& line : table.lines)
                out << format_g17(line.freq_hz) << ","
                    << format_g17(std::real(line.amplitude)) << ","
                    << manifold_name(line.tag) << "," << line.from << "," << line.to
                    << "\n";
        }
        if (!spectrum_out.empty()) {
            std::map<Manifold, double> t2_map = {{Manifold::J, t2_j},
                                                 {Manifold::TwoJ, t2_2j}};
            if (t2_other > 0.0) t2_map[Manifold::Other] = t2_other;
            std::vector<double> grid;
            for (int i = 0; i < grid_points; ++i)
                grid.push_back(grid_min + (grid_max - grid_min) * i / (grid_points - 1.0));
            const auto spec = spectrum(table, t2_map, grid);
            std::ofstream out(spectrum_out, std::ios::binary);
            if (!out) throw io_error("cannot open for writing: " + spectrum_out);
            out << "freq_hz,amplitude\n";
            for (std::size_t i = 0; i < grid.size(); ++i)
                out << format_g17(grid[i]) << "," << format_g17(spec[i]) << "\n";
        }
    });

    // ---- amp-scan -------------------------------------------------------
    auto* cmd_amp = app.add_subcommand(
        "amp-scan", "Closed-form amplification factor vs time or detuning");
    SampleOpts amp_sample;
    add_sample_options(cmd_amp, amp_sample);
    std::string scan_axis = "t", amp_out;
    double fixed_t = 0.8, fixed_delta = 0.0, scan_min = 0.0, scan_max = 2.4;
    int scan_points = 241;
    cmd_amp->add_option("--scan", scan_axis, "Scan axis: 't' or 'delta'")
        ->check(CLI::IsMember({"t", "delta"}))
        ->capture_default_str();
    cmd_amp->add_option("--t-s", fixed_t, "Fixed sensing time for --scan delta (s)")
        ->capture_default_str();
    cmd_amp->add_option("--delta-rad-s", fixed_delta,
                        "Fixed detuning for --scan t (rad/s)")
        ->capture_default_str();
    cmd_amp->add_option("--min", scan_min, "Scan start")->capture_default_str();
    cmd_amp->add_option("--max", scan_max, "Scan end")->capture_default_str();
    cmd_amp->add_option("--points", scan_points, "Scan points")->capture_default_str();
    cmd_amp->add_option("--out", amp_out, "Output CSV path")->required();
    cmd_amp->callback([&] {
        using namespace spinamp;
        const PhysicalConstants c = amp_sample.constants();
        const SampleSpec s = amp_sample.resolve();
        if (scan_points < 2 || !(scan_max > scan_min))
            throw config_error("amp-scan: bad grid");
        std::ofstream out(amp_out, std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + amp_out);
        out << (scan_axis == "t" ? "t_s,G" : "delta_rad_s,G") << "\n";
        for (int i = 0; i < scan_points; ++i) {
            const double x = scan_min + (scan_max - scan_min) * i / (scan_points - 1.0);
            const double g =
                scan_axis == "t"
                    ? amplification_transient(s, x, Detuning{fixed_delta, 0.0}, c)
                    : amplification_transient(s, fixed_t, Detuning{x, 0.0}, c);
            out << format_g17(x) << "," << format_g17(g) << "\n";
        }
        std::cout << "g_steady " << format_g17(amplification_steady(s, c)) << "\n";
    });

    // ---- dispersive-scan --------------------------------------------------
    auto* cmd_disp = app.add_subcommand(
        "dispersive-scan", "R and phi versus detuning from the interference model");
    SampleOpts disp_sample;
    add_sample_options(cmd_disp, disp_sample);
    double dmin = -5.0, dmax = 5.0, sense_time = 0.0;
    int dpoints = 201;
    std::string gain_model = "steady", ratio_form = "first_order", disp_out;
    cmd_disp->add_option("--delta-t2-min", dmin, "Scan start in delta*T2 units")
        ->capture_default_str();
    cmd_disp->add_option("--delta-t2-max", dmax, "Scan end in delta*T2 units")
        ->capture_default_str();
    cmd_disp->add_option("--points", dpoints, "Scan points")->capture_default_str();
    cmd_disp->add_option("--gain", gain_model, "Gain model: steady | transient")
        ->check(CLI::IsMember({"steady", "transient"}))
        ->capture_default_str();
    cmd_disp->add_option("--form", ratio_form, "Ratio form: first_order | exact")
        ->check(CLI::IsMember({"first_order", "exact"}))
        ->capture_default_str();
    cmd_disp->add_option("--sense-time-s", sense_time,
                         "Sensing time for the transient gain model; 0 = T2");
    cmd_disp->add_option("--out", disp_out, "Output CSV (delta_rad_s,R,phi_rad)")
        ->required();
    cmd_disp->callback([&] {
        using namespace spinamp;
        const PhysicalConstants c = disp_sample.constants();
        const SampleSpec s = disp_sample.resolve();
        if (dpoints < 2 || !(dmax > dmin)) throw config_error("dispersive-scan: bad grid");
        DispersiveProtocol protocol;
        protocol.gain = gain_model == "steady" ? GainModel::steady : GainModel::transient;
        protocol.form =
            ratio_form == "exact" ? RatioForm::exact : RatioForm::first_order;
        protocol.sense_time = sense_time > 0.0 ? sense_time : s.t2;
        DriveField drive;
        drive.amplitude = 6e-10;
        drive.frequency = 250.0;
        std::vector<double> deltas;
        for (int i = 0; i < dpoints; ++i)
            deltas.push_back((dmin + (dmax - dmin) * i / (dpoints - 1.0)) / s.t2);
        const auto scan = dispersive_scan(s, drive, deltas, protocol, c);
        std::ofstream out(disp_out, std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + disp_out);
        out << "delta_rad_s,R,phi_rad\n";
        for (const auto& p : scan)
            out << format_g17(p.delta) << "," << format_g17(p.r) << ","
                << format_g17(p.phi) << "\n";
        double rmax = 0.0;
        for (const auto& p : scan) rmax = std::max(rmax, p.r);
        std::cout << "max_R " << format_g17(rmax) << "\n";
    });

    // ---- saturation-scan ---------------------------------------------------
    auto* cmd_sat = app.add_subcommand(
        "saturation-scan", "R versus drive amplitude from the full nonlinear dynamics");
    SampleOpts sat_sample;
    add_sample_options(cmd_sat, sat_sample);
    double sat_nu0 = 250.0, sat_record = 1.6, sat_detuning = 0.74, sat_noise_nt = 0.0,
           sat_kappa = 0.0;
    int sat_spp = 64;
    std::uint64_t sat_seed = 1;
    std::vector<double> amplitudes_nt;
    std::string sat_out;
    cmd_sat->add_option("--nu0-hz", sat_nu0, "Resonance frequency (Hz)")
        ->capture_default_str();
    cmd_sat->add_option("--amplitudes-nt", amplitudes_nt,
                        "Drive amplitudes (nT), ascending")
        ->required()
        ->delimiter(',');
    cmd_sat->add_option("--record-s", sat_record, "Record length (s)")
        ->capture_default_str();
    cmd_sat->add_option("--detuning-rad-s", sat_detuning, "Angular detuning (rad/s)")
        ->capture_default_str();
    cmd_sat->add_option("--samples-per-period", sat_spp, "Samples per drive period")
        ->capture_default_str();
    cmd_sat->add_option("--noise-rms-nt", sat_noise_nt, "Detector noise RMS (nT)")
        ->capture_default_str();
    cmd_sat->add_option("--seed", sat_seed, "Noise seed")->capture_default_str();
    cmd_sat->add_option("--kappa", sat_kappa,
                        "Dipolar readout calibration; 0 = calibrate automatically");
    cmd_sat->add_option("--out", sat_out, "Output CSV (amplitude_T,R)")->required();
    cmd_sat->callback([&] {
        using namespace spinamp;
        const PhysicalConstants c = sat_sample.constants();
        BlochParams params;
        params.sample = sat_sample.resolve();
        params.b0 = kTwoPi * sat_nu0 / params.sample.gamma;
        params.drive.frequency = sat_nu0;
        params.kappa =
            sat_kappa != 0.0 ? sat_kappa : calibrate_kappa(params.sample, params.b0, c);
        SenseProtocol protocol;
        protocol.record_seconds = sat_record;
        protocol.detuning = sat_detuning;
        protocol.samples_per_period = sat_spp;
        protocol.noise_rms = si::tesla_from_nanotesla(sat_noise_nt);
        protocol.seed = sat_seed;
        std::vector<double> amplitudes;
        for (const double nt : amplitudes_nt)
            amplitudes.push_back(si::tesla_from_nanotesla(nt));
        const auto scan = saturation_scan(params, amplitudes, protocol, c);
        std::ofstream out(sat_out, std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + sat_out);
        out << "amplitude_T,R\n";
        for (const auto& [ba, r] : scan)
            out << format_g17(ba) << "," << format_g17(r) << "\n";
        std::cout << "kappa " << format_g17(params.kappa) << "\n";
    });

    // ---- fit -----------------------------------------------------------
    auto* cmd_fit = app.add_subcommand(
        "fit", "Nonlinear least-squares fit of a named model to x,y[,sigma] CSV data");
    std::string fit_model, fit_data, fit_init, fit_out;
    int fit_max_iter = 200;
    cmd_fit->add_option("--model", fit_model,
                        "Model: buildup | flowrate | lorentzian | dispersive")
        ->required();
    cmd_fit->add_option("--data", fit_data, "Input CSV with header x,y[,sigma]")
        ->required();
    cmd_fit->add_option("--init", fit_init,
                        "Initial guess as name=value,... (default: heuristics)");
    cmd_fit->add_option("--max-iterations", fit_max_iter, "Iteration cap")
        ->capture_default_str();
    cmd_fit->add_option("--out", fit_out, "Write the fit result JSON here too");
    cmd_fit->callback([&] {
        using namespace spinamp;
        using namespace spinamp::fitting;
        const ModelKind kind = model_kind_from_name(fit_model);
        const ModelSpec model = ModelSpec::make(kind);
        const auto data = read_xy_csv(fit_data);
        Eigen::VectorXd init = initial_guess(model, data);
        for (const auto& [name, value] : parse_assignments(fit_init)) {
            const auto it = std::find(model.names.begin(), model.names.end(), name);
            if (it == model.names.end())
                throw config_error("fit: model has no parameter '" + name + "'");
            init[static_cast<Eigen::Index>(it - model.names.begin())] = value;
        }
        const FitResult res = fit(model, data, init, fit_max_iter);
        const json j = spinamp::scenario::fit_result_to_json(res, fit_model);
        std::cout << j.dump(2) << "\n";
        if (!fit_out.empty()) {
            std::ofstream out(fit_out, std::ios::binary);
            if (!out) throw io_error("cannot open for writing: " + fit_out);
            out << j.dump(2) << "\n";
        }
        if (!res.converged) throw numeric_error("fit did not converge: " + res.status);
    });

    // ---- run -----------------------------------------------------------
    auto* cmd_run = app.add_subcommand("run", "Run a scenario file (or a manifest)");
    std::string scenario_path, out_dir;
    cmd_run->add_option("scenario", scenario_path, "Scenario or manifest JSON")
        ->required();
    cmd_run->add_option("--out-dir", out_dir,
                        "Output directory (default: $SPINAMP_OUT_DIR or ./out)");
    cmd_run->callback([&] {
        std::string dir = out_dir;
        if (dir.empty()) {
            if (const char* env = std::getenv("SPINAMP_OUT_DIR")) dir = env;
        }
        if (dir.empty()) dir = "out";
        const auto artifacts = spinamp::scenario::run(scenario_path, dir);
        for (const auto& name : artifacts) std::cout << name << "\n";
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // bad flags or config are configuration errors
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        return run_app(argc, argv);
    } catch (const spinamp::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const spinamp::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 3;
    } catch (const spinamp::io_error& e) {
        std::cerr << "i/o error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
