#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinamp/bloch.hpp"
#include "spinamp/constants.hpp"
#include "spinamp/core.hpp"
#include "spinamp/errors.hpp"
#include "spinamp/fitting.hpp"
#include "spinamp/signal.hpp"
#include "spinamp/timeseries.hpp"
#include "spinamp/version.hpp"
#include "spinamp/zerofield.hpp"

// Config-driven scenario runner. A scenario is a JSON document (schema_version
// 1) naming a pipeline kind plus its parameters; running it writes CSV/JSON
// artifacts and a manifest that echoes the fully resolved configuration, so a
// manifest alone reproduces the bundle byte for byte.

namespace spinamp::scenario {

using json = nlohmann::ordered_json;

inline json parse_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open: " + path);
    try {
        json j;
        in >> j;
        return j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error(path + ": " + e.what());
    }
}

namespace detail {

[[noreturn]] inline void missing(const std::string& path) {
    throw config_error("scenario." + path + ": missing or wrong type");
}

inline double require_number(const json& j, const std::string& key,
                             const std::string& path) {
    if (!j.contains(key) || !j[key].is_number()) missing(path + "." + key);
    return j[key].get<double>();
}

inline double number_or(const json& j, const std::string& key, double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) missing(key);
    return j[key].get<double>();
}

}  // namespace detail

/// Parses the `sample` block (lab units) into an SI SampleSpec. An explicit
/// gamma_mhz_per_t wins over a nuclide reference.
inline SampleSpec parse_sample(const json& j, const PhysicalConstants& c) {
    using detail::require_number;
    if (!j.is_object()) detail::missing("sample");
    SampleSpec s;
    if (j.contains("gamma_mhz_per_t"))
        s.gamma = si::rad_s_t_from_mhz_t(j["gamma_mhz_per_t"].get<double>());
    else if (j.contains("nuclide"))
        s.gamma = c.gamma(j["nuclide"].get<std::string>());
    else
        detail::missing("sample.nuclide (or gamma_mhz_per_t)");
    s.n = si::per_m3_from_per_cm3(require_number(j, "n_per_cm3", "sample"));
    s.volume = si::m3_from_ml(require_number(j, "volume_ml", "sample"));
    s.p0 = require_number(j, "p0", "sample");
    s.t1 = require_number(j, "t1_s", "sample");
    s.t2 = require_number(j, "t2_s", "sample");
    s.xi = si::per_m3_from_per_cm3(require_number(j, "xi_per_cm3", "sample"));
    s.validate();
    return s;
}

/// Echoes a sample with its gamma resolved, so manifests are self-contained.
inline json echo_sample(const SampleSpec& s) {
    json j;
    j["gamma_mhz_per_t"] = si::mhz_t_from_rad_s_t(s.gamma);
    j["n_per_cm3"] = s.n / 1e6;
    j["volume_ml"] = s.volume * 1e6;
    j["p0"] = s.p0;
    j["t1_s"] = s.t1;
    j["t2_s"] = s.t2;
    j["xi_per_cm3"] = s.xi / 1e6;
    return j;
}

inline zerofield::SpinCluster parse_cluster(const json& j, const std::string& base_dir,
                                            const PhysicalConstants& c) {
    if (!j.is_object()) detail::missing("cluster");
    if (j.contains("file")) {
        const std::filesystem::path p = j["file"].get<std::string>();
        const auto resolved = p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
        return zerofield::load_cluster_json(resolved.string(), c);
    }
    zerofield::SpinCluster cluster;
    if (!j.contains("spins") || !j["spins"].is_array() || j["spins"].empty())
        detail::missing("cluster.spins");
    for (const auto& s : j["spins"]) {
        zerofield::Nuclide n;
        if (s.contains("nuclide")) {
            n.label = s["nuclide"].get<std::string>();
            n.gamma = c.gamma(n.label);
        } else if (s.contains("gamma_mhz_per_t")) {
            n.label = s.value("label", "spin");
            n.gamma = si::rad_s_t_from_mhz_t(s["gamma_mhz_per_t"].get<double>());
        } else {
            detail::missing("cluster.spins[].nuclide (or gamma_mhz_per_t)");
        }
        cluster.spins.push_back(n);
    }
    if (!j.contains("j_hz")) detail::missing("cluster.j_hz");
    const auto n = static_cast<Eigen::Index>(cluster.spins.size());
    cluster.j_hz = Eigen::MatrixXd::Zero(n, n);
    if (static_cast<Eigen::Index>(j["j_hz"].size()) != n) detail::missing("cluster.j_hz (n x n)");
    for (Eigen::Index r = 0; r < n; ++r) {
        const auto& row = j["j_hz"][static_cast<std::size_t>(r)];
        if (static_cast<Eigen::Index>(row.size()) != n) detail::missing("cluster.j_hz (n x n)");
        for (Eigen::Index col = 0; col < n; ++col)
            cluster.j_hz(r, col) = row[static_cast<std::size_t>(col)].get<double>();
    }
    cluster.validate();
    return cluster;
}

inline json echo_cluster(const zerofield::SpinCluster& cluster) {
    json spins = json::array();
    for (const auto& s : cluster.spins) {
        json e;
        e["label"] = s.label;
        e["gamma_mhz_per_t"] = si::mhz_t_from_rad_s_t(s.gamma);
        spins.push_back(e);
    }
    json rows = json::array();
    for (Eigen::Index r = 0; r < cluster.j_hz.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < cluster.j_hz.cols(); ++c)
            row.push_back(cluster.j_hz(r, c));
        rows.push_back(row);
    }
    json out;
    out["spins"] = spins;
    out["j_hz"] = rows;
    return out;
}

inline json fit_result_to_json(const fitting::FitResult& res, const std::string& model) {
    json j;
    j["model"] = model;
    j["params"] = json::object();
    for (const auto& [name, value] : res.params) j["params"][name] = value;
    j["stderr"] = json::object();
    for (const auto& [name, value] : res.stderrors) j["stderr"][name] = value;
    j["residual_norm"] = res.residual_norm;
    j["iterations"] = res.iterations;
    j["converged"] = res.converged;
    j["status"] = res.status;
    return j;
}

/// Collects artifact files as they are written so a failed run can remove its
/// partial outputs.
class ArtifactWriter {
  public:
    explicit ArtifactWriter(std::string out_dir) : dir_(std::move(out_dir)) {
        std::error_code ec;
        std::filesystem::create_directories(dir_, ec);
        if (ec) throw io_error("cannot create output directory: " + dir_);
    }

    std::string path_of(const std::string& name) const {
        return (std::filesystem::path(dir_) / name).string();
    }

    void write_json(const std::string& name, const json& j) {
        std::ofstream out(path_of(name), std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + path_of(name));
        out << j.dump(2) << "\n";
        if (!out) throw io_error("write failed: " + path_of(name));
        written_.push_back(name);
    }

    void write_timeseries(const std::string& name, const TimeSeries& ts,
                          const std::string& header = "t_s,value_T") {
        write_timeseries_csv(ts, path_of(name), header);
        written_.push_back(name);
    }

    /// Numeric rows, every value at 17 significant digits, LF endings.
    void write_rows(const std::string& name, const std::string& header,
                    const std::vector<std::vector<double>>& rows) {
        std::ofstream out(path_of(name), std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + path_of(name));
        out << header << "\n";
        for (const auto& row : rows) {
            for (std::size_t i = 0; i < row.size(); ++i)
                out << (i ? "," : "") << format_g17(row[i]);
            out << "\n";
        }
        if (!out) throw io_error("write failed: " + path_of(name));
        written_.push_back(name);
    }

    void write_text(const std::string& name, const std::string& content) {
        std::ofstream out(path_of(name), std::ios::binary);
        if (!out) throw io_error("cannot open for writing: " + path_of(name));
        out << content;
        written_.push_back(name);
    }

    const std::vector<std::string>& written() const { return written_; }

    void remove_all_written() {
        for (const auto& name : written_) {
            std::error_code ec;
            std::filesystem::remove(path_of(name), ec);
        }
        written_.clear();
    }

  private:
    std::string dir_;
    std::vector<std::string> written_;
};

namespace detail {

struct BlochSetup {
    BlochParams params;
    double nu0 = 0.0;
    double detuning = 0.0;  // rad/s
    int samples_per_period = 64;
    double noise_rms = 0.0;
    std::uint64_t seed = 0;
};

inline BlochSetup parse_bloch_setup(const json& scenario, const PhysicalConstants& c) {
    BlochSetup setup;
    setup.params.sample = parse_sample(scenario.contains("sample") ? scenario["sample"] : json{}, c);
    if (!scenario.contains("bias")) missing("bias");
    setup.nu0 = require_number(scenario["bias"], "nu0_hz", "bias");
    if (setup.nu0 <= 0.0) throw config_error("scenario.bias.nu0_hz: must be positive");
    setup.params.b0 = kTwoPi * setup.nu0 / setup.params.sample.gamma;

    if (!scenario.contains("drive")) missing("drive");
    const json& drive = scenario["drive"];
    setup.detuning = number_or(drive, "detuning_rad_s", 0.0);
    setup.params.drive.amplitude =
        si::tesla_from_nanotesla(require_number(drive, "amplitude_nt", "drive"));
    setup.params.drive.frequency = setup.nu0 + setup.detuning / kTwoPi;
    setup.params.drive.phase = number_or(drive, "phase_rad", 0.0);

    const json protocol = scenario.contains("protocol") ? scenario["protocol"] : json::object();
    setup.samples_per_period =
        static_cast<int>(number_or(protocol, "samples_per_period", 64.0));
    if (setup.samples_per_period < 50)
        throw config_error("scenario.protocol.samples_per_period: need >= 50");

    if (scenario.contains("noise")) {
        setup.noise_rms = si::tesla_from_nanotesla(
            number_or(scenario["noise"], "rms_nt", 0.0));
        if (scenario["noise"].contains("seed"))
            setup.seed = scenario["noise"]["seed"].get<std::uint64_t>();
        if (setup.noise_rms > 0.0 && !scenario["noise"].contains("seed"))
            throw config_error("scenario.noise.seed: required when rms_nt > 0");
    }
    setup.params.kappa = number_or(scenario, "kappa", 0.0);
    if (setup.params.kappa == 0.0)
        setup.params.kappa = calibrate_kappa(setup.params.sample, setup.params.b0, c);
    return setup;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// pipelines

/// Transient response: dipolar field record plus its envelope against the
/// closed-form gain curve.
inline void run_bloch_transient(const json& scenario, ArtifactWriter& out,
                                const PhysicalConstants& c) {
    detail::BlochSetup setup = detail::parse_bloch_setup(scenario, c);
    const json protocol = scenario.contains("protocol") ? scenario["protocol"] : json::object();
    const double duration = detail::require_number(protocol, "duration_s", "protocol");

    const double dt = 1.0 / (setup.samples_per_period * setup.params.drive.frequency);
    const Trajectory traj = evolve(setup.params, duration, dt, c);
    const TimeSeries bs = dipolar_field(traj, setup.params, c);
    out.write_timeseries("dipolar_timeseries.csv", bs);

    const double omega = kTwoPi * setup.params.drive.frequency;
    const double window = 1.0 / setup.params.drive.frequency;
    const double scale = setup.params.kappa * 2.0 * setup.params.sample.xi * c.mu0 *
                         setup.params.sample.volume;
    std::vector<std::vector<double>> env_rows, closed_rows;
    double peak_t = 0.0, peak_bs = 0.0;
    for (double t = window; t <= duration - window; t += 0.01) {
        const double env_bs = scale * envelope_at(traj, omega, t, 1);
        env_rows.push_back({t, env_bs});
        const double g = std::abs(amplification_transient(
            setup.params.sample, t, Detuning{setup.detuning, setup.nu0}, c));
        closed_rows.push_back({t, g * setup.params.drive.amplitude});
        if (env_bs > peak_bs) {
            peak_bs = env_bs;
            peak_t = t;
        }
    }
    out.write_rows("envelope.csv", "t_s,value_T", env_rows);
    out.write_rows("closed_form.csv", "t_s,value_T", closed_rows);

    const double t2 = setup.params.sample.t2;
    json summary;
    summary["kappa"] = setup.params.kappa;
    summary["peak_time_s"] = peak_t;
    summary["peak_bs_t"] = peak_bs;
    summary["g_sim_at_t2"] = simulated_gain(traj, setup.params, t2, 1, c);
    summary["g_closed_form_at_t2"] = amplification_transient(
        setup.params.sample, t2, Detuning{setup.detuning, setup.nu0}, c);
    out.write_json("summary.json", summary);
}

/// One with/without record pair: the measured amplitude ratio and its phasor
/// decomposition.
inline void run_ratio_record(const json& scenario, ArtifactWriter& out,
                             const PhysicalConstants& c) {
    detail::BlochSetup setup = detail::parse_bloch_setup(scenario, c);
    const json protocol = scenario.contains("protocol") ? scenario["protocol"] : json::object();
    const double record_request = detail::require_number(protocol, "record_seconds", "protocol");

    const double nu_a = setup.params.drive.frequency;
    const auto periods = static_cast<std::size_t>(std::llround(record_request * nu_a));
    if (periods < 10) throw config_error("scenario.protocol.record_seconds: need >= 10 drive periods");
    const std::size_t n = periods * static_cast<std::size_t>(setup.samples_per_period);
    const double dt = 1.0 / (setup.samples_per_period * nu_a);

    const Trajectory traj = evolve(setup.params, static_cast<double>(n) * dt, dt, c);
    TimeSeries dipolar = dipolar_field(traj, setup.params, c);
    dipolar.samples.resize(n);
    const TimeSeries drive_ts = sample_drive(setup.params.drive, dipolar.rate, n);
    TimeSeries zeros = drive_ts;
    std::fill(zeros.samples.begin(), zeros.samples.end(), 0.0);

    const TimeSeries with_spins =
        synthesize(drive_ts, dipolar, setup.noise_rms, splitmix64(setup.seed ^ 1));
    const TimeSeries without_spins =
        synthesize(drive_ts, zeros, setup.noise_rms, splitmix64(setup.seed ^ 2));
    out.write_timeseries("with_spins.csv", with_spins);
    out.write_timeseries("without_spins.csv", without_spins);

    const double r = ratio(with_spins, without_spins, nu_a);
    const PhasorPair pair = phasor_pair(with_spins, without_spins, nu_a);
    json summary;
    summary["kappa"] = setup.params.kappa;
    summary["record_seconds"] = static_cast<double>(periods) / nu_a;
    summary["detuning_rad_s"] = setup.detuning;
    summary["R"] = r;
    summary["amp_with_t"] = extract(with_spins, nu_a).amplitude;
    summary["amp_without_t"] = extract(without_spins, nu_a).amplitude;
    summary["g_extracted"] = pair.amp_s / pair.amp_a;
    summary["phi_rad"] = pair.phi;
    summary["cos_phi"] = std::cos(pair.phi);
    out.write_json("summary.json", summary);
}

/// R versus drive amplitude at fixed (record, detuning).
inline void run_saturation_scan(const json& scenario, ArtifactWriter& out,
                                const PhysicalConstants& c) {
    detail::BlochSetup setup = detail::parse_bloch_setup(scenario, c);
    const json protocol = scenario.contains("protocol") ? scenario["protocol"] : json::object();
    SenseProtocol sense;
    sense.record_seconds = detail::require_number(protocol, "record_seconds", "protocol");
    sense.detuning = setup.detuning;
    sense.samples_per_period = setup.samples_per_period;
    sense.noise_rms = setup.noise_rms;
    sense.seed = setup.seed;

    if (!scenario.contains("amplitudes_nt") || !scenario["amplitudes_nt"].is_array())
        detail::missing("amplitudes_nt");
    std::vector<double> amplitudes;
    for (const auto& v : scenario["amplitudes_nt"])
        amplitudes.push_back(si::tesla_from_nanotesla(v.get<double>()));

    const auto scan = saturation_scan(setup.params, amplitudes, sense, c);
    std::vector<std::vector<double>> rows;
    for (const auto& [ba, r] : scan) rows.push_back({ba, r});
    out.write_rows("saturation.csv", "amplitude_T,R", rows);

    json summary;
    summary["kappa"] = setup.params.kappa;
    summary["r_small_signal"] = scan.front().second;
    double knee = 0.0;
    const double gap0 = scan.front().second - 1.0;
    for (const auto& [ba, r] : scan)
        if (r - 1.0 < 0.95 * gap0) {
            knee = ba;
            break;
        }
    summary["knee_amplitude_t"] = knee;
    out.write_json("summary.json", summary);
}

/// R(delta), phi(delta) from the configured gain model.
inline void run_dispersive_scan(const json& scenario, ArtifactWriter& out,
                                const PhysicalConstants& c) {
    const SampleSpec sample = parse_sample(
        scenario.contains("sample") ? scenario["sample"] : json{}, c);
    if (!scenario.contains("scan")) detail::missing("scan");
    const json& scan_cfg = scenario["scan"];
    const double lo = detail::require_number(scan_cfg, "delta_t2_min", "scan");
    const double hi = detail::require_number(scan_cfg, "delta_t2_max", "scan");
    const auto points = static_cast<int>(detail::require_number(scan_cfg, "points", "scan"));
    if (points < 2 || !(hi > lo)) throw config_error("scenario.scan: bad grid");

    DispersiveProtocol protocol;
    const std::string gain = scan_cfg.value("gain_model", "steady");
    const std::string form = scan_cfg.value("ratio_form", "first_order");
    protocol.form = form == "exact" ? RatioForm::exact : RatioForm::first_order;
    if (form != "exact" && form != "first_order")
        throw config_error("scenario.scan.ratio_form: 'first_order' or 'exact'");
    protocol.sense_time = detail::number_or(scan_cfg, "sense_time_s", sample.t2);

    DriveField drive;
    drive.amplitude = scenario.contains("drive")
                          ? si::tesla_from_nanotesla(detail::number_or(
                                scenario["drive"], "amplitude_nt", 0.6))
                          : 6e-10;
    drive.frequency = 250.0;

    if (gain == "bloch") {
        // time-domain gain: one full evolution per detuning
        detail::BlochSetup setup = detail::parse_bloch_setup(scenario, c);
        const double sense_time = protocol.sense_time;
        protocol.gain_fn = [setup, sense_time, &c](double delta) {
            BlochParams p = setup.params;
            p.drive.frequency = setup.nu0 + delta / kTwoPi;
            const double dt = 1.0 / (setup.samples_per_period * p.drive.frequency);
            const Trajectory traj =
                evolve(p, sense_time + 2.0 / p.drive.frequency, dt, c);
            return simulated_gain(traj, p, sense_time, 1, c);
        };
    } else if (gain == "transient") {
        protocol.gain = GainModel::transient;
    } else if (gain == "steady") {
        protocol.gain = GainModel::steady;
    } else {
        throw config_error("scenario.scan.gain_model: 'steady', 'transient' or 'bloch'");
    }

    std::vector<double> deltas;
    deltas.reserve(static_cast<std::size_t>(points));
    for (int i = 0; i < points; ++i)
        deltas.push_back((lo + (hi - lo) * i / (points - 1.0)) / sample.t2);

    const auto scan = dispersive_scan(sample, drive, deltas, protocol, c);
    std::vector<std::vector<double>> rows;
    double rmax = -1e300, rmin = 1e300, at_max = 0.0, at_min = 0.0;
    for (const auto& p : scan) {
        rows.push_back({p.delta, p.r, p.phi});
        if (p.r > rmax) {
            rmax = p.r;
            at_max = p.delta;
        }
        if (p.r < rmin) {
            rmin = p.r;
            at_min = p.delta;
        }
    }
    out.write_rows("dispersive.csv", "delta_rad_s,R,phi_rad", rows);

    json summary;
    summary["g_ss"] = amplification_steady(sample, c);
    summary["max_R"] = rmax;
    summary["min_R"] = rmin;
    summary["delta_at_max_rad_s"] = at_max;
    summary["delta_at_min_rad_s"] = at_min;
    out.write_json("summary.json", summary);
}

/// Zero-field eigen-lines and Lorentzian spectrum for a cluster.
inline void run_zf_spectrum(const json& scenario, ArtifactWriter& out,
                            const std::string& base_dir, const PhysicalConstants& c) {
    using namespace zerofield;
    if (!scenario.contains("cluster")) detail::missing("cluster");
    const SpinCluster cluster = parse_cluster(scenario["cluster"], base_dir, c);

    const json rho_cfg = scenario.contains("rho0") ? scenario["rho0"] : json::object();
    Op rho0;
    std::size_t polarized = 0;
    if (rho_cfg.contains("file")) {
        const std::filesystem::path p = rho_cfg["file"].get<std::string>();
        const auto resolved = p.is_absolute() ? p : std::filesystem::path(base_dir) / p;
        rho0 = load_operator_json(resolved.string());
    } else {
        polarized = static_cast<std::size_t>(detail::number_or(rho_cfg, "polarized_spin", [&] {
            const auto hetero = cluster.hetero_index();
            return hetero ? static_cast<double>(*hetero) : 0.0;
        }()));
        rho0 = zeeman_rho0(cluster, polarized, detail::number_or(rho_cfg, "epsilon", 1.0));
    }

    const EigenSystem sys = eigensystem(build_hamiltonian(cluster), cluster);
    const TransitionTable table =
        transitions(sys, rho0, detect_operator(cluster, 'z'), cluster.reference_j());

    std::string lines_csv = "freq_hz,amplitude,manifold,from,to\n";
    for (const auto& line : table.lines)
        lines_csv += format_g17(line.freq_hz) + "," +
                     format_g17(std::real(line.amplitude)) + "," +
                     manifold_name(line.tag) + "," + line.from + "," + line.to + "\n";
    out.write_text("lines.csv", lines_csv);

    if (!scenario.contains("grid")) detail::missing("grid");
    const json& grid_cfg = scenario["grid"];
    const double gmin = detail::require_number(grid_cfg, "min_hz", "grid");
    const double gmax = detail::require_number(grid_cfg, "max_hz", "grid");
    const auto points = static_cast<int>(detail::require_number(grid_cfg, "points", "grid"));
    if (points < 2 || !(gmax > gmin)) throw config_error("scenario.grid: bad grid");
    std::vector<double> grid;
    for (int i = 0; i < points; ++i)
        grid.push_back(gmin + (gmax - gmin) * i / (points - 1.0));

    std::map<Manifold, double> t2_map;
    if (!scenario.contains("manifold_t2_s")) detail::missing("manifold_t2_s");
    const json& t2_cfg = scenario["manifold_t2_s"];
    if (t2_cfg.contains("J")) t2_map[Manifold::J] = t2_cfg["J"].get<double>();
    if (t2_cfg.contains("2J")) t2_map[Manifold::TwoJ] = t2_cfg["2J"].get<double>();
    if (t2_cfg.contains("other")) t2_map[Manifold::Other] = t2_cfg["other"].get<double>();

    const auto spec = spectrum(table, t2_map, grid);
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < grid.size(); ++i) rows.push_back({grid[i], spec[i]});
    out.write_rows("spectrum.csv", "freq_hz,amplitude", rows);

    json summary;
    summary["reference_j_hz"] = cluster.reference_j();
    json lines = json::array();
    for (const auto& line : table.lines) {
        json l;
        l["freq_hz"] = line.freq_hz;
        l["amplitude"] = std::real(line.amplitude);
        l["manifold"] = manifold_name(line.tag);
        lines.push_back(l);
    }
    summary["lines"] = lines;
    json energies = json::array();
    for (Eigen::Index i = 0; i < sys.energies.size(); ++i) {
        json e;
        e["energy_hz"] = sys.energies[i] / kTwoPi;
        e["label"] = sys.labels[static_cast<std::size_t>(i)].to_string();
        energies.push_back(e);
    }
    summary["levels"] = energies;
    out.write_json("summary.json", summary);
}

/// Effective two-level reduction per manifold plus its dispersive curves.
inline void run_zf_effective(const json& scenario, ArtifactWriter& out,
                             const std::string& base_dir, const PhysicalConstants& c) {
    using namespace zerofield;
    if (!scenario.contains("cluster")) detail::missing("cluster");
    const SpinCluster cluster = parse_cluster(scenario["cluster"], base_dir, c);
    const SampleSpec env = parse_sample(
        scenario.contains("sample") ? scenario["sample"] : json{}, c);
    if (!scenario.contains("manifold_t2_s")) detail::missing("manifold_t2_s");
    const json& t2_cfg = scenario["manifold_t2_s"];

    json summary;
    summary["reference_j_hz"] = cluster.reference_j();
    const json scan_cfg = scenario.contains("scan") ? scenario["scan"] : json::object();
    const double span = detail::number_or(scan_cfg, "delta_t2_span", 5.0);
    const auto points = static_cast<int>(detail::number_or(scan_cfg, "points", 201.0));

    const std::vector<std::pair<Manifold, std::string>> manifolds = {
        {Manifold::J, "J"}, {Manifold::TwoJ, "2J"}};
    for (const auto& [manifold, name] : manifolds) {
        if (!t2_cfg.contains(name)) continue;
        const double t2 = t2_cfg[name].get<double>();
        const SampleSpec eff = effective_two_level(cluster, manifold, env, t2);
        const double line_hz =
            (manifold == Manifold::J ? 1.0 : 2.0) * cluster.reference_j();
        const double g_peak =
            amplification_transient(eff, eff.t2, Detuning{0.0, line_hz}, c);

        json m;
        m["manifold_t2_s"] = t2;
        m["line_hz"] = line_hz;
        m["gamma_eff_mhz_per_t"] = si::mhz_t_from_rad_s_t(eff.gamma);
        m["polarization_projection"] = eff.p0 / env.p0;
        m["g_at_t2"] = g_peak;
        m["g_steady"] = amplification_steady(eff, c);
        summary[name == "J" ? "manifold_j" : "manifold_2j"] = m;

        DriveField drive;
        drive.amplitude = 6e-10;
        drive.frequency = line_hz;
        DispersiveProtocol protocol;  // steady gain, first-order ratio
        std::vector<double> deltas;
        for (int i = 0; i < points; ++i)
            deltas.push_back((-span + 2.0 * span * i / (points - 1.0)) / eff.t2);
        const auto scan = dispersive_scan(eff, drive, deltas, protocol, c);
        std::vector<std::vector<double>> rows;
        for (const auto& p : scan) rows.push_back({p.delta, p.r, p.phi});
        out.write_rows(name == "J" ? "ratio_j.csv" : "ratio_2j.csv",
                       "delta_rad_s,R,phi_rad", rows);
    }
    out.write_json("effective.json", summary);
}

/// Generates synthetic data from a model's truth parameters, fits it back,
/// and records both.
inline void run_fit_synthetic(const json& scenario, ArtifactWriter& out) {
    using namespace fitting;
    if (!scenario.contains("fit")) detail::missing("fit");
    const json& cfg = scenario["fit"];
    const std::string model_name_str = cfg.value("model", "");
    const ModelKind kind = model_kind_from_name(model_name_str);
    const ModelSpec model = ModelSpec::make(kind);

    if (!cfg.contains("truth")) detail::missing("fit.truth");
    Eigen::VectorXd truth(static_cast<Eigen::Index>(model.size()));
    for (std::size_t i = 0; i < model.size(); ++i) {
        if (!cfg["truth"].contains(model.names[i]))
            detail::missing("fit.truth." + model.names[i]);
        truth[static_cast<Eigen::Index>(i)] = cfg["truth"][model.names[i]].get<double>();
    }
    const double xmin = detail::require_number(cfg, "x_min", "fit");
    const double xmax = detail::require_number(cfg, "x_max", "fit");
    const auto points = static_cast<int>(detail::require_number(cfg, "points", "fit"));
    if (points < 4 || !(xmax > xmin)) throw config_error("scenario.fit: bad design");
    const double noise_fraction = detail::number_or(cfg, "noise_fraction_of_max", 0.0);
    std::uint64_t seed = 0;
    if (noise_fraction > 0.0) {
        if (!cfg.contains("seed"))
            throw config_error("scenario.fit.seed: required when noise is on");
        seed = cfg["seed"].get<std::uint64_t>();
    }

    std::vector<DataPoint> data;
    double ymax = 0.0;
    for (int i = 0; i < points; ++i) {
        DataPoint d;
        d.x = xmin + (xmax - xmin) * i / (points - 1.0);
        d.y = model.eval(d.x, truth);
        ymax = std::max(ymax, std::abs(d.y));
        data.push_back(d);
    }
    if (noise_fraction > 0.0) {
        const GaussianStream noise(seed);
        for (std::size_t i = 0; i < data.size(); ++i) {
            data[i].y += noise_fraction * ymax * noise.at(i);
            data[i].sigma = noise_fraction * ymax;
        }
    }
    std::vector<std::vector<double>> rows;
    for (const DataPoint& d : data) rows.push_back({d.x, d.y, d.sigma});
    out.write_rows("data.csv", "x,y,sigma", rows);

    const FitResult res = fit(model, data, initial_guess(model, data));
    json fit_json = fit_result_to_json(res, model_name_str);
    fit_json["truth"] = json::object();
    for (std::size_t i = 0; i < model.size(); ++i)
        fit_json["truth"][model.names[i]] = truth[static_cast<Eigen::Index>(i)];
    out.write_json("fit.json", fit_json);
}

// ---------------------------------------------------------------------------

/// Runs a scenario (or a manifest, which embeds one) and writes its artifact
/// bundle plus manifest.json into out_dir. Partial outputs are removed on
/// failure. Returns the artifact names.
inline std::vector<std::string> run(const std::string& scenario_path,
                                    const std::string& out_dir,
                                    const PhysicalConstants& c = default_constants()) {
    json doc = parse_json_file(scenario_path);
    if (doc.contains("scenario")) doc = doc["scenario"];  // manifest re-run
    if (!doc.contains("schema_version") || doc["schema_version"].get<int>() != 1)
        throw config_error("scenario.schema_version: expected 1");
    if (!doc.contains("kind") || !doc["kind"].is_string())
        detail::missing("kind");
    const std::string kind = doc["kind"].get<std::string>();
    const std::string base_dir =
        std::filesystem::path(scenario_path).parent_path().string();

    ArtifactWriter out(out_dir);
    try {
        if (kind == "bloch_transient") {
            run_bloch_transient(doc, out, c);
        } else if (kind == "ratio_record") {
            run_ratio_record(doc, out, c);
        } else if (kind == "saturation_scan") {
            run_saturation_scan(doc, out, c);
        } else if (kind == "dispersive_scan") {
            run_dispersive_scan(doc, out, c);
        } else if (kind == "zf_spectrum") {
            run_zf_spectrum(doc, out, base_dir, c);
        } else if (kind == "zf_effective") {
            run_zf_effective(doc, out, base_dir, c);
        } else if (kind == "fit_synthetic") {
            run_fit_synthetic(doc, out);
        } else {
            throw config_error("scenario.kind: unknown kind '" + kind + "'");
        }

        // resolve external references so the manifest alone reproduces the run
        json resolved = doc;
        if (doc.contains("sample"))
            resolved["sample"] = echo_sample(parse_sample(doc["sample"], c));
        if (doc.contains("cluster"))
            resolved["cluster"] = echo_cluster(parse_cluster(doc["cluster"], base_dir, c));

        json manifest;
        manifest["schema_version"] = 1;
        manifest["toolkit_version"] = kVersion;
        manifest["scenario"] = resolved;
        json artifacts = json::array();
        for (const auto& name : out.written()) artifacts.push_back(name);
        manifest["artifacts"] = artifacts;
        out.write_json("manifest.json", manifest);
    } catch (...) {
        out.remove_all_written();
        throw;
    }
    return out.written();
}

}  // namespace spinamp::scenario
