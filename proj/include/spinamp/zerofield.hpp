#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "spinamp/constants.hpp"
#include "spinamp/core.hpp"
#include "spinamp/errors.hpp"

// Exact zero-field dynamics of small J-coupled spin-1/2 clusters.
//
// At zero field the Hamiltonian is purely the scalar coupling
// H/hbar = 2 pi sum_{i<j} J_ij (Ii . Ij) (rad/s), which commutes with the
// total angular momentum F^2, its projection F_z, and — for an XAn cluster —
// the total spin K^2 of the equivalent subset. Eigenstates are therefore
// labeled (F, mF, K); transition tables, Lorentzian spectra and an effective
// two-level reduction per manifold are derived from the exact
// diagonalization.

namespace spinamp::zerofield {

using Op = Eigen::MatrixXcd;

struct Nuclide {
    std::string label;
    double gamma = 0.0;  // rad s^-1 T^-1
};

/// A small J-coupled spin-1/2 cluster. Basis: tensor products of single-spin
/// states in listing order, spin 0 most significant, |up> first.
struct SpinCluster {
    std::vector<Nuclide> spins;
    Eigen::MatrixXd j_hz;  // symmetric coupling matrix, Hz, zero diagonal

    std::size_t size() const { return spins.size(); }
    std::size_t dim() const { return std::size_t{1} << spins.size(); }

    void validate() const {
        if (spins.empty()) throw config_error("SpinCluster: no spins");
        if (spins.size() > 8)
            throw config_error("SpinCluster: dimension overflow beyond 8 spins");
        const auto n = static_cast<Eigen::Index>(spins.size());
        if (j_hz.rows() != n || j_hz.cols() != n)
            throw config_error("SpinCluster: J matrix must be n x n");
        const double scale = std::max(1.0, j_hz.cwiseAbs().maxCoeff());
        for (Eigen::Index i = 0; i < n; ++i) {
            if (j_hz(i, i) != 0.0)
                throw config_error("SpinCluster: J diagonal must be zero");
            for (Eigen::Index k = 0; k < n; ++k) {
                if (!std::isfinite(j_hz(i, k)))
                    throw config_error("SpinCluster: J entries must be finite");
                if (std::abs(j_hz(i, k) - j_hz(k, i)) > 1e-15 * scale)
                    throw config_error("SpinCluster: J matrix must be symmetric");
            }
        }
        for (const Nuclide& s : spins)
            if (!std::isfinite(s.gamma) || s.gamma == 0.0)
                throw config_error("SpinCluster: gamma must be finite and nonzero");
    }

    /// Largest |J_ij|; the reference for manifold tagging. 0 if uncoupled.
    double reference_j() const {
        double j = 0.0;
        for (Eigen::Index i = 0; i < j_hz.rows(); ++i)
            for (Eigen::Index k = i + 1; k < j_hz.cols(); ++k)
                j = std::max(j, std::abs(j_hz(i, k)));
        return j;
    }

    /// Indices sharing the majority gyromagnetic ratio (the "An" subset of an
    /// XAn cluster). Ties are resolved toward later-listed spins, so the
    /// conventional X-first ordering puts the heteronucleus in the complement.
    std::vector<std::size_t> equivalent_subset() const {
        std::vector<std::size_t> best;
        for (std::size_t i = 0; i < spins.size(); ++i) {
            std::vector<std::size_t> group;
            for (std::size_t k = 0; k < spins.size(); ++k)
                if (std::abs(spins[k].gamma - spins[i].gamma) <=
                    1e-12 * std::abs(spins[i].gamma))
                    group.push_back(k);
            if (group.size() >= best.size()) best = group;
        }
        return best;
    }

    /// The single spin outside the equivalent subset, when unique.
    std::optional<std::size_t> hetero_index() const {
        const auto subset = equivalent_subset();
        if (subset.size() + 1 != spins.size()) return std::nullopt;
        for (std::size_t i = 0; i < spins.size(); ++i)
            if (std::find(subset.begin(), subset.end(), i) == subset.end()) return i;
        return std::nullopt;
    }

    /// XAn cluster: one X spin coupled with strength j_hz to n equivalent A
    /// spins (A-A couplings zero).
    static SpinCluster xan(int n_equivalent, double j, const Nuclide& x,
                           const Nuclide& a) {
        if (n_equivalent < 1) throw config_error("xan: need at least one A spin");
        SpinCluster c;
        c.spins.push_back(x);
        for (int i = 0; i < n_equivalent; ++i) c.spins.push_back(a);
        const auto n = static_cast<Eigen::Index>(c.spins.size());
        c.j_hz = Eigen::MatrixXd::Zero(n, n);
        for (Eigen::Index i = 1; i < n; ++i) c.j_hz(0, i) = c.j_hz(i, 0) = j;
        c.validate();
        return c;
    }

    /// The 15N-acetonitrile cluster: 15N coupled to three equivalent protons.
    static SpinCluster nh3(double j = -1.688,
                           const PhysicalConstants& c = default_constants()) {
        return xan(3, j, Nuclide{"15N", c.gamma("15N")}, Nuclide{"1H", c.gamma("1H")});
    }
};

inline Op kron(const Op& a, const Op& b) {
    Op out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index k = 0; k < a.cols(); ++k)
            out.block(i * b.rows(), k * b.cols(), b.rows(), b.cols()) = a(i, k) * b;
    return out;
}

inline Op single_spin_half(char axis) {
    Op m(2, 2);
    const std::complex<double> I{0.0, 1.0};
    switch (axis) {
        case 'x': m << 0.0, 0.5, 0.5, 0.0; break;
        case 'y': m << 0.0, -0.5 * I, 0.5 * I, 0.0; break;
        case 'z': m << 0.5, 0.0, 0.0, -0.5; break;
        default: throw config_error("spin axis must be x, y or z");
    }
    return m;
}

/// I_{which,axis} embedded in the full tensor-product space.
inline Op spin_operator(std::size_t n_spins, std::size_t which, char axis) {
    if (which >= n_spins) throw config_error("spin_operator: index out of range");
    Op out = Op::Identity(1, 1);
    for (std::size_t q = 0; q < n_spins; ++q)
        out = kron(out, q == which ? single_spin_half(axis)
                                   : Op::Identity(2, 2));
    return out;
}

inline bool is_hermitian(const Op& a, double tol_rel = 1e-12) {
    const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
    return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol_rel * scale;
}

/// H/hbar = 2 pi sum_{i<j} J_ij (Ix Ix + Iy Iy + Iz Iz), rad/s.
inline Op build_hamiltonian(const SpinCluster& cluster) {
    cluster.validate();
    const std::size_t n = cluster.size();
    Op h = Op::Zero(cluster.dim(), cluster.dim());
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = i + 1; k < n; ++k) {
            const double j = cluster.j_hz(static_cast<Eigen::Index>(i),
                                          static_cast<Eigen::Index>(k));
            if (j == 0.0) continue;
            for (const char axis : {'x', 'y', 'z'})
                h += kTwoPi * j * spin_operator(n, i, axis) * spin_operator(n, k, axis);
        }
    }
    return h;
}

/// Total spin squared over a subset of spins: (sum_i I_i)^2.
inline Op total_spin_squared(std::size_t n_spins, const std::vector<std::size_t>& subset) {
    Op out = Op::Zero(std::size_t{1} << n_spins, std::size_t{1} << n_spins);
    for (const char axis : {'x', 'y', 'z'}) {
        Op tot = Op::Zero(out.rows(), out.cols());
        for (const std::size_t q : subset) tot += spin_operator(n_spins, q, axis);
        out += tot * tot;
    }
    return out;
}

inline Op total_spin_component(std::size_t n_spins, char axis) {
    Op out = Op::Zero(std::size_t{1} << n_spins, std::size_t{1} << n_spins);
    for (std::size_t q = 0; q < n_spins; ++q) out += spin_operator(n_spins, q, axis);
    return out;
}

/// Detector observable: gyromagnetic-weighted total magnetization along the
/// given axis, sum_i gamma_i I_{i,axis}.
inline Op detect_operator(const SpinCluster& cluster, char axis = 'z') {
    Op out = Op::Zero(cluster.dim(), cluster.dim());
    for (std::size_t q = 0; q < cluster.size(); ++q)
        out += cluster.spins[q].gamma * spin_operator(cluster.size(), q, axis);
    return out;
}

/// Default initial state: pure Zeeman order on one spin,
/// rho0 = (1/dim)(1 + eps * 2 I_{index,z}).
inline Op zeeman_rho0(const SpinCluster& cluster, std::size_t index, double eps) {
    if (!std::isfinite(eps) || std::abs(eps) > 1.0)
        throw config_error("zeeman_rho0: eps must lie in [-1, 1]");
    const double dim = static_cast<double>(cluster.dim());
    return (Op::Identity(cluster.dim(), cluster.dim()) +
            2.0 * eps * spin_operator(cluster.size(), index, 'z')) /
           dim;
}

/// Quantum-number labels for one eigenstate; unresolved entries keep issue text.
struct StateLabel {
    double f = -1.0;
    double mf = 0.0;
    double k = -1.0;
    bool f_resolved = false;
    bool k_resolved = false;
    std::string issue;

    std::string to_string() const;
};

inline std::string format_half_integer(double v) {
    const long twice = std::lround(2.0 * v);
    if (twice % 2 == 0) return std::to_string(twice / 2);
    return std::to_string(twice) + "/2";
}

inline std::string StateLabel::to_string() const {
    if (!f_resolved) return "unlabeled";
    std::string s = "F=" + format_half_integer(f) + " mF=" + format_half_integer(mf);
    if (k_resolved) s += " K=" + format_half_integer(k);
    return s;
}

struct EigenSystem {
    Eigen::VectorXd energies;           // rad/s, ascending
    Op states;                          // columns are eigenvectors
    std::vector<StateLabel> labels;

    std::size_t dim() const { return static_cast<std::size_t>(energies.size()); }

    /// Groups of indices with numerically equal energy.
    std::vector<std::vector<std::size_t>> degenerate_groups(double tol) const {
        std::vector<std::vector<std::size_t>> groups;
        for (std::size_t i = 0; i < dim(); ++i) {
            if (groups.empty() ||
                energies[static_cast<Eigen::Index>(i)] -
                        energies[static_cast<Eigen::Index>(groups.back().front())] > tol)
                groups.emplace_back();
            groups.back().push_back(i);
        }
        return groups;
    }
};

namespace detail {

/// Rotates eigenvector groups to diagonalize `op` inside each degenerate
/// subspace, then splits the groups by the new eigenvalues.
inline void refine_groups(Op& v, std::vector<std::vector<std::size_t>>& groups,
                          const Op& op, double split_tol) {
    std::vector<std::vector<std::size_t>> next;
    for (const auto& g : groups) {
        if (g.size() == 1) {
            next.push_back(g);
            continue;
        }
        Op vg(v.rows(), g.size());
        for (std::size_t c = 0; c < g.size(); ++c)
            vg.col(static_cast<Eigen::Index>(c)) =
                v.col(static_cast<Eigen::Index>(g[c]));
        const Op small = vg.adjoint() * op * vg;
        Eigen::SelfAdjointEigenSolver<Op> es(small);
        vg = vg * es.eigenvectors();
        for (std::size_t c = 0; c < g.size(); ++c)
            v.col(static_cast<Eigen::Index>(g[c])) =
                vg.col(static_cast<Eigen::Index>(c));
        // split by the op eigenvalue
        std::vector<std::size_t> run{g[0]};
        for (std::size_t c = 1; c <= g.size(); ++c) {
            if (c < g.size() &&
                es.eigenvalues()[static_cast<Eigen::Index>(c)] -
                        es.eigenvalues()[static_cast<Eigen::Index>(c - run.size())] <=
                    split_tol) {
                run.push_back(g[c]);
            } else {
                next.push_back(run);
                if (c < g.size()) run = {g[c]};
            }
        }
    }
    groups = std::move(next);
}

inline double nearest_half_integer(double v) { return std::lround(2.0 * v) / 2.0; }

/// Solves q(q+1) = lambda for q >= 0.
inline double quantum_number_from_casimir(double lambda) {
    return 0.5 * (-1.0 + std::sqrt(std::max(0.0, 1.0 + 4.0 * lambda)));
}

}  // namespace detail

/// Full dense Hermitian diagonalization with degenerate subspaces post-rotated
/// to simultaneously diagonalize F^2, F_z and (when the cluster has an
/// equivalent subset) K^2; assigns (F, mF, K) labels per state. Label failures
/// are reported in the label's issue field, not fatally.
inline EigenSystem eigensystem(const Op& h, const SpinCluster& cluster) {
    cluster.validate();
    if (h.rows() != static_cast<Eigen::Index>(cluster.dim()) || h.rows() != h.cols())
        throw config_error("eigensystem: H dimension mismatch");
    if (!is_hermitian(h)) throw config_error("eigensystem: H must be Hermitian");

    Eigen::SelfAdjointEigenSolver<Op> es(h);
    EigenSystem sys;
    sys.energies = es.eigenvalues();
    sys.states = es.eigenvectors();

    const double scale = std::max(1.0, sys.energies.cwiseAbs().maxCoeff());
    const double tol_e = 1e-11 * scale;
    auto groups = sys.degenerate_groups(tol_e);

    const std::size_t n = cluster.size();
    const Op f2 = total_spin_squared(n, [&] {
        std::vector<std::size_t> all(n);
        for (std::size_t i = 0; i < n; ++i) all[i] = i;
        return all;
    }());
    const Op fz = total_spin_component(n, 'z');
    detail::refine_groups(sys.states, groups, f2, 1e-6);
    detail::refine_groups(sys.states, groups, fz, 1e-6);

    const auto subset = cluster.equivalent_subset();
    const bool with_k = subset.size() >= 1 && subset.size() < n;
    Op k2;
    if (with_k) {
        k2 = total_spin_squared(n, subset);
        detail::refine_groups(sys.states, groups, k2, 1e-6);
    }

    sys.labels.resize(sys.dim());
    for (std::size_t i = 0; i < sys.dim(); ++i) {
        const auto col = sys.states.col(static_cast<Eigen::Index>(i));
        StateLabel& lab = sys.labels[i];
        const double f2_val = std::real((col.adjoint() * f2 * col)(0, 0));
        const double fz_val = std::real((col.adjoint() * fz * col)(0, 0));
        const double f2_res = (f2 * col - f2_val * col).norm();
        const double fz_res = (fz * col - fz_val * col).norm();
        const double f = detail::quantum_number_from_casimir(f2_val);
        if (f2_res > 1e-8 * std::max(1.0, f2_val) || fz_res > 1e-8 ||
            std::abs(2.0 * f - std::lround(2.0 * f)) > 1e-6) {
            lab.issue = "not a simultaneous (F^2, F_z) eigenstate";
            continue;
        }
        lab.f = detail::nearest_half_integer(f);
        lab.mf = detail::nearest_half_integer(fz_val);
        lab.f_resolved = true;
        if (with_k) {
            const double k2_val = std::real((col.adjoint() * k2 * col)(0, 0));
            const double k2_res = (k2 * col - k2_val * col).norm();
            const double k = detail::quantum_number_from_casimir(k2_val);
            if (k2_res <= 1e-8 * std::max(1.0, k2_val) &&
                std::abs(2.0 * k - std::lround(2.0 * k)) <= 1e-6) {
                lab.k = detail::nearest_half_integer(k);
                lab.k_resolved = true;
            } else {
                lab.issue = "K^2 not resolved";
            }
        }
    }
    return sys;
}

/// U(t) = V e^{-i E t} V^dagger.
inline Op evolution_operator(const EigenSystem& sys, double t) {
    Eigen::VectorXcd phases(sys.energies.size());
    for (Eigen::Index i = 0; i < sys.energies.size(); ++i)
        phases[i] = std::exp(std::complex<double>(0.0, -sys.energies[i] * t));
    return sys.states * phases.asDiagonal() * sys.states.adjoint();
}

enum class Manifold { J, TwoJ, Other };

inline std::string manifold_name(Manifold m) {
    switch (m) {
        case Manifold::J: return "J";
        case Manifold::TwoJ: return "2J";
        default: return "other";
    }
}

/// Tags a frequency against the reference coupling: J if within 5% of |J|,
/// 2J if within 5% of 2|J|.
inline Manifold tag_frequency(double freq_hz, double ref_j_hz) {
    if (ref_j_hz > 0.0) {
        if (std::abs(freq_hz / ref_j_hz - 1.0) <= 0.05) return Manifold::J;
        if (std::abs(freq_hz / (2.0 * ref_j_hz) - 1.0) <= 0.05) return Manifold::TwoJ;
    }
    return Manifold::Other;
}

struct Line {
    double freq_hz = 0.0;
    std::complex<double> amplitude{0.0, 0.0};  // real after degenerate merging
    std::string from;  // lower-energy state label
    std::string to;    // upper-energy state label
    Manifold tag = Manifold::Other;
};

struct TransitionTable {
    std::vector<Line> lines;
    double ref_j_hz = 0.0;
};

/// Eigen-line table: one line per degenerate transition cluster at
/// nu = |E_k - E_l| / h with amplitude sum_{pairs} <k|detect|l><l|rho0|k>.
/// Ordered conjugate pairs merge to a real amplitude; lines below
/// 1e-12 of the strongest amplitude are dropped as numerically zero.
inline TransitionTable transitions(const EigenSystem& sys, const Op& rho0,
                                   const Op& detect, double ref_j_hz,
                                   double merge_tol_hz = 1e-9) {
    if (rho0.rows() != static_cast<Eigen::Index>(sys.dim()) ||
        detect.rows() != static_cast<Eigen::Index>(sys.dim()))
        throw config_error("transitions: operator dimension mismatch");
    if (!is_hermitian(rho0)) throw config_error("transitions: rho0 must be Hermitian");
    if (!is_hermitian(detect)) throw config_error("transitions: detect must be Hermitian");
    const double trace = std::real(rho0.trace());
    if (std::abs(trace - 1.0) > 1e-9)
        throw config_error("transitions: rho0 must have unit trace");

    const Op d_eig = sys.states.adjoint() * detect * sys.states;
    const Op r_eig = sys.states.adjoint() * rho0 * sys.states;

    struct RawLine {
        double freq;
        std::complex<double> amp;
        std::size_t upper, lower;
    };
    std::vector<RawLine> raw;
    const std::size_t n = sys.dim();
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            if (k == l) continue;
            const std::complex<double> amp =
                d_eig(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) *
                r_eig(static_cast<Eigen::Index>(l), static_cast<Eigen::Index>(k));
            if (amp == std::complex<double>(0.0, 0.0)) continue;
            const double ek = sys.energies[static_cast<Eigen::Index>(k)];
            const double el = sys.energies[static_cast<Eigen::Index>(l)];
            const double freq = std::abs(ek - el) / kTwoPi;
            raw.push_back(RawLine{freq, amp, ek >= el ? k : l, ek >= el ? l : k});
        }
    }
    std::sort(raw.begin(), raw.end(),
              [](const RawLine& a, const RawLine& b) { return a.freq < b.freq; });

    TransitionTable table;
    table.ref_j_hz = ref_j_hz;
    std::size_t i = 0;
    while (i < raw.size()) {
        std::size_t j = i;
        std::complex<double> amp{0.0, 0.0};
        double freq_acc = 0.0;
        std::size_t strongest = i;
        while (j < raw.size() && raw[j].freq - raw[i].freq <= merge_tol_hz) {
            amp += raw[j].amp;
            freq_acc += raw[j].freq;
            if (std::abs(raw[j].amp) > std::abs(raw[strongest].amp)) strongest = j;
            ++j;
        }
        Line line;
        line.freq_hz = freq_acc / static_cast<double>(j - i);
        line.amplitude = amp;
        line.from = sys.labels[raw[strongest].lower].to_string();
        line.to = sys.labels[raw[strongest].upper].to_string();
        line.tag = tag_frequency(line.freq_hz, ref_j_hz);
        table.lines.push_back(line);
        i = j;
    }

    double max_amp = 0.0;
    for (const Line& l : table.lines) max_amp = std::max(max_amp, std::abs(l.amplitude));
    // relative floor for weak lines, absolute floor for pure numerical dust
    const double dust = 1e-12 * d_eig.cwiseAbs().maxCoeff() * r_eig.cwiseAbs().maxCoeff();
    const double floor = std::max(1e-12 * max_amp, dust);
    std::erase_if(table.lines,
                  [floor](const Line& l) { return std::abs(l.amplitude) <= floor; });
    return table;
}

/// Sum of Lorentzians on `grid` (Hz): each line contributes
/// Re(amp) * (T2/pi) / (1 + (2 pi (f - f0) T2)^2) with its manifold's T2,
/// i.e. half width at half maximum 1/(2 pi T2).
inline std::vector<double> spectrum(const TransitionTable& table,
                                    const std::map<Manifold, double>& t2_by_manifold,
                                    const std::vector<double>& grid) {
    for (const auto& [m, t2] : t2_by_manifold)
        if (!std::isfinite(t2) || t2 <= 0.0)
            throw config_error("spectrum: T2 values must be positive");
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        if (!(grid[i] <= grid[i + 1]))
            throw config_error("spectrum: grid must be sorted");

    std::vector<double> out(grid.size(), 0.0);
    for (const Line& line : table.lines) {
        const auto it = t2_by_manifold.find(line.tag);
        if (it == t2_by_manifold.end())
            throw config_error("spectrum: no T2 supplied for manifold '" +
                               manifold_name(line.tag) + "'");
        const double t2 = it->second;
        const double area = std::real(line.amplitude);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double w = kTwoPi * (grid[i] - line.freq_hz) * t2;
            out[i] += area * (t2 / 3.14159265358979323846) / (1.0 + w * w);
        }
    }
    return out;
}

/// Effective two-level reduction of one manifold.
///
/// For each level pair radiating in the manifold window, the detect operator
/// block D and the polarized-spin block N = I_{X,z} are aligned by the
/// singular vectors of N (both are proportional to the same unitary between
/// degenerate copies, so the alignment is basis independent). Each channel i
/// contributes transition strength 4 |D~_ii|^2 weighted by w_i = 2 sigma_i(N),
/// the polarization coherence it carries:
///
///     gamma_eff^2 = sum_i 4 |D~_ii|^2 w_i / sum_i w_i,     pi_m = sum_i w_i,
///
/// and the returned SampleSpec carries gamma_eff, P0 * pi_m and the manifold
/// T2, so core::amplification_transient applies unchanged. For a two-spin XA
/// cluster this reduces exactly to the bare formula with
/// gamma_eff = |gamma_X - gamma_A| and unchanged P0.
inline SampleSpec effective_two_level(const SpinCluster& cluster, Manifold manifold,
                                      const SampleSpec& sample_env, double manifold_t2,
                                      std::optional<std::size_t> polarized = std::nullopt) {
    cluster.validate();
    sample_env.validate();
    if (!std::isfinite(manifold_t2) || manifold_t2 <= 0.0)
        throw config_error("effective_two_level: manifold T2 must be positive");
    if (manifold == Manifold::Other)
        throw config_error("effective_two_level: manifold must be J or 2J");
    const double ref_j = cluster.reference_j();
    if (ref_j <= 0.0)
        throw config_error("effective_two_level: cluster has no couplings (no manifold)");

    std::size_t x_index;
    if (polarized) {
        x_index = *polarized;
        if (x_index >= cluster.size())
            throw config_error("effective_two_level: polarized index out of range");
    } else {
        const auto hetero = cluster.hetero_index();
        if (!hetero)
            throw config_error(
                "effective_two_level: polarized spin ambiguous; pass it explicitly");
        x_index = *hetero;
    }

    const Op h = build_hamiltonian(cluster);
    const EigenSystem sys = eigensystem(h, cluster);
    const Op d_eig = sys.states.adjoint() * detect_operator(cluster, 'z') * sys.states;
    const Op n_eig = sys.states.adjoint() *
                     spin_operator(cluster.size(), x_index, 'z') * sys.states;

    const double scale = std::max(1.0, sys.energies.cwiseAbs().maxCoeff());
    const auto groups = sys.degenerate_groups(1e-11 * scale);

    double phi = 0.0;    // sum 4 |D~_ii|^2 w_i
    double weight = 0.0; // sum w_i
    for (std::size_t a = 0; a < groups.size(); ++a) {
        for (std::size_t b = 0; b < a; ++b) {
            const double freq =
                (sys.energies[static_cast<Eigen::Index>(groups[a].front())] -
                 sys.energies[static_cast<Eigen::Index>(groups[b].front())]) /
                kTwoPi;
            if (tag_frequency(freq, ref_j) != manifold) continue;
            Op nblock(groups[a].size(), groups[b].size());
            Op dblock(groups[a].size(), groups[b].size());
            for (std::size_t r = 0; r < groups[a].size(); ++r) {
                for (std::size_t s = 0; s < groups[b].size(); ++s) {
                    const auto ri = static_cast<Eigen::Index>(groups[a][r]);
                    const auto si = static_cast<Eigen::Index>(groups[b][s]);
                    nblock(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
                        n_eig(ri, si);
                    dblock(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(s)) =
                        d_eig(ri, si);
                }
            }
            Eigen::JacobiSVD<Op> svd(nblock, Eigen::ComputeThinU | Eigen::ComputeThinV);
            const Op d_aligned = svd.matrixU().adjoint() * dblock * svd.matrixV();
            for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i) {
                const double sigma = svd.singularValues()[i];
                if (sigma <= 1e-12) continue;
                const double w = 2.0 * sigma;
                phi += 4.0 * std::norm(d_aligned(i, i)) * w;
                weight += w;
            }
        }
    }
    if (weight <= 1e-12)
        throw config_error("effective_two_level: no polarized transitions in manifold " +
                           manifold_name(manifold));

    SampleSpec out = sample_env;
    out.gamma = std::sqrt(phi / weight);
    out.p0 = sample_env.p0 * weight;
    out.t2 = manifold_t2;
    if (out.p0 > 1.0)
        throw config_error(
            "effective_two_level: projected polarization exceeds 1; reduce P0");
    out.validate();
    return out;
}

/// Loads a cluster definition from JSON:
///   { "spins": [ {"nuclide": "15N"} | {"label": "X", "gamma_mhz_per_t": -4.3} ],
///     "j_hz": [[0, -1.688, ...], ...] }
inline SpinCluster load_cluster_json(const std::string& path,
                                     const PhysicalConstants& c = default_constants()) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open cluster file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("cluster file " + path + ": " + e.what());
    }
    SpinCluster cluster;
    try {
        if (!j.contains("spins") || !j["spins"].is_array() || j["spins"].empty())
            throw config_error("cluster.spins: need a non-empty array");
        for (const auto& s : j["spins"]) {
            Nuclide n;
            if (s.contains("nuclide")) {
                n.label = s["nuclide"].get<std::string>();
                n.gamma = c.gamma(n.label);
            } else {
                n.label = s.value("label", "spin");
                if (!s.contains("gamma_mhz_per_t"))
                    throw config_error(
                        "cluster.spins[]: need 'nuclide' or 'gamma_mhz_per_t'");
                n.gamma = si::rad_s_t_from_mhz_t(s["gamma_mhz_per_t"].get<double>());
            }
            cluster.spins.push_back(n);
        }
        if (!j.contains("j_hz")) throw config_error("cluster.j_hz: missing");
        const auto& rows = j["j_hz"];
        const auto n = static_cast<Eigen::Index>(cluster.spins.size());
        cluster.j_hz = Eigen::MatrixXd::Zero(n, n);
        if (static_cast<Eigen::Index>(rows.size()) != n)
            throw config_error("cluster.j_hz: must be n x n");
        for (Eigen::Index r = 0; r < n; ++r) {
            const auto& row = rows[static_cast<std::size_t>(r)];
            if (static_cast<Eigen::Index>(row.size()) != n)
                throw config_error("cluster.j_hz: must be n x n");
            for (Eigen::Index cidx = 0; cidx < n; ++cidx)
                cluster.j_hz(r, cidx) = row[static_cast<std::size_t>(cidx)].get<double>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error("cluster file " + path + ": " + e.what());
    }
    cluster.validate();
    return cluster;
}

/// Loads a dense Hermitian operator (e.g. an alternative rho0) from JSON:
///   { "dim": d, "real": [[...]], "imag": [[...]] }  (imag optional)
inline Op load_operator_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open operator file: " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw io_error("operator file " + path + ": " + e.what());
    }
    try {
        const auto dim = j.at("dim").get<Eigen::Index>();
        Op out = Op::Zero(dim, dim);
        const auto& re = j.at("real");
        for (Eigen::Index r = 0; r < dim; ++r)
            for (Eigen::Index c = 0; c < dim; ++c)
                out(r, c) = re.at(static_cast<std::size_t>(r))
                                .at(static_cast<std::size_t>(c))
                                .get<double>();
        if (j.contains("imag")) {
            const auto& im = j["imag"];
            for (Eigen::Index r = 0; r < dim; ++r)
                for (Eigen::Index c = 0; c < dim; ++c)
                    out(r, c) += std::complex<double>(
                        0.0, im.at(static_cast<std::size_t>(r))
                                 .at(static_cast<std::size_t>(c))
                                 .get<double>());
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw config_error("operator file " + path + ": " + e.what());
    }
}

}  // namespace spinamp::zerofield
