#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spinamp/errors.hpp"

// Damped nonlinear least squares (Levenberg-Marquardt) for the toolkit's
// model families: polarization buildup, flow-rate response, Lorentzian
// lineshape and the dispersive ratio curve. Analytic Jacobians throughout;
// parameter bounds are enforced by projecting trial steps onto the box.

namespace spinamp::fitting {

struct DataPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;  // 1-sigma uncertainty; defaults to unweighted
};

enum class ModelKind { buildup, flowrate, lorentzian, dispersive };

inline ModelKind model_kind_from_name(const std::string& name) {
    if (name == "buildup") return ModelKind::buildup;
    if (name == "flowrate") return ModelKind::flowrate;
    if (name == "lorentzian") return ModelKind::lorentzian;
    if (name == "dispersive") return ModelKind::dispersive;
    throw config_error("unknown model '" + name + "'");
}

inline std::string model_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::buildup: return "buildup";
        case ModelKind::flowrate: return "flowrate";
        case ModelKind::lorentzian: return "lorentzian";
        case ModelKind::dispersive: return "dispersive";
    }
    return "?";
}

/// G(t) = c (1 - e^{-t/T1}).
inline double model_buildup(double t, double c, double t1) {
    if (!(t1 > 0.0)) throw config_error("model_buildup: T1 must be positive");
    return c * (1.0 - std::exp(-t / t1));
}

/// G(Q) = a Q / (1 + (Q/Qc)^b).
inline double model_flow(double q, double a, double b, double qc) {
    if (!(qc > 0.0) || !(b > 0.0)) throw config_error("model_flow: qc and b must be positive");
    if (q < 0.0) throw config_error("model_flow: q must be >= 0");
    return a * q / (1.0 + std::pow(q / qc, b));
}

/// L(f) = baseline + area (T2/pi) / (1 + (2 pi (f - center) T2)^2);
/// half width at half maximum 1/(2 pi T2), matching the spectrum synthesis.
inline double model_lorentzian(double f, double center, double area, double t2,
                               double baseline) {
    if (!(t2 > 0.0)) throw config_error("model_lorentzian: T2 must be positive");
    const double w = 2.0 * 3.14159265358979323846 * (f - center) * t2;
    return baseline + area * (t2 / 3.14159265358979323846) / (1.0 + w * w);
}

/// R(delta) = baseline + g (delta T2) / (1 + (delta T2)^2), the first-order
/// dispersive ratio curve.
inline double model_dispersive(double delta, double g, double t2, double baseline) {
    if (!(t2 > 0.0)) throw config_error("model_dispersive: T2 must be positive");
    const double v = delta * t2;
    return baseline + g * v / (1.0 + v * v);
}

/// Which parameters a model exposes, their order, and box constraints.
struct ModelSpec {
    ModelKind kind = ModelKind::buildup;
    std::vector<std::string> names;
    std::vector<double> lower;
    std::vector<double> upper;

    static ModelSpec make(ModelKind kind) {
        const double inf = std::numeric_limits<double>::infinity();
        const double eps = 1e-12;
        ModelSpec m;
        m.kind = kind;
        switch (kind) {
            case ModelKind::buildup:
                m.names = {"c", "t1"};
                m.lower = {-inf, eps};
                m.upper = {inf, inf};
                break;
            case ModelKind::flowrate:
                m.names = {"a", "b", "qc"};
                m.lower = {-inf, eps, eps};
                m.upper = {inf, inf, inf};
                break;
            case ModelKind::lorentzian:
                m.names = {"center", "area", "t2", "baseline"};
                m.lower = {-inf, -inf, eps, -inf};
                m.upper = {inf, inf, inf, inf};
                break;
            case ModelKind::dispersive:
                m.names = {"g", "t2", "baseline"};
                m.lower = {-inf, eps, -inf};
                m.upper = {inf, inf, inf};
                break;
        }
        return m;
    }

    std::size_t size() const { return names.size(); }

    double eval(double x, const Eigen::VectorXd& p) const {
        switch (kind) {
            case ModelKind::buildup: return model_buildup(x, p[0], p[1]);
            case ModelKind::flowrate: return model_flow(x, p[0], p[1], p[2]);
            case ModelKind::lorentzian:
                return model_lorentzian(x, p[0], p[1], p[2], p[3]);
            case ModelKind::dispersive:
                return model_dispersive(x, p[0], p[1], p[2]);
        }
        return 0.0;
    }

    /// Analytic gradient d model / d p at x.
    Eigen::VectorXd gradient(double x, const Eigen::VectorXd& p) const {
        Eigen::VectorXd g(size());
        constexpr double pi = 3.14159265358979323846;
        switch (kind) {
            case ModelKind::buildup: {
                const double e = std::exp(-x / p[1]);
                g[0] = 1.0 - e;
                g[1] = -p[0] * e * x / (p[1] * p[1]);
                break;
            }
            case ModelKind::flowrate: {
                const double a = p[0], b = p[1], qc = p[2];
                if (x == 0.0) {
                    g.setZero();
                    g[0] = 0.0;
                    break;
                }
                const double u = std::pow(x / qc, b);
                const double den = 1.0 + u;
                g[0] = x / den;
                g[1] = -a * x * u * std::log(x / qc) / (den * den);
                g[2] = a * x * b * u / (qc * den * den);
                break;
            }
            case ModelKind::lorentzian: {
                const double center = p[0], area = p[1], t2 = p[2];
                const double w = 2.0 * pi * (x - center) * t2;
                const double den = 1.0 + w * w;
                g[0] = area * (t2 / pi) * (2.0 * w * 2.0 * pi * t2) / (den * den);
                g[1] = (t2 / pi) / den;
                g[2] = (area / pi) * (1.0 - w * w) / (den * den);
                g[3] = 1.0;
                break;
            }
            case ModelKind::dispersive: {
                const double gg = p[0], t2 = p[1];
                const double v = x * t2;
                const double den = 1.0 + v * v;
                g[0] = v / den;
                g[1] = gg * x * (1.0 - v * v) / (den * den);
                g[2] = 1.0;
                break;
            }
        }
        return g;
    }
};

struct FitResult {
    std::map<std::string, double> params;
    std::map<std::string, double> stderrors;
    double residual_norm = 0.0;  // sqrt(chi^2 / n): weighted RMS residual
    int iterations = 0;
    bool converged = false;
    std::string status;                 // "converged" | "max_iterations" | "singular_jacobian"
    std::vector<double> cost_history;   // accepted-step costs, monotone non-increasing
    double gradient_max = 0.0;          // max |grad chi^2/2| at the optimum
    double last_step_norm = 0.0;        // relative parameter step at the last accepted iteration
};

namespace detail {

inline Eigen::VectorXd clamp_to_box(Eigen::VectorXd p, const ModelSpec& model) {
    for (Eigen::Index i = 0; i < p.size(); ++i)
        p[i] = std::clamp(p[i], model.lower[static_cast<std::size_t>(i)],
                          model.upper[static_cast<std::size_t>(i)]);
    return p;
}

}  // namespace detail

/// Weighted least squares by damped Gauss-Newton (Levenberg-Marquardt).
/// Accepted steps never increase the cost; parameter bounds are enforced by
/// projecting the trial point onto the box. Standard errors come from the
/// inverse approximate Hessian (J^T J)^{-1} scaled by the reduced chi^2.
/// Deterministic for identical inputs.
inline FitResult fit(const ModelSpec& model, const std::vector<DataPoint>& data,
                     const Eigen::VectorXd& init, int max_iterations = 200) {
    const std::size_t k = model.size();
    if (data.size() < 2 * k)
        throw config_error("fit: need at least 2x as many points as free parameters");
    for (const DataPoint& d : data)
        if (!(d.sigma > 0.0) || !std::isfinite(d.x) || !std::isfinite(d.y))
            throw config_error("fit: data must be finite with sigma > 0");
    if (init.size() != static_cast<Eigen::Index>(k))
        throw config_error("fit: init size mismatch");

    const double ftol = 1e-10, gtol = 1e-10, xtol = 1e-10;
    const auto n = static_cast<Eigen::Index>(data.size());

    Eigen::VectorXd p = detail::clamp_to_box(init, model);

    const auto residuals = [&](const Eigen::VectorXd& params) {
        Eigen::VectorXd r(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            const DataPoint& d = data[static_cast<std::size_t>(i)];
            r[i] = (model.eval(d.x, params) - d.y) / d.sigma;
        }
        return r;
    };
    const auto jacobian = [&](const Eigen::VectorXd& params) {
        Eigen::MatrixXd j(n, static_cast<Eigen::Index>(k));
        for (Eigen::Index i = 0; i < n; ++i) {
            const DataPoint& d = data[static_cast<std::size_t>(i)];
            j.row(i) = model.gradient(d.x, params).transpose() / d.sigma;
        }
        return j;
    };

    FitResult result;
    Eigen::VectorXd r = residuals(p);
    double cost = 0.5 * r.squaredNorm();
    result.cost_history.push_back(cost);

    double lambda = 1e-3;
    bool singular = false;
    int iter = 0;
    for (; iter < max_iterations; ++iter) {
        const Eigen::MatrixXd j = jacobian(p);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd grad = j.transpose() * r;
        result.gradient_max = grad.cwiseAbs().maxCoeff();
        if (result.gradient_max < gtol) {
            result.converged = true;
            result.status = "converged";
            break;
        }

        Eigen::VectorXd diag = jtj.diagonal();
        for (Eigen::Index i = 0; i < diag.size(); ++i)
            if (diag[i] <= 0.0) diag[i] = 1e-30;
        if (jtj.diagonal().maxCoeff() <= 0.0) {
            singular = true;
            break;
        }

        bool accepted = false;
        for (int tries = 0; tries < 40 && !accepted; ++tries) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * diag;
            const Eigen::LDLT<Eigen::MatrixXd> solver(damped);
            if (solver.info() != Eigen::Success) {
                singular = true;
                break;
            }
            const Eigen::VectorXd step = solver.solve(-grad);
            if (!step.allFinite()) {
                singular = true;
                break;
            }
            const Eigen::VectorXd trial = detail::clamp_to_box(p + step, model);
            const Eigen::VectorXd r_trial = residuals(trial);
            const double cost_trial = 0.5 * r_trial.squaredNorm();
            if (cost_trial < cost) {
                const double step_norm =
                    (trial - p).norm() / std::max(1e-300, p.norm());
                const double cost_drop = (cost - cost_trial) / std::max(cost, 1e-300);
                p = trial;
                r = r_trial;
                cost = cost_trial;
                result.cost_history.push_back(cost);
                result.last_step_norm = step_norm;
                lambda = std::max(lambda / 3.0, 1e-12);
                accepted = true;
                if (cost_drop < ftol && step_norm < xtol) {
                    result.converged = true;
                    result.status = "converged";
                }
            } else {
                lambda *= 10.0;
                if (lambda > 1e12) break;  // stuck: treat as stalled
            }
        }
        if (singular || result.converged) break;
        if (!accepted) {
            // no downhill step at any damping level
            result.converged = false;
            result.status = "stalled";
            break;
        }
    }
    result.iterations = iter;
    if (singular) {
        result.converged = false;
        result.status = "singular_jacobian";
    } else if (result.status.empty()) {
        result.status = "max_iterations";
    }

    // parameter covariance from the approximate Hessian at the optimum
    const Eigen::MatrixXd j = jacobian(p);
    const Eigen::MatrixXd jtj = j.transpose() * j;
    const double dof = static_cast<double>(data.size()) - static_cast<double>(k);
    const double variance_scale = dof > 0.0 ? 2.0 * cost / dof : 0.0;
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(jtj.rows(), jtj.cols());
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (lu.isInvertible()) {
        cov = lu.inverse() * variance_scale;
    } else if (result.status != "singular_jacobian") {
        result.status += "; singular_jacobian_at_optimum";
    }

    for (std::size_t i = 0; i < k; ++i) {
        result.params[model.names[i]] = p[static_cast<Eigen::Index>(i)];
        const double var = cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i));
        result.stderrors[model.names[i]] = var > 0.0 ? std::sqrt(var) : 0.0;
    }
    result.residual_norm = std::sqrt(2.0 * cost / static_cast<double>(data.size()));
    return result;
}

/// Data-driven starting points so CLI fits run without hand tuning.
inline Eigen::VectorXd initial_guess(const ModelSpec& model,
                                     const std::vector<DataPoint>& data) {
    if (data.empty()) throw config_error("initial_guess: no data");
    double ymax = -std::numeric_limits<double>::infinity();
    double ymin = std::numeric_limits<double>::infinity();
    double x_at_ymax = data.front().x;
    for (const DataPoint& d : data) {
        if (d.y > ymax) {
            ymax = d.y;
            x_at_ymax = d.x;
        }
        ymin = std::min(ymin, d.y);
    }
    Eigen::VectorXd p(static_cast<Eigen::Index>(model.size()));
    switch (model.kind) {
        case ModelKind::buildup: {
            // T1 from the 63% rise point
            const double c = ymax;
            double t63 = data.back().x / 3.0;
            for (const DataPoint& d : data)
                if (d.y >= 0.632 * c) {
                    t63 = std::max(d.x, 1e-12);
                    break;
                }
            p << c, t63;
            break;
        }
        case ModelKind::flowrate: {
            // slope from the low-q third, knee from the maximum
            double slope = 0.0;
            int counted = 0;
            for (const DataPoint& d : data)
                if (d.x > 0.0 && d.x <= x_at_ymax / 2.0) {
                    slope += d.y / d.x;
                    ++counted;
                }
            if (counted > 0) slope /= counted;
            if (slope <= 0.0) slope = ymax / std::max(x_at_ymax, 1.0);
            p << slope, 4.0, std::max(x_at_ymax, 1e-6);
            break;
        }
        case ModelKind::lorentzian: {
            const double baseline = ymin;
            const double peak = ymax - baseline;
            // HWHM from the half-crossing nearest the peak
            double hwhm = 0.0;
            for (const DataPoint& d : data)
                if (d.y - baseline >= 0.5 * peak)
                    hwhm = std::max(hwhm, std::abs(d.x - x_at_ymax));
            if (hwhm <= 0.0) hwhm = std::max(1e-6, std::abs(data.back().x - data.front().x) / 10.0);
            const double t2 = 1.0 / (2.0 * 3.14159265358979323846 * hwhm);
            p << x_at_ymax, peak * 3.14159265358979323846 / t2, t2, baseline;
            break;
        }
        case ModelKind::dispersive: {
            double sum = 0.0;
            for (const DataPoint& d : data) sum += d.y;
            const double baseline = sum / static_cast<double>(data.size());
            const double t2 = x_at_ymax != 0.0 ? 1.0 / std::abs(x_at_ymax) : 1.0;
            p << 2.0 * (ymax - baseline), t2, baseline;
            break;
        }
    }
    return detail::clamp_to_box(p, ModelSpec::make(model.kind));
}

/// Reads `x,y[,sigma]` CSV with a header row.
inline std::vector<DataPoint> read_xy_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw io_error("cannot open data file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw io_error("empty data file: " + path);
    std::vector<DataPoint> data;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string cell;
        DataPoint d;
        try {
            if (!std::getline(ss, cell, ',')) throw io_error("missing x");
            d.x = std::stod(cell);
            if (!std::getline(ss, cell, ',')) throw io_error("missing y");
            d.y = std::stod(cell);
            if (std::getline(ss, cell, ',')) d.sigma = std::stod(cell);
        } catch (const std::exception&) {
            throw io_error(path + ":" + std::to_string(lineno) + ": malformed row");
        }
        data.push_back(d);
    }
    return data;
}

}  // namespace spinamp::fitting
