#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <random>

#include "spinamp/fitting.hpp"
#include "spinamp/noise.hpp"
#include "spinamp/zerofield.hpp"

using namespace spinamp;
using namespace spinamp::fitting;
using Catch::Approx;

namespace {

std::vector<DataPoint> buildup_data(double c, double t1, int n, double tmax,
                                    double noise_abs, std::uint64_t seed) {
    const GaussianStream noise(seed);
    std::vector<DataPoint> data;
    for (int i = 0; i < n; ++i) {
        const double t = tmax * i / (n - 1.0);
        DataPoint d;
        d.x = t;
        d.y = model_buildup(t, c, t1) + (noise_abs > 0.0 ? noise_abs * noise.at(i) : 0.0);
        d.sigma = noise_abs > 0.0 ? noise_abs : 1.0;
        data.push_back(d);
    }
    return data;
}

std::vector<DataPoint> flow_data(double a, double b, double qc, int n, double qmax,
                                 double noise_abs, std::uint64_t seed) {
    const GaussianStream noise(seed);
    std::vector<DataPoint> data;
    for (int i = 0; i < n; ++i) {
        const double q = qmax * i / (n - 1.0);
        DataPoint d;
        d.x = q;
        d.y = model_flow(q, a, b, qc) + (noise_abs > 0.0 ? noise_abs * noise.at(i) : 0.0);
        d.sigma = noise_abs > 0.0 ? noise_abs : 1.0;
        data.push_back(d);
    }
    return data;
}

}  // namespace

TEST_CASE("model evaluations", "[fitting]") {
    SECTION("buildup") {
        CHECK(model_buildup(0.0, 0.11, 21.1) == 0.0);
        CHECK(model_buildup(1e9, 0.11, 21.1) == Approx(0.11).epsilon(1e-12));
        CHECK(model_buildup(21.1, 0.11, 21.1) ==
              Approx(0.06953326147114135).epsilon(1e-12));
    }
    SECTION("flow") {
        CHECK(model_flow(0.0, 0.001, 4.0, 151.7) == 0.0);
        CHECK(model_flow(151.7, 0.001, 4.0, 151.7) == Approx(0.07585).epsilon(1e-12));
        // linear within 1% below qc/10 at b = 4
        for (double q = 1.0; q <= 15.17; q += 1.0)
            CHECK(model_flow(q, 0.001, 4.0, 151.7) == Approx(0.001 * q).epsilon(0.01));
    }
    SECTION("lorentzian") {
        const double t2 = 10.5;
        const double pi = 3.14159265358979323846;
        CHECK(model_lorentzian(2.0, 2.0, 3.0, t2, 0.5) ==
              Approx(0.5 + 3.0 * t2 / pi).epsilon(1e-12));
        const double hwhm = 1.0 / (2.0 * pi * t2);
        CHECK(hwhm == Approx(0.01516).margin(1e-5));
        CHECK(model_lorentzian(2.0 + hwhm, 2.0, 3.0, t2, 0.0) ==
              Approx(0.5 * 3.0 * t2 / pi).epsilon(1e-9));
        CHECK(model_lorentzian(2.0 - hwhm, 2.0, 3.0, t2, 0.0) ==
              Approx(0.5 * 3.0 * t2 / pi).epsilon(1e-9));
    }
    SECTION("guards") {
        CHECK_THROWS_AS(model_buildup(1.0, 0.1, 0.0), config_error);
        CHECK_THROWS_AS(model_flow(1.0, 0.1, -1.0, 10.0), config_error);
        CHECK_THROWS_AS(model_flow(-1.0, 0.1, 1.0, 10.0), config_error);
    }
}

TEST_CASE("analytic jacobians match central differences", "[fitting]") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const ModelKind kind : {ModelKind::buildup, ModelKind::flowrate,
                                 ModelKind::lorentzian, ModelKind::dispersive}) {
        const ModelSpec model = ModelSpec::make(kind);
        for (int trial = 0; trial < 100; ++trial) {
            Eigen::VectorXd p(static_cast<Eigen::Index>(model.size()));
            double x = 0.0;
            switch (kind) {
                case ModelKind::buildup:
                    p << 0.05 + u(rng), 5.0 + 40.0 * u(rng);
                    x = 80.0 * u(rng);
                    break;
                case ModelKind::flowrate:
                    p << 1e-4 + 1e-2 * u(rng), 1.0 + 6.0 * u(rng), 50.0 + 300.0 * u(rng);
                    x = 0.5 + 400.0 * u(rng);  // away from the q=0 corner
                    break;
                case ModelKind::lorentzian:
                    p << 2.0 * u(rng), 0.5 + u(rng), 2.0 + 15.0 * u(rng), u(rng) - 0.5;
                    x = p[0] + 0.2 * (u(rng) - 0.5);
                    break;
                case ModelKind::dispersive:
                    p << 0.01 + 0.05 * u(rng), 0.2 + 2.0 * u(rng), 1.0 + 0.01 * u(rng);
                    x = 10.0 * (u(rng) - 0.5);
                    break;
            }
            const Eigen::VectorXd g = model.gradient(x, p);
            Eigen::VectorXd fd(g.size());
            for (std::size_t i = 0; i < model.size(); ++i) {
                const double h = 1e-6 * std::max(std::abs(p[static_cast<Eigen::Index>(i)]), 1.0);
                Eigen::VectorXd pp = p, pm = p;
                pp[static_cast<Eigen::Index>(i)] += h;
                pm[static_cast<Eigen::Index>(i)] -= h;
                fd[static_cast<Eigen::Index>(i)] =
                    (model.eval(x, pp) - model.eval(x, pm)) / (2.0 * h);
            }
            // relative to the gradient norm: components near zero are FD-noise
            const double scale =
                std::max({g.cwiseAbs().maxCoeff(), fd.cwiseAbs().maxCoeff(), 1e-9});
            for (Eigen::Index i = 0; i < g.size(); ++i)
                REQUIRE(std::abs(g[i] - fd[i]) / scale < 1e-6);
        }
    }
}

TEST_CASE("noiseless buildup recovery", "[fitting]") {
    const auto data = buildup_data(0.11, 21.1, 30, 80.0, 0.0, 0);
    const ModelSpec model = ModelSpec::make(ModelKind::buildup);
    Eigen::VectorXd init(2);
    init << 0.2, 10.0;
    const FitResult res = fit(model, data, init);
    REQUIRE(res.converged);
    CHECK(res.params.at("c") == Approx(0.11).epsilon(1e-6));
    CHECK(res.params.at("t1") == Approx(21.1).epsilon(1e-6));
    CHECK(res.residual_norm < 1e-8);
}

TEST_CASE("truth start converges immediately", "[fitting]") {
    const auto data = buildup_data(0.11, 21.1, 30, 80.0, 0.0, 0);
    const ModelSpec model = ModelSpec::make(ModelKind::buildup);
    Eigen::VectorXd init(2);
    init << 0.11, 21.1;
    const FitResult res = fit(model, data, init);
    CHECK(res.converged);
    CHECK(res.iterations <= 2);
    CHECK(res.gradient_max < 1e-10);
    CHECK(res.last_step_norm <= 1e-10);
}

TEST_CASE("monte carlo coverage: 3-sigma recovery in >= 95/100 seeds",
          "[fitting][slow]") {
    SECTION("buildup (c = 0.11, T1 = 21.1)") {
        int hits = 0;
        const double noise = 0.02 * 0.11;  // 2% of full scale
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            const auto data = buildup_data(0.11, 21.1, 30, 80.0, noise, seed);
            const ModelSpec model = ModelSpec::make(ModelKind::buildup);
            const FitResult res = fit(model, data, initial_guess(model, data));
            const bool ok =
                std::abs(res.params.at("c") - 0.11) <= 3.0 * res.stderrors.at("c") &&
                std::abs(res.params.at("t1") - 21.1) <= 3.0 * res.stderrors.at("t1");
            if (ok) ++hits;
        }
        CHECK(hits >= 95);
    }
    SECTION("flowrate (a = 0.001, b = 4.0, qc = 151.7)") {
        int hits = 0;
        const double ymax = model_flow(151.7 / std::sqrt(std::sqrt(3.0)), 0.001, 4.0, 151.7);
        const double noise = 0.02 * ymax;
        for (std::uint64_t seed = 1; seed <= 100; ++seed) {
            const auto data = flow_data(0.001, 4.0, 151.7, 30, 400.0, noise, seed);
            const ModelSpec model = ModelSpec::make(ModelKind::flowrate);
            const FitResult res = fit(model, data, initial_guess(model, data));
            const bool ok =
                std::abs(res.params.at("a") - 0.001) <= 3.0 * res.stderrors.at("a") &&
                std::abs(res.params.at("b") - 4.0) <= 3.0 * res.stderrors.at("b") &&
                std::abs(res.params.at("qc") - 151.7) <= 3.0 * res.stderrors.at("qc");
            if (ok) ++hits;
        }
        CHECK(hits >= 95);
    }
}

TEST_CASE("scale invariance", "[fitting]") {
    const auto base = flow_data(0.001, 4.0, 151.7, 30, 400.0, 2e-3, 3);
    std::vector<DataPoint> scaled = base;
    for (DataPoint& d : scaled) {
        d.y *= 1e6;
        d.sigma *= 1e6;
    }
    const ModelSpec model = ModelSpec::make(ModelKind::flowrate);
    const FitResult r1 = fit(model, base, initial_guess(model, base));
    const FitResult r2 = fit(model, scaled, initial_guess(model, scaled));
    // shape parameters identical, amplitude scales with the data
    CHECK(r2.params.at("b") == Approx(r1.params.at("b")).epsilon(1e-9));
    CHECK(r2.params.at("qc") == Approx(r1.params.at("qc")).epsilon(1e-9));
    CHECK(r2.params.at("a") == Approx(1e6 * r1.params.at("a")).epsilon(1e-9));
}

TEST_CASE("cost history is monotone across accepted steps", "[fitting]") {
    const auto data = flow_data(0.001, 4.0, 151.7, 30, 400.0, 2e-3, 9);
    const ModelSpec model = ModelSpec::make(ModelKind::flowrate);
    const FitResult res = fit(model, data, initial_guess(model, data));
    REQUIRE(res.cost_history.size() > 1);
    for (std::size_t i = 1; i < res.cost_history.size(); ++i)
        REQUIRE(res.cost_history[i] <= res.cost_history[i - 1]);
}

TEST_CASE("bounds are enforced by projection", "[fitting]") {
    SECTION("recovery from a hard low start stays inside the box") {
        const auto data = buildup_data(0.11, 21.1, 30, 80.0, 5e-3, 4);
        const ModelSpec model = ModelSpec::make(ModelKind::buildup);
        Eigen::VectorXd init(2);
        init << 0.05, 0.5;
        const FitResult res = fit(model, data, init);
        CHECK(res.params.at("t1") > 0.0);
        CHECK(res.params.at("t1") == Approx(21.1).epsilon(0.1));
    }
    SECTION("an upper bound below the truth pins the parameter at the bound") {
        const auto data = buildup_data(0.11, 21.1, 30, 80.0, 0.0, 0);
        ModelSpec model = ModelSpec::make(ModelKind::buildup);
        model.upper[1] = 15.0;  // below the generating T1 = 21.1
        Eigen::VectorXd init(2);
        init << 0.2, 10.0;
        const FitResult res = fit(model, data, init);
        CHECK(res.params.at("t1") <= 15.0 + 1e-12);
        CHECK(res.params.at("t1") == Approx(15.0).epsilon(1e-6));
    }
}

TEST_CASE("degenerate data reports a singular jacobian", "[fitting]") {
    // all q = 0: every column of the flow jacobian vanishes
    std::vector<DataPoint> data(8);
    for (auto& d : data) {
        d.x = 0.0;
        d.y = 0.0;
        d.sigma = 1.0;
    }
    const ModelSpec model = ModelSpec::make(ModelKind::flowrate);
    Eigen::VectorXd init(3);
    init << 1e-3, 4.0, 100.0;
    const FitResult res = fit(model, data, init);
    CHECK(res.status.find("singular") != std::string::npos);
    for (const auto& [name, se] : res.stderrors) CHECK(se == 0.0);
}

TEST_CASE("non-convergence returns best-so-far", "[fitting]") {
    const auto data = flow_data(0.001, 4.0, 151.7, 30, 400.0, 2e-3, 5);
    const ModelSpec model = ModelSpec::make(ModelKind::flowrate);
    Eigen::VectorXd init(3);
    init << 1e-6, 1.0, 10.0;
    const FitResult res = fit(model, data, init, 2);  // starved iteration budget
    CHECK_FALSE(res.converged);
    CHECK(res.status.rfind("max_iterations", 0) == 0);
    CHECK(res.cost_history.back() < res.cost_history.front());
}

TEST_CASE("csv ingestion", "[fitting]") {
    const std::string path = "fit_data_test.csv";
    {
        std::ofstream out(path);
        out << "x,y,sigma\n0,0.0,0.01\n10,0.04,0.01\n20,0.07,0.01\n30,0.08,0.01\n";
    }
    const auto data = read_xy_csv(path);
    REQUIRE(data.size() == 4);
    CHECK(data[1].x == 10.0);
    CHECK(data[1].y == 0.04);
    CHECK(data[1].sigma == 0.01);
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "x,y\n1,2\n3,4\n";
    }
    const auto unweighted = read_xy_csv(path);
    CHECK(unweighted[0].sigma == 1.0);
    std::remove(path.c_str());

    {
        std::ofstream out(path);
        out << "x,y\n1,not-a-number\n";
    }
    CHECK_THROWS_AS(read_xy_csv(path), io_error);
    std::remove(path.c_str());
}

TEST_CASE("lorentzian width round trip through the spectrum synthesis",
          "[fitting]") {
    using namespace spinamp::zerofield;
    for (const double t2_true : {10.5, 5.3}) {
        TransitionTable table;
        table.ref_j_hz = 1.688;
        table.lines = {Line{1.688, {2.5, 0.0}, "", "", Manifold::J}};
        std::vector<DataPoint> data;
        for (double f = 1.4; f <= 2.0; f += 2.5e-3) {
            DataPoint d;
            d.x = f;
            data.push_back(d);
        }
        std::vector<double> grid;
        for (const DataPoint& d : data) grid.push_back(d.x);
        const auto spec = spectrum(table, {{Manifold::J, t2_true}}, grid);
        for (std::size_t i = 0; i < data.size(); ++i) data[i].y = spec[i];

        const ModelSpec model = ModelSpec::make(ModelKind::lorentzian);
        const FitResult res = fit(model, data, initial_guess(model, data));
        REQUIRE(res.converged);
        CHECK(res.params.at("t2") == Approx(t2_true).epsilon(0.005));
        CHECK(res.params.at("center") == Approx(1.688).margin(1e-6));
    }
}
