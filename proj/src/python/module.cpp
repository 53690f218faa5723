#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "nbelnet/debias.hpp"
#include "nbelnet/model.hpp"
#include "nbelnet/selection.hpp"
#include "nbelnet/simulate.hpp"
#include "nbelnet/solver.hpp"
#include "nbelnet/theory.hpp"

namespace py = pybind11;
using namespace nbelnet;

namespace {

Dataset make_data(const Matrix& X, const Vector& y, double theta) { return Dataset(X, y, theta); }

py::dict fit_dict(const Fit& f) {
  py::dict d;
  d["beta"] = f.beta;
  d["objective"] = f.objective_value;
  d["iterations"] = f.iterations;
  d["converged"] = f.converged;
  d["kkt_max_violation"] = f.kkt.max_violation;
  d["lambda1"] = f.penalty.lambda1;
  d["lambda2"] = f.penalty.lambda2;
  d["objective_history"] = f.objective_history;
  d["warnings"] = f.warnings;
  return d;
}

SimSpec make_spec(Index n, Index p, Index d_star, double beta_min, double beta_max, const std::string& design,
                  double rho, double theta, double clamp_L, bool random_signs) {
  SimSpec s;
  s.n = n;
  s.p = p;
  s.d_star = d_star;
  s.beta_min = beta_min;
  s.beta_max = beta_max;
  s.design = parse_design(design);
  s.rho = rho;
  s.theta = theta;
  s.clamp_L = clamp_L;
  s.random_signs = random_signs;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_nbelnet, m) {
  m.doc() = "Elastic-net negative binomial regression";

  py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
  py::register_exception<InapplicableBound>(m, "InapplicableBound", PyExc_RuntimeError);

  m.def(
      "nb_loss", [](const Vector& beta, const Matrix& X, const Vector& y, double theta) {
        return nb_loss(beta, make_data(X, y, theta));
      },
      py::arg("beta"), py::arg("X"), py::arg("y"), py::arg("theta"));
  m.def(
      "nb_score", [](const Vector& beta, const Matrix& X, const Vector& y, double theta) {
        return nb_score(beta, make_data(X, y, theta));
      },
      py::arg("beta"), py::arg("X"), py::arg("y"), py::arg("theta"));
  m.def(
      "nb_hessian", [](const Vector& beta, const Matrix& X, const Vector& y, double theta) {
        return nb_hessian(beta, make_data(X, y, theta));
      },
      py::arg("beta"), py::arg("X"), py::arg("y"), py::arg("theta"));

  m.def(
      "fit",
      [](const Matrix& X, const Vector& y, double theta, double lambda1, double lambda2, double tol,
         int max_iter) {
        SolverConfig cfg;
        cfg.tol = tol;
        cfg.max_iter = max_iter;
        py::gil_scoped_release release;
        const Fit f = fit(make_data(X, y, theta), Penalty{lambda1, lambda2}, cfg);
        py::gil_scoped_acquire acquire;
        return fit_dict(f);
      },
      py::arg("X"), py::arg("y"), py::arg("theta"), py::arg("lambda1"), py::arg("lambda2") = 0.0,
      py::arg("tol") = 1e-8, py::arg("max_iter") = 10000);

  m.def(
      "kkt_check",
      [](const Vector& beta, const Matrix& X, const Vector& y, double theta, double lambda1, double lambda2,
         double tol) {
        const KktReport r = kkt_check(beta, make_data(X, y, theta), Penalty{lambda1, lambda2}, tol);
        py::dict d;
        d["residuals"] = r.residuals;
        d["max_violation"] = r.max_violation;
        d["satisfied"] = r.satisfied;
        return d;
      },
      py::arg("beta"), py::arg("X"), py::arg("y"), py::arg("theta"), py::arg("lambda1"), py::arg("lambda2") = 0.0,
      py::arg("tol") = 1e-8);

  m.def(
      "simulate",
      [](Index n, Index p, Index d_star, double beta_min, double beta_max, const std::string& design, double rho,
         double theta, double clamp_L, bool random_signs, std::uint64_t seed) {
        const SimInstance in =
            simulate(make_spec(n, p, d_star, beta_min, beta_max, design, rho, theta, clamp_L, random_signs), seed);
        py::dict d;
        d["X"] = in.data.X();
        d["y"] = in.data.y();
        d["beta_star"] = in.beta_star;
        return d;
      },
      py::arg("n") = 200, py::arg("p") = 50, py::arg("d_star") = 3, py::arg("beta_min") = 1.0,
      py::arg("beta_max") = 1.0, py::arg("design") = "iid_gaussian", py::arg("rho") = 0.0, py::arg("theta") = 2.0,
      py::arg("clamp_L") = 5.0, py::arg("random_signs") = false, py::arg("seed") = 0);

  m.def(
      "sample_nb", [](const Vector& mu, double theta, std::uint64_t seed) { return sample_nb(mu, theta, seed); },
      py::arg("mu"), py::arg("theta"), py::arg("seed") = 0);

  m.def(
      "compatibility_factor",
      [](const Matrix& sigma, const IndexSet& H, double zeta, int budget, std::uint64_t seed) {
        return compatibility_factor(sigma, ConeSpec{zeta, H, 0.0}, budget, seed);
      },
      py::arg("sigma"), py::arg("H"), py::arg("zeta"), py::arg("budget") = 64, py::arg("seed") = 0);
  m.def(
      "weak_cif",
      [](const Matrix& sigma, const IndexSet& H, double zeta, double q, int budget, std::uint64_t seed) {
        return weak_cif(sigma, ConeSpec{zeta, H, 0.0}, q, budget, seed);
      },
      py::arg("sigma"), py::arg("H"), py::arg("zeta"), py::arg("q") = 2.0, py::arg("budget") = 64,
      py::arg("seed") = 0);
  m.def(
      "stabil_constant",
      [](const Matrix& sigma, const IndexSet& H, double c, double epsilon, double radius, int budget,
         std::uint64_t seed) {
        const StabilEstimate s = stabil_constant(sigma, ConeSpec{c, H, epsilon}, radius, budget, seed);
        return py::make_tuple(s.k, s.degenerate);
      },
      py::arg("sigma"), py::arg("H"), py::arg("c") = 3.5, py::arg("epsilon") = 0.0, py::arg("radius") = 1.0,
      py::arg("budget") = 64, py::arg("seed") = 0);

  m.def("a_tau_root", &a_tau_root, py::arg("tau"));
  m.attr("TAU_MAX") = kTauMax;
  m.def("a_constant", &a_constant, py::arg("theta"), py::arg("L"), py::arg("B"), py::arg("epsilon_n") = 0.0);
  m.def(
      "oracle_bounds_t32",
      [](double K, double zeta, Index d_star, double lambda1, double compat, double cif_q, double q) {
        const CompatibilityBounds b = oracle_bounds_t32(K, zeta, d_star, lambda1, compat, cif_q, q);
        py::dict d;
        d["tau"] = b.tau;
        d["a_tau"] = b.a_tau;
        d["l1_bound"] = b.l1_bound;
        d["lq_bound"] = b.lq_bound;
        return d;
      },
      py::arg("K"), py::arg("zeta"), py::arg("d_star"), py::arg("lambda1"), py::arg("compat"), py::arg("cif_q"),
      py::arg("q") = 2.0);
  m.def("honest_dimension", &honest_dimension, py::arg("A"), py::arg("delta"));

  m.def(
      "cameron_trivedi_test",
      [](const Vector& y, const Vector& mu, const std::string& variant) {
        DispersionVariant v;
        if (variant == "linear") {
          v = DispersionVariant::Linear;
        } else if (variant == "quadratic") {
          v = DispersionVariant::Quadratic;
        } else {
          throw std::invalid_argument("variant must be 'linear' or 'quadratic'");
        }
        const DispersionTest t = cameron_trivedi_test(y, mu, v);
        py::dict d;
        d["alpha_hat"] = t.alpha_hat;
        d["se"] = t.se;
        d["t_stat"] = t.t_stat;
        d["p_value"] = t.p_value;
        return d;
      },
      py::arg("y"), py::arg("mu"), py::arg("variant") = "quadratic");

  m.def(
      "debias",
      [](const Vector& beta_hat, const Matrix& X, const Vector& y, double theta, double lambda_node, double level) {
        const Dataset d = make_data(X, y, theta);
        const double lam = lambda_node >= 0.0 ? lambda_node : default_lambda_node(d.n(), d.p());
        const DebiasResult r = debias(beta_hat, d, nodewise_inverse(d, beta_hat, lam), level);
        py::dict out;
        out["b_hat"] = r.b_hat;
        out["theta_hat"] = r.theta_hat;
        out["se"] = r.se;
        out["ci_low"] = r.ci_low;
        out["ci_high"] = r.ci_high;
        return out;
      },
      py::arg("beta_hat"), py::arg("X"), py::arg("y"), py::arg("theta"), py::arg("lambda_node") = -1.0,
      py::arg("level") = 0.95);

  m.def("registered_experiments", &registered_experiments);
  m.def(
      "run_replications",
      [](const std::string& experiment, int replicates, std::uint64_t seed, Index n, Index p, Index d_star,
         double beta_min, double beta_max, const std::string& design, double rho, double theta, double lambda1,
         double lambda2, double lambda1_rate, double lambda2_ratio, int samples, int stabil_budget, int threads) {
        const SimSpec s = make_spec(n, p, d_star, beta_min, beta_max, design, rho, theta, 5.0, false);
        ExperimentParams prm;
        prm.penalty = Penalty{lambda1, lambda2};
        prm.lambda1_rate = lambda1_rate;
        prm.lambda2_ratio = lambda2_ratio;
        prm.theory.samples = samples;
        prm.stabil_budget = stabil_budget;
        ReplicationSummary r;
        {
          py::gil_scoped_release release;
          r = run_replications(s, experiment, replicates, seed, prm, threads);
        }
        py::dict d;
        d["experiment"] = r.experiment;
        d["replicates"] = r.replicates;
        d["metrics"] = r.metrics;
        d["columns"] = r.columns;
        d["rows"] = r.rows;
        return d;
      },
      py::arg("experiment"), py::arg("replicates"), py::arg("seed") = 0, py::arg("n") = 200, py::arg("p") = 50,
      py::arg("d_star") = 3, py::arg("beta_min") = 1.0, py::arg("beta_max") = 1.0,
      py::arg("design") = "iid_gaussian", py::arg("rho") = 0.0, py::arg("theta") = 2.0, py::arg("lambda1") = 0.1,
      py::arg("lambda2") = 0.0, py::arg("lambda1_rate") = 0.0, py::arg("lambda2_ratio") = 0.0,
      py::arg("samples") = 16, py::arg("stabil_budget") = 16, py::arg("threads") = 1);
}
