#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "multilasso/diagnostics.hpp"
#include "multilasso/hidden.hpp"
#include "multilasso/mc.hpp"
#include "multilasso/model.hpp"
#include "multilasso/solver.hpp"
#include "multilasso/theory.hpp"

namespace py = pybind11;
using namespace multilasso;

namespace {

SolveResult solve_multinomial(const Eigen::MatrixXd& X, int k, const std::vector<int>& Y,
                              double lambda, const Eigen::VectorXd& lo,
                              const Eigen::VectorXd& hi, int max_iters, double tol) {
  const LossFamily loss = multinomial_logistic(k);
  const DesignSet design(X, k);
  const BoxDomain box(lo, hi);
  SolverOptions opts;
  opts.max_iters = max_iters;
  opts.tol_kkt = tol;
  Objective obj = [&](const Eigen::VectorXd& u, Eigen::VectorXd* g) {
    if (g == nullptr) return total_loss(loss, design, Y, u);
    return total_loss_with_gradient(loss, design, Y, u, *g);
  };
  return solve(obj, lambda, box, opts);
}

HiddenModelSpec make_hidden_spec(int n, int L, double sigma, const Eigen::VectorXd& theta,
                                 const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  return HiddenModelSpec(n, L, sigma, HiddenModelSpec::uniform_pi0(n, L), theta,
                         BoxDomain(lo, hi));
}

}  // namespace

PYBIND11_MODULE(_multilasso, m) {
  m.doc() = "penalized multi-combination / hidden-covariate estimation, bound "
            "evaluators, and Monte Carlo verification";

  m.def("beta", &beta_k, py::arg("k"));
  m.def("lasso_tuning", [](double K, double M_q, long long N, double kappa, double C_gamma) {
    const auto t = lasso_tuning(K, M_q, N, kappa, C_gamma);
    return py::make_tuple(t.lambda, t.L_N);
  });
  m.def("lasso_error_bound", &lasso_error_bound, py::arg("k"), py::arg("K"), py::arg("L_N"),
        py::arg("S"), py::arg("N"), py::arg("kappa"), py::arg("sigma_XS"));
  m.def("mean_max_bound", &mean_max_bound);
  m.def("massart_bound", &massart_bound);
  m.def("rho", &rho);
  m.def("hidden_constants", [](double F1, double F2, double A_g, double B_g, double M_X,
                               double R_D) {
    const auto c = hidden_constants(F1, F2, A_g, B_g, M_X, R_D);
    py::dict d;
    d["rho0"] = c.rho0;
    d["rho1"] = c.rho1;
    d["psi1"] = c.psi1;
    d["psi2"] = c.psi2;
    d["psi3"] = c.psi3;
    d["psi4"] = c.psi4;
    d["psi5"] = c.psi5;
    d["psi6"] = c.psi6;
    return d;
  });
  m.def("prop_hidden_error", [](double K, double M_q, long long S, double C_ell) {
    const auto b = prop_hidden_error(K, M_q, S, C_ell);
    return py::make_tuple(b.lambda, b.value);
  });

  m.def("prox_l1_box", &prox_l1_box, py::arg("v"), py::arg("tau_lambda"), py::arg("lo"),
        py::arg("hi"));

  py::class_<SolveResult>(m, "SolveResult")
      .def_readonly("theta_hat", &SolveResult::theta_hat)
      .def_readonly("objective", &SolveResult::objective)
      .def_readonly("kkt_residual", &SolveResult::kkt_residual)
      .def_readonly("iterations", &SolveResult::iterations)
      .def_readonly("converged", &SolveResult::converged);
  m.def("solve_multinomial_lasso", &solve_multinomial, py::arg("X"), py::arg("k"), py::arg("Y"),
        py::arg("lam"), py::arg("lo"), py::arg("hi"), py::arg("max_iters") = 10000,
        py::arg("tol") = 1e-7);
  m.def("sample_multinomial_responses",
        [](const Eigen::MatrixXd& X, int k, const Eigen::VectorXd& theta, std::uint64_t seed) {
          return sample_responses(multinomial_logistic(k), DesignSet(X, k), theta, seed);
        });

  m.def("sigma_Xl", &sigma_Xl, py::arg("X"), py::arg("l"), py::arg("cap") = 1000000);
  m.def("kappa_RE", [](const Eigen::MatrixXd& X, int s, double K, long long budget,
                       std::uint64_t seed) {
    const auto est = kappa_RE(X, s, K, budget, seed);
    py::dict d;
    d["kappa_hat"] = est.kappa_hat;
    d["witness_v"] = est.witness_v;
    d["witness_J"] = est.witness_J;
    d["method"] = est.method;
    return d;
  });

  py::class_<HiddenModelSpec>(m, "HiddenModelSpec")
      .def_property_readonly("p", &HiddenModelSpec::p)
      .def_property_readonly("num_states", &HiddenModelSpec::num_states);
  m.def("hidden_spec_uniform", &make_hidden_spec, py::arg("n"), py::arg("L"), py::arg("sigma"),
        py::arg("theta"), py::arg("lo"), py::arg("hi"));
  m.def("tilted_law", &tilted_law);
  m.def("hidden_loglik", [](const HiddenModelSpec& spec, const Eigen::VectorXd& u,
                            const Eigen::MatrixXd& Y) {
    Eigen::VectorXd g;
    const double v = hidden_loglik(spec, u, Y, &g);
    return py::make_tuple(v, g);
  });
  m.def("sample_hidden", [](const HiddenModelSpec& spec, int N, std::uint64_t seed) {
    const auto ds = sample_hidden(spec, N, seed);
    return py::make_tuple(ds.omega, ds.Y);
  });
  m.def("verify_massart", [](const std::vector<Eigen::VectorXd>& A, long long replicates,
                             std::uint64_t seed) {
    const auto v = verify_massart(A, replicates, seed);
    py::dict d;
    d["lhs"] = v.lhs;
    d["rhs"] = v.rhs;
    d["exact"] = v.exact;
    d["pass"] = v.pass;
    return d;
  });
}
