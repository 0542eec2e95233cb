#include <pybind11/complex.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "bundlediff/verify.hpp"

namespace py = pybind11;
using namespace bundlediff;

namespace {

py::list mat_list(const Mat& M) {
  py::list rows;
  for (int i = 0; i < M.r; ++i) {
    py::list r;
    for (int j = 0; j < M.c; ++j) r.append(M(i, j));
    rows.append(r);
  }
  return rows;
}

py::list cmat_list(const CMat& M) {
  py::list rows;
  for (int i = 0; i < M.n; ++i) {
    py::list r;
    for (int j = 0; j < M.n; ++j) r.append(M(i, j));
    rows.append(r);
  }
  return rows;
}

SigmaPoint point_from(const BundleModel& m, int chart, const std::vector<double>& q) {
  SigmaPoint p;
  p.chart = chart;
  p.q.setZero(m.dim());
  for (size_t i = 0; i < q.size() && i < static_cast<size_t>(m.dim()); ++i)
    p.q[static_cast<int>(i)] = q[i];
  return p;
}

}  // namespace

PYBIND11_MODULE(_bundlediff, m) {
  m.doc() = "path-integral reduction laboratory (C++ core)";

  py::class_<ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("radius", &ModelParams::radius)
      .def_readwrite("radius2", &ModelParams::radius2)
      .def_readwrite("box", &ModelParams::box)
      .def_readwrite("warp_amp", &ModelParams::warp_amp)
      .def_readwrite("vquad", &ModelParams::vquad);

  py::class_<BundleModel, std::shared_ptr<BundleModel>>(m, "BundleModel")
      .def_property_readonly("name", &BundleModel::name)
      .def_property_readonly("dim", &BundleModel::dim)
      .def_property_readonly("gdim", &BundleModel::gdim)
      .def("random_sigma_point",
           [](const BundleModel& mod, uint64_t seed, uint64_t idx) {
             SigmaPoint p = mod.random_sigma_point(seed, idx);
             std::vector<double> q(static_cast<size_t>(mod.dim()));
             for (int i = 0; i < mod.dim(); ++i) q[static_cast<size_t>(i)] = p.q[i];
             return py::make_tuple(p.chart, q);
           });

  m.def("make_model",
        [](const std::string& name, const ModelParams& p) { return make_model(name, p); },
        py::arg("name"), py::arg("params") = ModelParams());

  m.def("geometry_report",
        [](std::shared_ptr<BundleModel> mod, int chart, const std::vector<double>& q,
           const std::string& deriv) {
          GeometryReport g = geometry_report(
              *mod, point_from(*mod, chart, q),
              deriv == "fd" ? DerivMode::fd : DerivMode::analytic);
          py::dict out;
          out["scalars"] = py::dict(py::arg("R_P") = g.sc.RP, py::arg("HR") = g.sc.HR,
                                    py::arg("R_G") = g.sc.RG, py::arg("F2") = g.sc.F2,
                                    py::arg("jnorm2") = g.sc.jnorm2,
                                    py::arg("Jtilde") = g.sc.Jtilde);
          py::dict res;
          for (auto& kv : g.residuals) res[py::str(kv.first)] = kv.second;
          out["residuals"] = res;
          out["gamma"] = mat_list(g.fo.gam);
          out["N"] = mat_list(g.fo.N);
          out["Pperp"] = mat_list(g.fo.Pperp);
          out["A"] = mat_list(g.fo.A);
          return out;
        },
        py::arg("model"), py::arg("chart"), py::arg("q"), py::arg("deriv") = "analytic");

  m.def("metric_block",
        [](std::shared_ptr<BundleModel> mod, int chart, const std::vector<double>& q,
           const std::vector<double>& a) {
          GroupElement g;
          g.m = mod->gdim();
          for (size_t i = 0; i < a.size() && i < 3; ++i) g.a[i] = a[i];
          MetricBlock mb = metric_block(*mod, point_from(*mod, chart, q), g);
          py::dict out;
          out["Gtilde"] = mat_list(mb.Gtilde);
          out["GtildeInv"] = mat_list(mb.GtildeInv);
          out["product"] = mat_list(mb.product);
          out["det_reduced"] = mb.det_reduced;
          out["det_factorized"] = mb.det_factorized;
          return out;
        });

  m.def("semigroup_on_bump",
        [](std::shared_ptr<BundleModel> mod, int lambda, const std::string& kernel, double t,
           int steps, long paths, uint64_t seed, double width) {
          auto irr = (mod->gdim() == 1) ? make_u1_irrep(lambda) : make_su2_irrep(lambda);
          Vec c;
          c.setZero(mod->dim());
          TestSection psi0 = bump_section(*mod, *irr, c, width, 0);
          SimConfig cfg;
          cfg.t_b = t;
          cfg.n_steps = steps;
          cfg.n_paths = paths;
          cfg.seed = seed;
          cfg.start = mod->random_sigma_point(seed ^ 0xB0B0u, 0);
          Kernel k = kernel == "f1" ? Kernel::f1 : (kernel == "f2" ? Kernel::f2 : Kernel::f3);
          SemigroupEstimate est = semigroup_apply_mc(*mod, *irr, k, psi0, cfg, false);
          py::list val, err;
          for (int i = 0; i < irr->dim(); ++i) {
            val.append(est.value(i, 0));
            err.append(est.stderr_(i, 0));
          }
          return py::make_tuple(val, err);
        },
        py::arg("model"), py::arg("lambda_"), py::arg("kernel") = "f3", py::arg("t") = 0.5,
        py::arg("steps") = 100, py::arg("paths") = 10000, py::arg("seed") = 1,
        py::arg("width") = 0.8);

  m.def("girsanov_residual",
        [](std::shared_ptr<BundleModel> mod, int lambda, double t, int steps, long paths,
           uint64_t seed) {
          auto irr = (mod->gdim() == 1) ? make_u1_irrep(lambda) : make_su2_irrep(lambda);
          SimConfig cfg;
          cfg.t_b = t;
          cfg.n_steps = steps;
          cfg.n_paths = paths;
          cfg.seed = seed;
          cfg.start = mod->random_sigma_point(seed ^ 0x6125u, 0);
          GirsanovResult r = girsanov_residual(*mod, *irr, cfg);
          py::dict out;
          out["lhs"] = cmat_list(r.lhs);
          out["rhs"] = cmat_list(r.rhs);
          out["diff"] = cmat_list(r.diff);
          out["sigma"] = mat_list(r.sigma);
          out["max_z"] = r.max_z;
          return out;
        });

  m.def("operator_identity_residual",
        [](std::shared_ptr<BundleModel> mod, int lambda, int points, int sections, uint64_t seed,
           const std::string& deriv) {
          auto irr = (mod->gdim() == 1) ? make_u1_irrep(lambda) : make_su2_irrep(lambda);
          return operator_identity_residual(*mod, *irr, points, sections,
                                            deriv == "fd" ? DerivMode::fd : DerivMode::analytic,
                                            seed);
        },
        py::arg("model"), py::arg("lambda_"), py::arg("points") = 20, py::arg("sections") = 5,
        py::arg("seed") = 1, py::arg("deriv") = "analytic");

  m.def("verify", [](const std::string& suite, const std::string& model, uint64_t seed, long paths,
                     int steps) {
    VerifySettings s;
    s.model = model;
    s.seed = seed;
    s.paths = paths;
    s.reduction_paths = paths;
    s.steps = steps;
    std::vector<Verdict> vs;
    if (suite == "geometry") vs.push_back(verify_geometry(s));
    else if (suite == "operators") vs.push_back(verify_operators(s));
    else if (suite == "girsanov") vs.push_back(verify_girsanov(s));
    else if (suite == "reduction") vs.push_back(verify_reduction(s));
    else throw std::runtime_error("unknown suite");
    py::list out;
    for (const auto& v : vs) {
      py::dict d;
      d["suite"] = v.suite;
      d["pass"] = v.all_pass();
      py::list checks;
      for (const auto& c : v.checks) {
        py::dict cd;
        cd["name"] = c.name;
        cd["measured"] = c.measured;
        cd["tolerance"] = c.tolerance;
        cd["state"] = state_name(c.state);
        checks.append(cd);
      }
      d["checks"] = checks;
      out.append(d);
    }
    return out;
  }, py::arg("suite"), py::arg("model"), py::arg("seed") = 1, py::arg("paths") = 5000,
     py::arg("steps") = 50);
}
