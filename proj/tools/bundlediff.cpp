// bundlediff: drives the geometry reports, SDE/holonomy simulations, grid
// evolutions and the verification suites from the command line.
#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>

#include "bundlediff/verify.hpp"

using namespace bundlediff;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string model = "hopf";
  std::string derivatives = "analytic";
  uint64_t seed = 1;
  double mu2 = 1.0, kappa = 1.0, mass = 1.0;
  double radius = 1.0, box = 20.0;
  std::string config_path;
};

void add_common(CLI::App* cmd, CommonOpts& c) {
  cmd->add_option("--model", c.model, "flat|hopf|warped|biinv|file:<path>");
  cmd->add_option("--derivatives", c.derivatives, "analytic|fd")
      ->check(CLI::IsMember({"analytic", "fd"}));
  cmd->add_option("--seed", c.seed, "rng seed");
  cmd->add_option("--mu2", c.mu2, "hbar/m");
  cmd->add_option("--kappa", c.kappa, "diffusion parameter");
  cmd->add_option("--mass", c.mass, "particle mass");
  cmd->add_option("--radius", c.radius, "model radius");
  cmd->add_option("--box", c.box, "periodic box side (flat/warped)");
  cmd->add_option("--config", c.config_path, "JSON run configuration (unknown keys rejected)");
}

// schema-checked JSON config; values already set by flags act as defaults
void apply_config(const std::string& path, CommonOpts& c, json& extra) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw CLI::ValidationError("--config", std::string("parse error: ") + e.what());
  }
  static const std::vector<std::string> known = {
      "model", "derivatives", "seed",  "mu2",   "kappa",     "mass",   "radius",
      "box",   "tA",          "tB",    "steps", "paths",     "irrep",  "kernel",
      "variant", "quad_order", "grid_h", "points", "sections", "out",  "suite"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw CLI::ValidationError("--config", "unknown key '" + it.key() + "'");
  }
  if (j.contains("model")) c.model = j["model"].get<std::string>();
  if (j.contains("derivatives")) c.derivatives = j["derivatives"].get<std::string>();
  if (j.contains("seed")) c.seed = j["seed"].get<uint64_t>();
  if (j.contains("mu2")) c.mu2 = j["mu2"].get<double>();
  if (j.contains("kappa")) c.kappa = j["kappa"].get<double>();
  if (j.contains("mass")) c.mass = j["mass"].get<double>();
  if (j.contains("radius")) c.radius = j["radius"].get<double>();
  if (j.contains("box")) c.box = j["box"].get<double>();
  extra = j;
}

VerifySettings settings_of(const CommonOpts& c) {
  VerifySettings s;
  s.model = c.model;
  s.seed = c.seed;
  s.deriv = (c.derivatives == "fd") ? DerivMode::fd : DerivMode::analytic;
  s.mu2 = c.mu2;
  s.kappa = c.kappa;
  s.mass = c.mass;
  s.params.radius = c.radius;
  s.params.box = c.box;
  return s;
}

json mat_json(const Mat& M) {
  json rows = json::array();
  for (int i = 0; i < M.r; ++i) {
    json row = json::array();
    for (int j = 0; j < M.c; ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

int finish_verdicts(const std::vector<Verdict>& vs, const std::string& out) {
  bool fail = false, inconclusive = false;
  json all = json::array();
  for (const auto& v : vs) {
    print_verdict(v);
    all.push_back(verdict_to_json(v));
    if (!v.all_pass()) fail = true;
    if (v.has_inconclusive()) inconclusive = true;
  }
  if (!out.empty()) {
    std::ofstream o(out);
    o << all.dump(2) << "\n";
  }
  if (fail || inconclusive) {
    std::cout << (fail ? "FAIL" : "INCONCLUSIVE") << "\n";
    return 1;
  }
  std::cout << "PASS\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"numerical laboratory for path-integral reduction on principal bundles"};
  app.require_subcommand(1);

  // ---- geometry-report
  auto* rep = app.add_subcommand("geometry-report", "tensor dump and residual table");
  CommonOpts rc;
  int rep_points = 10;
  std::string rep_out = "report.json";
  bool dump_irreps = false;
  add_common(rep, rc);
  rep->add_option("--points", rep_points, "number of Sigma sample points");
  rep->add_option("--out", rep_out, "output JSON path");
  rep->add_flag("--dump-irreps", dump_irreps, "include irrep tables");

  // ---- simulate
  auto* sim = app.add_subcommand("simulate", "SDE ensemble with optional holonomy weights");
  CommonOpts sc;
  std::string sim_variant = "sigma_reduced", sim_kernel = "f3", sim_out = "ensemble.json";
  std::string dump_paths;
  double tA = 0, tB = 0.5;
  int sim_steps = 200;
  long sim_paths = 10000;
  int sim_irrep = 1;
  add_common(sim, sc);
  sim->add_option("--variant", sim_variant, "original|sigma_full|sigma_reduced")
      ->check(CLI::IsMember({"original", "sigma_full", "sigma_reduced"}));
  sim->add_option("--kernel", sim_kernel, "f1|f2|f3")->check(CLI::IsMember({"f1", "f2", "f3"}));
  sim->add_option("--irrep", sim_irrep, "U(1) winding / SU(2) two-j");
  sim->add_option("--tA", tA);
  sim->add_option("--tB", tB);
  sim->add_option("--steps", sim_steps);
  sim->add_option("--paths", sim_paths);
  sim->add_option("--out", sim_out);
  sim->add_option("--dump-paths", dump_paths, "CSV of endpoints (small runs)");

  // ---- evolve
  auto* evo = app.add_subcommand("evolve", "grid evolution of the reduced system");
  CommonOpts ec;
  double evo_h = 0.05, evo_t = 0.25, evo_dt = 2.5e-3, evo_width = 0.8;
  int evo_irrep = 0;
  std::string evo_out = "evolve.csv", evo_stepper = "cn";
  add_common(evo, ec);
  evo->add_option("--grid-h", evo_h);
  evo->add_option("--t", evo_t);
  evo->add_option("--dt", evo_dt);
  evo->add_option("--irrep", evo_irrep);
  evo->add_option("--width", evo_width, "initial gaussian width");
  evo->add_option("--stepper", evo_stepper)->check(CLI::IsMember({"cn", "euler"}));
  evo->add_option("--out", evo_out, "CSV field dump");

  // ---- verify
  auto* ver = app.add_subcommand("verify", "verification suites");
  ver->require_subcommand(1);
  ver->fallthrough();
  CommonOpts vc;
  std::string ver_out;
  long ver_paths = 100000, ver_red_paths = 200000;
  int ver_steps = 200, ver_quad = 32, ver_points = 1000, ver_sections = 20, ver_op_points = 50;
  double ver_h = 0.02;
  std::vector<CLI::App*> ver_cmds;
  for (const char* nm : {"geometry", "operators", "girsanov", "reduction", "mcpde", "all"}) {
    auto* c = ver->add_subcommand(nm);
    c->fallthrough();
    ver_cmds.push_back(c);
  }
  add_common(ver, vc);
  ver->add_option("--paths", ver_paths);
  ver->add_option("--reduction-paths", ver_red_paths);
  ver->add_option("--steps", ver_steps);
  ver->add_option("--quad-order", ver_quad);
  ver->add_option("--points", ver_points);
  ver->add_option("--sections", ver_sections);
  ver->add_option("--op-points", ver_op_points);
  ver->add_option("--grid-h", ver_h);
  ver->add_option("--out", ver_out, "verdict JSON path");

  // ---- sweep
  auto* sw = app.add_subcommand("sweep", "stderr scaling sweep (CSV)");
  CommonOpts wc;
  std::string sw_out = "sweep.csv";
  add_common(sw, wc);
  sw->add_option("--out", sw_out);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (rep->parsed()) {
      json extra;
      if (!rc.config_path.empty()) apply_config(rc.config_path, rc, extra);
      VerifySettings s = settings_of(rc);
      auto model = make_model(s.model, s.params);
      json out;
      out["model"] = s.model;
      out["points"] = json::array();
      std::map<std::string, double> worst;
      for (int i = 0; i < rep_points; ++i) {
        SigmaPoint p = model->random_sigma_point(s.seed, static_cast<uint64_t>(i));
        GeometryReport g = geometry_report(*model, p, s.deriv);
        json pj;
        pj["chart"] = p.chart;
        json q = json::array();
        for (int k = 0; k < model->dim(); ++k) q.push_back(p.q[k]);
        pj["q"] = q;
        pj["scalars"] = {{"R_P", g.sc.RP},       {"HR", g.sc.HR},   {"R_G", g.sc.RG},
                         {"F2", g.sc.F2},        {"jnorm2", g.sc.jnorm2},
                         {"Jtilde", g.sc.Jtilde}};
        pj["Phi"] = mat_json(g.fo.Phi);
        pj["gamma"] = mat_json(g.fo.gam);
        pj["N"] = mat_json(g.fo.N);
        pj["Pperp"] = mat_json(g.fo.Pperp);
        pj["GH"] = mat_json(g.fo.GH);
        pj["A"] = mat_json(g.fo.A);
        json res;
        for (auto& kv : g.residuals) {
          res[kv.first] = kv.second;
          worst[kv.first] = std::max(worst[kv.first], kv.second);
        }
        pj["residuals"] = res;
        out["points"].push_back(pj);
      }
      json wj;
      for (auto& kv : worst) wj[kv.first] = kv.second;
      out["max_residuals"] = wj;
      if (dump_irreps) {
        json irr = json::array();
        for (int la = 0; la <= 2; ++la) {
          auto ir = (model->gdim() == 1) ? make_u1_irrep(la) : make_su2_irrep(la);
          json e;
          e["label"] = ir->label();
          e["dim"] = ir->dim();
          irr.push_back(e);
        }
        out["irreps"] = irr;
      }
      std::ofstream o(rep_out);
      o << out.dump(2) << "\n";
      std::cout << "wrote " << rep_out << "\n";
      return 0;
    }

    if (sim->parsed()) {
      json extra;
      if (!sc.config_path.empty()) apply_config(sc.config_path, sc, extra);
      VerifySettings s = settings_of(sc);
      auto model = make_model(s.model, s.params);
      SimConfig cfg;
      cfg.mu2 = s.mu2;
      cfg.kappa = s.kappa;
      cfg.mass = s.mass;
      cfg.t_a = tA;
      cfg.t_b = tB;
      cfg.n_steps = sim_steps;
      cfg.n_paths = sim_paths;
      cfg.seed = s.seed;
      cfg.deriv = s.deriv;
      cfg.variant = sim_variant == "original"
                        ? ProcessVariant::original
                        : (sim_variant == "sigma_full" ? ProcessVariant::sigma_full
                                                       : ProcessVariant::sigma_reduced);
      cfg.start = model->random_sigma_point(s.seed ^ 0x57a7u, 0);
      EnsembleStats st = simulate_paths(*model, cfg);
      json out;
      out["n_paths"] = st.n_paths;
      out["n_failed"] = st.n_failed;
      json mean = json::array();
      for (int k = 0; k < model->dim(); ++k) mean.push_back(st.mean[k]);
      out["endpoint_mean"] = mean;
      out["endpoint_cov"] = mat_json(st.cov);
      // holonomy-weighted estimate against a unit section
      auto irr = (model->gdim() == 1) ? make_u1_irrep(sim_irrep) : make_su2_irrep(sim_irrep);
      Kernel k = sim_kernel == "f1" ? Kernel::f1 : (sim_kernel == "f2" ? Kernel::f2 : Kernel::f3);
      TestSection one = constant_section(irr->dim(), 1.0);
      SimConfig mcfg = cfg;
      mcfg.variant = (k == Kernel::f1) ? ProcessVariant::sigma_full : ProcessVariant::sigma_reduced;
      SemigroupEstimate est = semigroup_apply_mc(*model, *irr, k, one, mcfg, false);
      json ev = json::array(), es = json::array();
      for (int c = 0; c < irr->dim(); ++c) {
        ev.push_back({est.value(c, 0).real(), est.value(c, 0).imag()});
        es.push_back(est.stderr_(c, 0));
      }
      out["semigroup_on_unit_section"] = ev;
      out["semigroup_stderr"] = es;
      out["kernel"] = sim_kernel;
      out["irrep"] = irr->label();
      std::ofstream o(sim_out);
      o << out.dump(2) << "\n";
      if (!dump_paths.empty()) {
        std::ofstream csv(dump_paths);
        csv << "path,chart";
        for (int kk = 0; kk < model->dim(); ++kk) csv << ",q" << kk;
        csv << "\n";
        const long np = std::min<long>(cfg.n_paths, 1000);
        for (long i = 0; i < np; ++i) {
          ReducedPathResult r = run_reduced_path(*model, *irr, k, mcfg, i, false);
          csv << i << "," << r.end.chart;
          for (int kk = 0; kk < model->dim(); ++kk) csv << "," << r.end.q[kk];
          csv << "\n";
        }
      }
      std::cout << "wrote " << sim_out << "\n";
      return 0;
    }

    if (evo->parsed()) {
      json extra;
      if (!ec.config_path.empty()) apply_config(ec.config_path, ec, extra);
      VerifySettings s = settings_of(ec);
      auto model = make_model(s.model, s.params);
      auto irr = (model->gdim() == 1) ? make_u1_irrep(evo_irrep) : make_su2_irrep(evo_irrep);
      GridSection g = make_grid(*model, evo_h, model->chart_extent(0), irr->dim());
      const double w = evo_width;
      fill_grid(g, *model, [&](const SigmaPoint& p, cplx* out) {
        double r2 = 0;
        for (int i = 0; i < model->dim() - model->gdim(); ++i) r2 += p.q[i] * p.q[i];
        for (int c = 0; c < irr->dim(); ++c) out[c] = std::exp(-r2 / (2 * w * w));
      });
      EvolveOptions opt;
      opt.t_span = evo_t;
      opt.dt = evo_dt;
      opt.stepper = evo_stepper == "cn" ? Stepper::crank_nicolson : Stepper::explicit_euler;
      opt.mu2 = s.mu2;
      opt.kappa = s.kappa;
      opt.mass = s.mass;
      opt.mode = s.deriv;
      GridSection gu = evolve(OpLabel::h_kappa, *model, *irr, g, opt);
      std::ofstream csv(evo_out);
      csv << "chart,x,y";
      for (int c = 0; c < irr->dim(); ++c) csv << ",re" << c << ",im" << c;
      csv << "\n";
      for (long nn = 0; nn < gu.n_nodes(); ++nn) {
        SigmaPoint p = gu.point_of(*model, nn);
        csv << p.chart << "," << p.q[0] << "," << p.q[1];
        for (int c = 0; c < irr->dim(); ++c) {
          const cplx z = gu.values[static_cast<size_t>(nn * gu.d + c)];
          csv << "," << z.real() << "," << z.imag();
        }
        csv << "\n";
      }
      std::cout << "wrote " << evo_out << "\n";
      return 0;
    }

    if (ver->parsed()) {
      json extra;
      if (!vc.config_path.empty()) apply_config(vc.config_path, vc, extra);
      VerifySettings s = settings_of(vc);
      s.paths = ver_paths;
      s.reduction_paths = ver_red_paths;
      s.steps = ver_steps;
      s.quad_order = ver_quad;
      s.points = ver_points;
      s.op_sections = ver_sections;
      s.op_points = ver_op_points;
      s.grid_h = ver_h;
      std::vector<Verdict> vs;
      const std::string which = ver->get_subcommands().front()->get_name();
      if (which == "geometry") vs.push_back(verify_geometry(s));
      else if (which == "operators") vs.push_back(verify_operators(s));
      else if (which == "girsanov") vs.push_back(verify_girsanov(s));
      else if (which == "reduction") vs.push_back(verify_reduction(s));
      else if (which == "mcpde") vs.push_back(verify_mcpde(s));
      else vs = verify_all(s);
      return finish_verdicts(vs, ver_out);
    }

    if (sw->parsed()) {
      json extra;
      if (!wc.config_path.empty()) apply_config(wc.config_path, wc, extra);
      VerifySettings s = settings_of(wc);
      Verdict v = verify_error_scaling(s);
      print_verdict(v);
      std::ofstream csv(sw_out);
      csv << "check,measured,tolerance\n";
      for (const auto& c : v.checks) csv << c.name << "," << c.measured << "," << c.tolerance << "\n";
      std::cout << "wrote " << sw_out << "\n";
      return v.all_pass() ? 0 : 1;
    }
  } catch (const CLI::ValidationError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
