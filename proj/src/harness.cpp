#include "staggdg/harness.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace staggdg {

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  while (std::getline(f, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      const auto b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string k = trim(line.substr(0, eq)), v = trim(line.substr(eq + 1));
    if (!k.empty()) cfg.kv[k] = v;
  }
  if (cfg.has("case")) {
    RunConfig merged = case_defaults(cfg.str("case"));
    for (const auto& [k, v] : cfg.kv) merged.kv[k] = v;
    return merged;
  }
  return cfg;
}

std::string RunConfig::str(const std::string& key, const std::string& fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : it->second;
}

double RunConfig::num(const std::string& key, double fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stod(it->second);
}

int RunConfig::integer(const std::string& key, int fallback) const {
  const auto it = kv.find(key);
  return it == kv.end() ? fallback : std::stoi(it->second);
}

RunConfig RunConfig::case_defaults(const std::string& id) {
  RunConfig c;
  auto set = [&](const std::string& k, const std::string& v) { c.kv[k] = v; };
  set("case", id);
  set("p", "4");
  set("imex_order", "2");
  set("cg_tol", "1e-10");
  set("cg_maxit", "0");
  set("theta0", "0");
  if (id == "nonlinear_transport") {
    set("xmin", "-2.5"); set("xmax", "2.5"); set("ymin", "-0.5"); set("ymax", "0.5");
    set("nx", "51"); set("ny", "11");
    set("bc_x", "dirichlet"); set("bc_y", "periodic");
    set("kappa", "0"); set("dt", "1.0"); set("t_end", "1.0");
  } else if (id == "advdiff_erf") {
    set("xmin", "-2.5"); set("xmax", "2.5"); set("ymin", "-0.5"); set("ymax", "0.5");
    set("nx", "51"); set("ny", "11");
    set("bc_x", "dirichlet"); set("bc_y", "periodic");
    set("kappa", "1e-3"); set("dt", "2.0"); set("t_end", "2.0");
  } else if (id == "advdiff_varvel") {
    set("xmin", "-10"); set("xmax", "10"); set("ymin", "-0.25"); set("ymax", "0.25");
    set("nx", "88"); set("ny", "9");
    set("bc_x", "dirichlet"); set("bc_y", "periodic");
    set("kappa", "0.1"); set("dt", "0.2"); set("t_end", "0.2");
  } else if (id == "taylor_green") {
    set("xmin", "0"); set("xmax", "6.283185307179586"); set("ymin", "0");
    set("ymax", "6.283185307179586");
    set("nx", "8"); set("ny", "8");
    set("bc_x", "periodic"); set("bc_y", "periodic");
    set("nu", "1e-3"); set("gravity", "0"); set("p", "2");
    set("dt", "0.1"); set("t_end", "0.1");
  } else if (id == "warm_bubble") {
    set("xmin", "0"); set("xmax", "1"); set("ymin", "0"); set("ymax", "1");
    set("nx", "26"); set("ny", "26");
    set("bc_x", "wall"); set("bc_y", "wall");
    set("nu", "1e-6"); set("alpha", "0"); set("beta", "3.411223e-3");
    set("gravity", "-9.81e-3");
    set("dt", "10"); set("t_end", "800"); set("imex_order", "1");
  } else if (id == "density_current") {
    set("xmin", "0"); set("xmax", "25.6"); set("ymin", "0"); set("ymax", "6.4");
    set("nx", "68"); set("ny", "17");
    set("bc_x", "wall"); set("bc_y", "wall");
    set("nu", "7.5e-5"); set("alpha", "7.5e-5"); set("beta", "3.41223e-3");
    set("gravity", "-9.81e-3");
    set("dt", "10"); set("t_end", "900"); set("imex_order", "1");
  } else {
    throw std::runtime_error("unknown case id: " + id);
  }
  return c;
}

namespace {

MainField project_scalar(const Operators& ops, const std::function<double(const Vec2&)>& f) {
  return ops.project_function(1, [&](const Vec2& x, int) { return f(x); });
}

// direct L2 projection of an analytic vector field onto the dual space
DualField project_dual_function(const Operators& ops, const EdgeConditions& bc,
                                const std::function<double(const Vec2&, int)>& f) {
  const auto& mesh = ops.mesh();
  const int nq = ops.npsi();
  DualField out(mesh.num_edges(), 2, nq);
  const auto& rule = ops.ref().volume_rule();
  const auto& psiL = ops.ref().psi_at_volume_L();
  const auto& psiR = ops.ref().psi_at_volume_R();
  for (int j = 0; j < mesh.num_edges(); ++j) {
    for (int c = 0; c < 2; ++c) {
      VectorXd mom = VectorXd::Zero(nq);
      for (int side = 0; side < 2; ++side) {
        const int i = side == 0 ? mesh.left_of(j) : mesh.right_of(j);
        if (i < 0) continue;
        const TriMap sub = mesh.dual_side_map(i, j);
        const auto& psi = side == 0 ? psiL : psiR;
        for (std::size_t g = 0; g < rule.points.size(); ++g) {
          const Vec2 x = sub.to_physical(rule.points[g]);
          const double w = rule.weights[g] * sub.det * f(x, c);
          for (int k = 0; k < nq; ++k) mom[k] += psi(g, k) * w;
        }
      }
      ops.dual_mass_solve(j, bc, c, mom);
      for (int k = 0; k < nq; ++k) out.at(j, c, k) = mom[k];
    }
  }
  return out;
}

} // namespace

CaseSetup build_case(const RunConfig& cfg) {
  CaseSetup s;
  s.case_id = cfg.str("case");
  if (s.case_id.empty()) throw std::runtime_error("config: missing 'case'");

  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  if (cfg.has("mesh_file")) {
    std::ifstream f(cfg.str("mesh_file"));
    if (!f) throw std::runtime_error("config: cannot open mesh_file");
    read_mesh_text(f, nodes, tris);
  } else {
    generate_rect_mesh(cfg.num("xmin", 0), cfg.num("xmax", 1), cfg.num("ymin", 0),
                       cfg.num("ymax", 1), cfg.integer("nx", 8), cfg.integer("ny", 8), nodes,
                       tris);
  }
  StaggeredMesh::BuildOptions mo;
  const std::string bcx = cfg.str("bc_x", "periodic"), bcy = cfg.str("bc_y", "periodic");
  mo.periodic_x = bcx == "periodic";
  mo.periodic_y = bcy == "periodic";
  s.mesh = std::make_unique<StaggeredMesh>(StaggeredMesh::build(nodes, tris, mo));

  const int p = cfg.integer("p", 4);
  if (p < 0 || p > 4) throw std::runtime_error("config: p must be in [0,4]");
  s.ref = std::make_unique<ReferenceOperatorSet>(p);
  s.ops = std::make_unique<Operators>(*s.mesh, *s.ref);
  const bool walls = bcx == "wall" || bcy == "wall";
  s.bc = std::make_unique<EdgeConditions>(*s.mesh, walls ? EdgeKind::SlipWall : EdgeKind::Ghost);

  const int R = cfg.integer("imex_order", 2);
  s.tab = tableau(R);
  s.dt = cfg.num("dt", 0.1);
  s.t_end = cfg.num("t_end", 1.0);

  ModelParams par;
  par.nu = cfg.num("nu", 0);
  par.alpha = cfg.num("alpha", 0);
  par.kappa = cfg.num("kappa", 0);
  par.beta = cfg.num("beta", 0);
  par.gravity = cfg.num("gravity", 0);
  par.theta0 = cfg.num("theta0", 0);
  par.cg_tol = cfg.num("cg_tol", 1e-10);
  par.cg_maxit = cfg.integer("cg_maxit", 0);

  const std::string id = s.case_id;
  if (id == "nonlinear_transport" || id == "advdiff_erf" || id == "advdiff_varvel") {
    std::function<Vec2(const Vec2&)> vel;
    std::function<double(const Vec2&, double)> exact;
    if (id == "nonlinear_transport") {
      vel = [](const Vec2& x) { return Vec2(-x.x(), 0.0); };
      exact = [](const Vec2& x, double t) { return ExactSolutions::nonlinear_transport(x, t); };
    } else if (id == "advdiff_erf") {
      vel = [](const Vec2&) { return Vec2(0.2, 0.0); };
      exact = [k = par.kappa](const Vec2& x, double t) {
        return ExactSolutions::advdiff_erf(x, t, k);
      };
    } else {
      vel = [](const Vec2& x) { return Vec2(-x.x(), 0.0); };
      exact = [k = par.kappa](const Vec2& x, double t) {
        return ExactSolutions::advdiff_varvel(x, t, k);
      };
      s.error_region = [](const Vec2& x) { return std::abs(x.x()) <= 5.0; };
    }
    auto model = std::make_unique<AdvectionDiffusionModel>(*s.ops, *s.bc, par, vel);
    model->set_dirichlet(exact);
    s.fields.scalars.push_back(project_scalar(*s.ops, [&](const Vec2& x) { return exact(x, 0.0); }));
    s.exact = [exact](const Vec2& x, double t, int) { return exact(x, t); };
    s.model = std::move(model);
  } else if (id == "taylor_green") {
    auto model = std::make_unique<IncompressibleModel>(*s.ops, *s.bc, par, false);
    const double nu = par.nu, g = par.gravity;
    if (g != 0.0)
      model->set_momentum_source([nu, g](const Vec2& x, double t) {
        return ExactSolutions::taylor_green_source(x, t, nu, g);
      });
    s.fields.velocity = project_dual_function(*s.ops, *s.bc, [&](const Vec2& x, int c) {
      return ExactSolutions::taylor_green(x, 0.0, nu, g, c);
    });
    model->pressure() = project_scalar(
        *s.ops, [&](const Vec2& x) { return ExactSolutions::taylor_green(x, 0.0, nu, g, 2); });
    s.exact = [nu, g](const Vec2& x, double t, int c) {
      return ExactSolutions::taylor_green(x, t, nu, g, c);
    };
    s.error_on_velocity = true;
    s.model = std::move(model);
  } else if (id == "warm_bubble" || id == "density_current") {
    auto model = std::make_unique<IncompressibleModel>(*s.ops, *s.bc, par, true);
    std::function<double(const Vec2&)> theta0;
    if (id == "warm_bubble") {
      theta0 = [](const Vec2& x) {
        const double rb = 0.25, tb = 0.5;
        const double r = (x - Vec2(0.5, 0.3)).norm();
        return r > rb ? 0.0 : 0.5 * tb * (1.0 + std::cos(M_PI * r / rb));
      };
    } else {
      theta0 = [](const Vec2& x) {
        const double tb = -15.0;
        const double r = std::sqrt(std::pow((x.x() - 0.0) / 4.0, 2) + std::pow((x.y() - 3.0) / 2.0, 2));
        return r > 1.0 ? 0.0 : 0.5 * tb * (1.0 + std::cos(M_PI * r));
      };
    }
    s.fields.scalars.push_back(project_scalar(*s.ops, theta0));
    s.fields.velocity = DualField(s.mesh->num_edges(), 2, s.ref->dual_basis().size());
    s.model = std::move(model);
  } else {
    throw std::runtime_error("unknown case id: " + id);
  }
  return s;
}

double l2_error_main(const Operators& ops, const MainField& f,
                     const std::function<double(const Vec2&)>& exact,
                     const std::function<bool(const Vec2&)>& region) {
  const auto& mesh = ops.mesh();
  const auto& rule = ops.ref().volume_rule();
  const auto& phi = ops.ref().phi_at_volume();
  double acc = 0.0;
  for (int i = 0; i < mesh.num_elements(); ++i) {
    if (region && !region(mesh.centroid(i))) continue;
    const double* c = f.block(i, 0);
    double cell = 0.0;
    for (std::size_t g = 0; g < rule.points.size(); ++g) {
      double v = 0.0;
      for (int k = 0; k < ops.nphi(); ++k) v += phi(g, k) * c[k];
      const Vec2 x = mesh.elem_map(i).to_physical(rule.points[g]);
      cell += rule.weights[g] * std::pow(v - exact(x), 2);
    }
    acc += cell * mesh.jac_det(i);
  }
  return std::sqrt(acc);
}

double l2_error_dual(const Operators& ops, const DualField& v,
                     const std::function<double(const Vec2&, int)>& exact,
                     const std::function<bool(const Vec2&)>& region) {
  const auto& mesh = ops.mesh();
  const auto& rule = ops.ref().volume_rule();
  const auto& psiL = ops.ref().psi_at_volume_L();
  const auto& psiR = ops.ref().psi_at_volume_R();
  const int nq = ops.npsi();
  double acc = 0.0;
  for (int j = 0; j < mesh.num_edges(); ++j) {
    for (int side = 0; side < 2; ++side) {
      const int i = side == 0 ? mesh.left_of(j) : mesh.right_of(j);
      if (i < 0) continue;
      if (region && !region(mesh.centroid(i))) continue;
      const TriMap sub = mesh.dual_side_map(i, j);
      const auto& psi = side == 0 ? psiL : psiR;
      double cell = 0.0;
      for (std::size_t g = 0; g < rule.points.size(); ++g) {
        const Vec2 x = sub.to_physical(rule.points[g]);
        for (int c = 0; c < 2; ++c) {
          double val = 0.0;
          const double* co = v.block(j, c);
          for (int k = 0; k < nq; ++k) val += psi(g, k) * co[k];
          cell += rule.weights[g] * std::pow(val - exact(x, c), 2);
        }
      }
      acc += cell * sub.det;
    }
  }
  return std::sqrt(acc);
}

RunReport run_case(const RunConfig& cfg) {
  CaseSetup s = build_case(cfg);
  RunReport rep;
  rep.case_id = s.case_id;
  rep.r_in = s.mesh->mean_incircle_radius();

  double t = s.t0;
  if (cfg.has("resume")) {
    RunConfig dummy;
    MainField* pr = nullptr;
    if (auto* m = dynamic_cast<IncompressibleModel*>(s.model.get())) pr = &m->pressure();
    t = read_snapshot(cfg.str("resume"), dummy, s.fields, pr);
  }

  const std::string outdir = cfg.str("output_dir", "");
  const int every = cfg.integer("output_every", 0);
  if (!outdir.empty()) std::filesystem::create_directories(outdir);

  auto compute_error = [&](double tt) -> double {
    if (!s.exact) return -1.0;
    if (s.error_on_velocity)
      return l2_error_dual(*s.ops, *s.fields.velocity,
                           [&](const Vec2& x, int c) { return s.exact(x, tt, c); },
                           s.error_region);
    return l2_error_main(*s.ops, s.fields.scalars.at(0),
                         [&](const Vec2& x) { return s.exact(x, tt, 0); }, s.error_region);
  };
  rep.initial_error = compute_error(t);

  auto& counters = solve_counters();
  int step = 0;
  while (t < s.t_end - 1e-12 * std::max(1.0, s.t_end)) {
    const double dt = std::min(s.dt, s.t_end - t);
    const long d0 = counters.diffusion, p0 = counters.pressure;
    imex_step(*s.model, s.fields, s.tab, t, dt);
    t += dt;
    ++step;
    StepRecord r;
    r.t = t;
    r.diffusion_iters = int(counters.diffusion - d0);
    r.pressure_iters = int(counters.pressure - p0);
    if (s.fields.velocity) r.div_residual = divergence_residual(*s.ops, *s.bc, *s.fields.velocity);
    rep.records.push_back(r);
    if (!outdir.empty() && every > 0 && step % every == 0) {
      std::ostringstream name;
      name << outdir << "/snap_" << std::setfill('0') << std::setw(6) << step << ".txt";
      const MainField* pr = nullptr;
      if (auto* m = dynamic_cast<IncompressibleModel*>(s.model.get())) pr = &m->pressure();
      write_snapshot(name.str(), cfg, s.fields, pr, t);
      rep.outputs.push_back(name.str());
    }
  }
  rep.steps = step;
  rep.t_end = t;
  rep.l2_error = compute_error(t);

  // scalar range + plume diagnostics for the qualitative cases
  if (!s.fields.scalars.empty()) {
    const auto& th = s.fields.scalars[0];
    const auto& rule = s.ref->volume_rule();
    const auto& phi = s.ref->phi_at_volume();
    double tmin = 1e300, tmax = -1e300;
    double vy_sum = 0.0, w_sum = 0.0;
    for (int i = 0; i < s.mesh->num_elements(); ++i) {
      for (std::size_t g = 0; g < rule.points.size(); ++g) {
        double v = 0.0;
        for (int k = 0; k < s.ops->nphi(); ++k) v += phi(g, k) * th.at(i, 0, k);
        tmin = std::min(tmin, v);
        tmax = std::max(tmax, v);
        if (s.fields.velocity && v > 0.05) {
          const Vec2 x = s.mesh->elem_map(i).to_physical(rule.points[g]);
          const double w = rule.weights[g] * s.mesh->jac_det(i);
          vy_sum += w * s.ops->eval_dual(*s.fields.velocity, i, x, 1);
          w_sum += w;
        }
      }
    }
    rep.theta_min = tmin;
    rep.theta_max = tmax;
    rep.bubble_mean_vy = w_sum > 0 ? vy_sum / w_sum : 0.0;
  }

  if (!outdir.empty()) {
    const std::string vtk = outdir + "/final.vtk";
    const MainField* pr = nullptr;
    if (auto* m = dynamic_cast<IncompressibleModel*>(s.model.get())) pr = &m->pressure();
    export_fields_vtk(*s.ops, s.fields, pr, vtk);
    rep.outputs.push_back(vtk);
    const std::string snap = outdir + "/final_snapshot.txt";
    write_snapshot(snap, cfg, s.fields, pr, t);
    rep.outputs.push_back(snap);
  }
  return rep;
}

std::vector<ConvergenceRow> convergence_study(const RunConfig& base, int levels) {
  if (levels < 2) throw std::runtime_error("convergence_study: need at least 2 levels");
  std::vector<ConvergenceRow> rows;
  for (int k = 1; k <= levels; ++k) {
    RunConfig cfg = base;
    cfg.set("nx", std::to_string(base.integer("nx", 8) * k));
    cfg.set("ny", std::to_string(base.integer("ny", 8) * k));
    std::ostringstream dts;
    dts << std::setprecision(17) << base.num("dt", 0.1) / k;
    cfg.set("dt", dts.str());
    RunReport r = run_case(cfg);
    ConvergenceRow row;
    row.dt = base.num("dt", 0.1) / k;
    row.r_in = r.r_in;
    row.error = r.l2_error;
    if (rows.size() >= 1 && rows.back().error > 0 && row.error > 0)
      row.order = std::log(rows.back().error / row.error) / std::log(rows.back().dt / row.dt);
    rows.push_back(row);
  }
  return rows;
}

void print_convergence(std::ostream& os, const std::vector<ConvergenceRow>& rows) {
  os << std::scientific << std::setprecision(9);
  os << "dt            r_in          L2-error        order\n";
  for (const auto& r : rows) {
    os << std::setw(12) << r.dt << "  " << std::setprecision(2) << r.r_in << "  "
       << std::setprecision(9) << r.error << "  ";
    if (r.order != 0.0) os << std::fixed << std::setprecision(2) << r.order << std::scientific;
    else os << "  - ";
    os << "\n";
  }
}

void export_fields_vtk(const Operators& ops, const ImexFields& q, const MainField* pressure,
                       const std::string& path) {
  const auto& mesh = ops.mesh();
  const auto& nb = ops.ref().main_basis();
  const int p = std::max(1, nb.degree());
  // per-element lattice of the degree-p nodes, sub-triangulated
  std::vector<Vec2> lat;
  for (int jj = 0; jj <= p; ++jj)
    for (int ii = 0; ii + jj <= p; ++ii) lat.emplace_back(double(ii) / p, double(jj) / p);
  const int npt = static_cast<int>(lat.size());
  std::vector<std::array<int, 3>> sub;
  auto lid = [&](int ii, int jj) {
    int id = 0;
    for (int r = 0; r < jj; ++r) id += p + 1 - r;
    return id + ii;
  };
  for (int jj = 0; jj < p; ++jj)
    for (int ii = 0; ii + jj < p; ++ii) {
      sub.push_back({lid(ii, jj), lid(ii + 1, jj), lid(ii, jj + 1)});
      if (ii + jj < p - 1)
        sub.push_back({lid(ii + 1, jj), lid(ii + 1, jj + 1), lid(ii, jj + 1)});
    }

  std::ofstream f(path);
  if (!f) throw std::runtime_error("vtk export: cannot open " + path);
  f << "# vtk DataFile Version 3.0\n";
  f << "staggdg fields\n";
  f << "ASCII\n";
  f << "DATASET UNSTRUCTURED_GRID\n";
  const int ne = mesh.num_elements();
  f << "POINTS " << ne * npt << " double\n";
  f << std::setprecision(9);
  for (int i = 0; i < ne; ++i)
    for (const auto& xi : lat) {
      const Vec2 x = mesh.elem_map(i).to_physical(xi);
      f << x.x() << ' ' << x.y() << " 0\n";
    }
  f << "CELLS " << ne * sub.size() << ' ' << ne * sub.size() * 4 << '\n';
  for (int i = 0; i < ne; ++i)
    for (const auto& t : sub)
      f << "3 " << i * npt + t[0] << ' ' << i * npt + t[1] << ' ' << i * npt + t[2] << '\n';
  f << "CELL_TYPES " << ne * sub.size() << '\n';
  for (std::size_t k = 0; k < std::size_t(ne) * sub.size(); ++k) f << "5\n";
  f << "POINT_DATA " << ne * npt << '\n';

  auto scalar_array = [&](const std::string& name, const std::function<double(int, const Vec2&)>& g) {
    f << "SCALARS " << name << " double 1\nLOOKUP_TABLE default\n";
    for (int i = 0; i < ne; ++i)
      for (const auto& xi : lat) f << g(i, xi) << '\n';
  };
  if (!q.scalars.empty())
    scalar_array("scalar", [&](int i, const Vec2& xi) { return ops.eval_main(q.scalars[0], i, 0, xi); });
  if (pressure)
    scalar_array("pressure", [&](int i, const Vec2& xi) { return ops.eval_main(*pressure, i, 0, xi); });
  if (q.velocity) {
    f << "VECTORS velocity double\n";
    for (int i = 0; i < ne; ++i)
      for (const auto& xi : lat) {
        const Vec2 x = mesh.elem_map(i).to_physical(xi);
        f << ops.eval_dual(*q.velocity, i, x, 0) << ' ' << ops.eval_dual(*q.velocity, i, x, 1)
          << " 0\n";
      }
  }
}

void write_snapshot(const std::string& path, const RunConfig& cfg, const ImexFields& q,
                    const MainField* pressure, double t) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path);
  f << "staggdg-snapshot 1\n";
  f << std::setprecision(17);
  f << "t " << t << '\n';
  f << "config " << cfg.kv.size() << '\n';
  for (const auto& [k, v] : cfg.kv) f << k << '=' << v << '\n';
  f << "scalars " << q.scalars.size() << '\n';
  for (const auto& s : q.scalars) {
    f << s.cells << ' ' << s.comps << ' ' << s.ncoef << '\n';
    for (double v : s.a) f << v << '\n';
  }
  f << "velocity " << (q.velocity ? 1 : 0) << '\n';
  if (q.velocity) {
    f << q.velocity->cells << ' ' << q.velocity->comps << ' ' << q.velocity->ncoef << '\n';
    for (double v : q.velocity->a) f << v << '\n';
  }
  f << "pressure " << (pressure ? 1 : 0) << '\n';
  if (pressure) {
    f << pressure->cells << ' ' << pressure->comps << ' ' << pressure->ncoef << '\n';
    for (double v : pressure->a) f << v << '\n';
  }
}

double read_snapshot(const std::string& path, RunConfig& cfg_out, ImexFields& q,
                     MainField* pressure) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("snapshot: cannot open " + path);
  std::string magic;
  int version = 0;
  f >> magic >> version;
  if (magic != "staggdg-snapshot") throw std::runtime_error("snapshot: bad header");
  std::string key;
  double t = 0.0;
  f >> key >> t;
  std::size_t ncfg = 0;
  f >> key >> ncfg;
  std::string line;
  std::getline(f, line);
  for (std::size_t i = 0; i < ncfg; ++i) {
    std::getline(f, line);
    const auto eq = line.find('=');
    if (eq != std::string::npos) cfg_out.kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  std::size_t nsc = 0;
  f >> key >> nsc;
  q.scalars.resize(nsc);
  for (auto& s : q.scalars) {
    int cells, comps, ncoef;
    f >> cells >> comps >> ncoef;
    s = MainField(cells, comps, ncoef);
    for (double& v : s.a) f >> v;
  }
  int have = 0;
  f >> key >> have;
  if (have) {
    int cells, comps, ncoef;
    f >> cells >> comps >> ncoef;
    q.velocity = DualField(cells, comps, ncoef);
    for (double& v : q.velocity->a) f >> v;
  }
  f >> key >> have;
  if (have) {
    int cells, comps, ncoef;
    f >> cells >> comps >> ncoef;
    if (pressure) {
      *pressure = MainField(cells, comps, ncoef);
      for (double& v : pressure->a) f >> v;
    } else {
      double tmp;
      for (long k = 0; k < long(cells) * comps * ncoef; ++k) f >> tmp;
    }
  }
  if (!f) throw std::runtime_error("snapshot: truncated file");
  return t;
}

} // namespace staggdg
