#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>

#include "staggdg/harness.hpp"

using namespace staggdg;

namespace {

void apply_overrides(RunConfig& cfg, const std::vector<std::string>& sets) {
  for (const auto& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw std::runtime_error("--set expects key=value, got: " + s);
    cfg.set(s.substr(0, eq), s.substr(eq + 1));
  }
}

void print_report(std::ostream& os, const RunReport& r, bool per_step) {
  os << std::scientific << std::setprecision(9);
  if (per_step)
    for (const auto& rec : r.records)
      os << "step t=" << rec.t << " diffusion_solves=" << rec.diffusion_iters
         << " pressure_solves=" << rec.pressure_iters << " div_residual=" << rec.div_residual
         << "\n";
  os << "{\n";
  os << "  \"case\": \"" << r.case_id << "\",\n";
  os << "  \"steps\": " << r.steps << ",\n";
  os << "  \"t_end\": " << r.t_end << ",\n";
  os << "  \"r_in\": " << r.r_in << ",\n";
  os << "  \"initial_error\": " << r.initial_error << ",\n";
  os << "  \"l2_error\": " << r.l2_error << ",\n";
  os << "  \"theta_min\": " << r.theta_min << ",\n";
  os << "  \"theta_max\": " << r.theta_max << ",\n";
  os << "  \"bubble_mean_vy\": " << r.bubble_mean_vy << "\n";
  os << "}\n";
}

int run_selftest() {
  // operator identity spot checks
  std::vector<Vec2> nodes;
  std::vector<std::array<int, 3>> tris;
  generate_rect_mesh(0, 1, 0, 1, 4, 4, nodes, tris);
  auto mesh = StaggeredMesh::build(nodes, tris);
  int failures = 0;
  for (int p : {1, 2}) {
    ReferenceOperatorSet ref(p);
    Operators ops(mesh, ref);
    double worst_dq = 0.0, worst_gauss = 0.0;
    for (int i = 0; i < mesh.num_elements(); ++i) {
      Eigen::VectorXd gauss[2] = {Eigen::VectorXd::Zero(ref.nphi()),
                                  Eigen::VectorXd::Zero(ref.nphi())};
      for (int s = 0; s < 3; ++s) {
        const int j = mesh.edges_of(i)[s];
        for (int c = 0; c < 2; ++c) {
          const MatrixXd D = ops.assemble_divergence(i, j, c);
          const MatrixXd Q = ops.assemble_gradient(i, j, c);
          worst_dq = std::max(worst_dq, (D + Q.transpose()).cwiseAbs().maxCoeff());
          gauss[c] += D * Eigen::VectorXd::Ones(ref.npsi());
        }
      }
      worst_gauss = std::max({worst_gauss, gauss[0].cwiseAbs().maxCoeff(),
                              gauss[1].cwiseAbs().maxCoeff()});
    }
    const bool ok = worst_dq < 1e-12 && worst_gauss < 1e-12;
    std::cout << (ok ? "PASS" : "FAIL") << " p=" << p << " max|D+Q^T|=" << worst_dq
              << " max|sum D 1|=" << worst_gauss << "\n";
    if (!ok) ++failures;
  }
  return failures == 0 ? 0 : 2;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"staggered semi-Lagrangian IMEX DG solver"};
  app.require_subcommand(1);

  std::string config_path, snapshot_path, out_path;
  std::vector<std::string> sets;
  int levels = 4;
  bool per_step = false;

  auto* run = app.add_subcommand("run", "run a single case");
  run->add_option("config", config_path, "key=value config file")->required();
  run->add_option("--set", sets, "override key=value");
  run->add_flag("--per-step", per_step, "print one line per step");

  auto* conv = app.add_subcommand("converge", "joint dt/mesh refinement study");
  conv->add_option("config", config_path, "key=value config file")->required();
  conv->add_option("--levels", levels, "number of refinement levels");
  conv->add_option("--set", sets, "override key=value");

  auto* exp = app.add_subcommand("export", "export a snapshot to legacy VTK");
  exp->add_option("snapshot", snapshot_path, "snapshot file")->required();
  exp->add_option("vtk", out_path, "output .vtk path")->required();

  auto* st = app.add_subcommand("selftest", "operator identity checks");
  (void)st;

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("selftest")) return run_selftest();
    if (app.got_subcommand("run")) {
      RunConfig cfg = RunConfig::from_file(config_path);
      apply_overrides(cfg, sets);
      RunReport rep = run_case(cfg);
      print_report(std::cout, rep, per_step);
      return 0;
    }
    if (app.got_subcommand("converge")) {
      RunConfig cfg = RunConfig::from_file(config_path);
      apply_overrides(cfg, sets);
      auto rows = convergence_study(cfg, levels);
      print_convergence(std::cout, rows);
      return 0;
    }
    if (app.got_subcommand("export")) {
      RunConfig cfg;
      ImexFields q;
      MainField pressure;
      read_snapshot(snapshot_path, cfg, q, &pressure);
      CaseSetup s = build_case(cfg);
      export_fields_vtk(*s.ops, q, pressure.cells ? &pressure : nullptr, out_path);
      std::cout << "wrote " << out_path << "\n";
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 3;
  } catch (const std::runtime_error& e) {
    const std::string what = e.what();
    std::cerr << "error: " << what << "\n";
    if (what.find("config") != std::string::npos || what.find("unknown case") != std::string::npos)
      return 3;
    return 2;
  }
  return 0;
}
