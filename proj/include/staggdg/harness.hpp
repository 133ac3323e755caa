#pragma once

#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "staggdg/models.hpp"

namespace staggdg {

/// Flat key=value run configuration with CLI overrides.
struct RunConfig {
  std::map<std::string, std::string> kv;

  static RunConfig from_file(const std::string& path);
  static RunConfig case_defaults(const std::string& case_id);
  void set(const std::string& key, const std::string& value) { kv[key] = value; }

  std::string str(const std::string& key, const std::string& fallback = "") const;
  double num(const std::string& key, double fallback) const;
  int integer(const std::string& key, int fallback) const;
  bool has(const std::string& key) const { return kv.count(key) != 0; }
};

struct StepRecord {
  double t = 0.0;
  int diffusion_iters = 0;
  int pressure_iters = 0;
  double div_residual = 0.0;
};

struct RunReport {
  std::string case_id;
  double t_end = 0.0;
  int steps = 0;
  double l2_error = -1.0;        // against the case's exact solution, when defined
  double initial_error = -1.0;   // projection error of the initial condition
  double r_in = 0.0;             // mean incircle radius
  std::vector<StepRecord> records;
  std::vector<std::string> outputs;  // files written
  double theta_min = 0.0, theta_max = 0.0;  // scalar range (bubble/dc diagnostics)
  double bubble_mean_vy = 0.0;              // mean vertical velocity where theta > 0
};

/// Assembled per-run objects; kept alive together.
struct CaseSetup {
  std::unique_ptr<StaggeredMesh> mesh;
  std::unique_ptr<ReferenceOperatorSet> ref;
  std::unique_ptr<Operators> ops;
  std::unique_ptr<EdgeConditions> bc;
  std::unique_ptr<PhysicsModel> model;
  ImexFields fields;
  ButcherPair tab;
  double dt = 0.0, t_end = 0.0, t0 = 0.0;
  std::string case_id;
  // evaluates the exact solution during error computation; null if undefined
  std::function<double(const Vec2&, double, int)> exact;  // comp: scalar 0 / velocity 0,1
  bool error_on_velocity = false;
  std::function<bool(const Vec2&)> error_region;  // null: whole domain
};

CaseSetup build_case(const RunConfig& cfg);
RunReport run_case(const RunConfig& cfg);

/// sqrt of the integrated squared mismatch over the (masked) domain;
/// main-grid scalar version and dual-grid velocity version
double l2_error_main(const Operators& ops, const MainField& f,
                     const std::function<double(const Vec2&)>& exact,
                     const std::function<bool(const Vec2&)>& region = nullptr);
double l2_error_dual(const Operators& ops, const DualField& v,
                     const std::function<double(const Vec2&, int)>& exact,
                     const std::function<bool(const Vec2&)>& region = nullptr);

struct ConvergenceRow {
  double dt = 0.0;
  double r_in = 0.0;
  double error = 0.0;
  double order = 0.0;  // defined from the second row
};

std::vector<ConvergenceRow> convergence_study(const RunConfig& base, int levels);
void print_convergence(std::ostream& os, const std::vector<ConvergenceRow>& rows);

/// Legacy-VTK unstructured grid export of the nodal lattice per element.
void export_fields_vtk(const Operators& ops, const ImexFields& q, const MainField* pressure,
                       const std::string& path);

/// Text snapshot (full state + config echo) and resume.
void write_snapshot(const std::string& path, const RunConfig& cfg, const ImexFields& q,
                    const MainField* pressure, double t);
double read_snapshot(const std::string& path, RunConfig& cfg_out, ImexFields& q,
                     MainField* pressure);

} // namespace staggdg
