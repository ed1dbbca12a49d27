#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <polaron/branches.hpp>
#include <polaron/model.hpp>
#include <polaron/quadrature.hpp>

namespace polaron::cli {

struct RunSection {
  double p_max = 2.0;
  int p_points = 11;
  Vec direction;  // empty: e_1
  Vec p;          // fixed total momentum; empty: 0
  double q_max = 2.0;
  int q_points = 21;
  KappaRule kappa_rule;
  std::vector<double> kappa_list;  // alpha0; empty: just kappa_rule
  std::optional<double> lambda2_margin;
  double lambda2_margin_factor = 10.0;
  std::vector<double> alpha_ladder = {0.2, 0.1, 0.05};
  int neumann_order = 1;
  std::vector<double> deltas = {0.1, 0.03, 0.01};
  double boundary_rmax = 0.0;
  double tol = 1e-12;
  double margin = 1e-6;
  RootMethod method = RootMethod::toms748;
  std::uint64_t seed = 0;
  int validate_budget = 10000;
  int n_max = 2;
  std::vector<int> oracle_q;  // lattice rows; empty: the row nearest q = 0
  std::string oracle_dump;
  double k_max = 1.0;
  int k_points = 6;
  Vec gamma_q;      // empty: 0
  Vec gamma_shift;  // empty: 0.3 along a direction perpendicular to `direction`
};

struct RunConfig {
  std::string path;
  ModelParams model;
  QuadratureSpec quad;  // continuum rule, or the lattice in discrete mode
  bool discrete = false;
  double grid_lambda = 3.0;
  int grid_points = 5;
  RunSection run;
  // every key as written, for the run record
  std::map<std::string, std::map<std::string, std::string>> raw;

  DiscreteMeasure measure() const;
  BranchOptions branch_options() const;
  Vec direction() const;
  Vec fixed_p() const;
};

RunConfig load_config(const std::string& path);
RunConfig parse_config(const std::string& text, const std::string& base_dir = ".");

}  // namespace polaron::cli
