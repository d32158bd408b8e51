#pragma once

#include <map>
#include <string>
#include <vector>

#include "vp/estimates.hpp"
#include "vp/field.hpp"
#include "vp/phase_space.hpp"

namespace vp {

/// Ordered section -> ordered (key, value) list. Strict: every line is a section
/// header, a key = value pair, a comment (#), or blank; duplicates rejected.
struct IniDoc {
  std::vector<std::pair<std::string, std::vector<std::pair<std::string, std::string>>>>
      sections;

  const std::string* find(const std::string& section, const std::string& key) const;
};

IniDoc parse_ini(const std::string& text);
std::string serialize_ini(const IniDoc& doc);

struct RunConfig {
  DecayProfile profile;
  PhysParams phys;
  SamplingSpec sampling;
  std::vector<int> cutoffs;
  double t_final = 0.5;
  double dt = 0.01;
  FieldMethod method = FieldMethod::tree(0.3);
  Softening soft{0.05};
  double c_tilde = 2.0;
  double guard_frac = 0.25;
  int snapshot_stride = 0;

  // "auto" resolves to the interval midpoint for the regime; resolved values recorded
  double gamma = -1.0, eta = -1.0, delta = -1.0, alpha = -1.0;
  bool gamma_auto = true, eta_auto = true, delta_auto = true, alpha_auto = true;

  double energy_r = 2.0;      // mollifier scale for local-energy diagnostics
  double mu_spacing = 1.0;    // q_sup grid spacing
  double h_rho = 1.0;         // density grid cell size
  int probe_pairs = 8;

  std::string out_dir = "out";

  void validate() const;
  /// Fills any auto parameters with interval midpoints (delta-aware in the iterated
  /// regime) and returns the resulting bundle skeleton (p/q/c2 unset).
  ParamBundle resolve_params();
};

RunConfig parse_run_config(const std::string& text);
std::string serialize_run_config(const RunConfig& cfg);
RunConfig load_run_config(const std::string& path);

/// FNV-1a over the canonical serialized config, hex string.
std::string config_hash(const RunConfig& cfg);

/// Columnar text table: '# <title>' line, '# columns: <names>' schema line, then
/// space-separated rows at 17 significant digits.
void write_table(const std::string& path, const std::string& title,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows);

std::string format_g17(double x);

}  // namespace vp
