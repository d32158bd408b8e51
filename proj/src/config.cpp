#include "vp/config.hpp"

#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace vp {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("bad numeric value for " + what + ": '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const long v = std::stol(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("");
    return v;
  } catch (...) {
    throw std::invalid_argument("bad integer value for " + what + ": '" + s + "'");
  }
}

}  // namespace

std::string format_g17(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

const std::string* IniDoc::find(const std::string& section, const std::string& key) const {
  for (const auto& [name, kvs] : sections)
    if (name == section)
      for (const auto& [k, v] : kvs)
        if (k == key) return &v;
  return nullptr;
}

IniDoc parse_ini(const std::string& text) {
  IniDoc doc;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  std::set<std::string> seen_sections;
  const std::vector<std::pair<std::string, std::string>>* cur = nullptr;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw std::invalid_argument("line " + std::to_string(lineno) +
                                                       ": malformed section header");
      const std::string name = trim(t.substr(1, t.size() - 2));
      if (name.empty() || !seen_sections.insert(name).second)
        throw std::invalid_argument("line " + std::to_string(lineno) +
                                    ": empty or duplicate section [" + name + "]");
      doc.sections.push_back({name, {}});
      cur = &doc.sections.back().second;
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || cur == nullptr)
      throw std::invalid_argument("line " + std::to_string(lineno) +
                                  ": expected 'key = value' inside a section");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("line " + std::to_string(lineno) +
                                                 ": empty key");
    auto& kvs = doc.sections.back().second;
    for (const auto& [k, v] : kvs)
      if (k == key)
        throw std::invalid_argument("line " + std::to_string(lineno) + ": duplicate key '" +
                                    key + "'");
    kvs.push_back({key, val});
  }
  return doc;
}

std::string serialize_ini(const IniDoc& doc) {
  std::string out;
  for (const auto& [name, kvs] : doc.sections) {
    out += "[" + name + "]\n";
    for (const auto& [k, v] : kvs) out += k + " = " + v + "\n";
    out += "\n";
  }
  return out;
}

void RunConfig::validate() const {
  phys.validate();
  sampling.validate();
  soft.validate();
  if (cutoffs.empty()) throw std::invalid_argument("cutoff list must be nonempty");
  for (int n : cutoffs)
    if (n < 1) throw std::invalid_argument("cutoffs must be >= 1");
  if (!(t_final > 0.0)) throw std::invalid_argument("t_final must be positive");
  if (!(dt > 0.0 && dt <= t_final)) throw std::invalid_argument("dt must be in (0, t_final]");
  if (!(c_tilde > 1.0)) throw std::invalid_argument("c_tilde must exceed 1");
  if (!(energy_r >= 1.0)) throw std::invalid_argument("energy_r must be >= 1");
  if (!(mu_spacing > 0.0 && mu_spacing <= energy_r / 2.0))
    throw std::invalid_argument("mu_spacing must be in (0, energy_r/2]");
  if (!(h_rho > 0.0)) throw std::invalid_argument("h_rho must be positive");
  if (probe_pairs < 0) throw std::invalid_argument("probe_pairs must be >= 0");
  const ParamRanges r = param_ranges(phys.epsilon);
  if (!gamma_auto && !r.gamma.contains(gamma) &&
      !(r.regime == Regime::Iterated))  // iterated gamma checked jointly below
    throw std::invalid_argument("gamma outside its interval");
  if (!delta_auto && r.regime == Regime::Iterated && !r.delta.contains(delta))
    throw std::invalid_argument("delta outside (0, 7/6 - 5(1-eps)/4)");
  if (!alpha_auto && !r.alpha.contains(alpha))
    throw std::invalid_argument("alpha outside ((5-eps)/9, 2/3)");
}

ParamBundle RunConfig::resolve_params() {
  const ParamRanges r = param_ranges(phys.epsilon);
  if (delta_auto) delta = r.regime == Regime::Direct ? 0.0 : r.delta.midpoint();
  Interval g = r.gamma;
  if (r.regime == Regime::Iterated)
    g = {std::max(0.0, r.beta - 2.0 / 3.0 + delta), (2.0 - r.beta) / 4.0};
  if (gamma_auto) gamma = g.midpoint();
  if (eta_auto) eta = r.eta_interval(gamma, delta).midpoint();
  if (alpha_auto) alpha = r.alpha.midpoint();
  gamma_auto = eta_auto = delta_auto = alpha_auto = false;
  ParamBundle b;
  b.epsilon = phys.epsilon;
  b.beta = r.beta;
  b.regime = r.regime;
  b.gamma = gamma;
  b.eta = eta;
  b.delta = delta;
  b.alpha = alpha;
  return b;
}

RunConfig parse_run_config(const std::string& text) {
  const IniDoc doc = parse_ini(text);
  RunConfig cfg;
  // strict schema: every present key must be known, every section recognized
  const std::map<std::string, std::set<std::string>> schema = {
      {"profile", {"kind", "c", "epsilon", "plateaus"}},
      {"physics", {"lambda", "c0", "c1"}},
      {"sampling", {"r_max", "h_x", "h_v", "seed", "weight_floor_rel"}},
      {"run",
       {"cutoffs", "t_final", "dt", "method", "theta", "softening", "c_tilde",
        "guard_frac", "snapshot_stride"}},
      {"params", {"gamma", "eta", "delta", "alpha"}},
      {"diagnostics", {"energy_r", "mu_spacing", "h_rho", "probe_pairs"}},
      {"output", {"dir"}},
  };
  for (const auto& [name, kvs] : doc.sections) {
    const auto it = schema.find(name);
    if (it == schema.end()) throw std::invalid_argument("unknown section [" + name + "]");
    for (const auto& [k, v] : kvs)
      if (!it->second.count(k))
        throw std::invalid_argument("unknown key '" + k + "' in section [" + name + "]");
  }
  auto get = [&doc](const char* sec, const char* key) { return doc.find(sec, key); };

  double prof_eps = cfg.profile.epsilon;
  if (const auto* v = get("profile", "epsilon")) prof_eps = to_double(*v, "profile.epsilon");
  std::string kind = "power_law";
  if (const auto* v = get("profile", "kind")) kind = *v;
  if (kind == "power_law") {
    double c = 1.0;
    if (const auto* v = get("profile", "c")) c = to_double(*v, "profile.c");
    cfg.profile = DecayProfile::power_law(c, prof_eps);
  } else if (kind == "sparse_plateaus") {
    const auto* v = get("profile", "plateaus");
    if (!v) throw std::invalid_argument("sparse_plateaus profile needs a plateaus key");
    std::istringstream in(*v);
    std::vector<Plateau> ps;
    double c, hw, h;
    while (in >> c >> hw >> h) ps.push_back({c, hw, h});
    if (ps.empty()) throw std::invalid_argument("plateaus list is empty");
    cfg.profile = DecayProfile::sparse_plateaus(std::move(ps));
    cfg.profile.epsilon = prof_eps;
  } else {
    throw std::invalid_argument("unknown profile kind '" + kind + "'");
  }
  cfg.phys.epsilon = prof_eps;
  if (const auto* v = get("physics", "lambda")) cfg.phys.lambda = to_double(*v, "lambda");
  if (const auto* v = get("physics", "c0")) cfg.phys.c0 = to_double(*v, "c0");
  if (const auto* v = get("physics", "c1")) cfg.phys.c1 = to_double(*v, "c1");
  if (const auto* v = get("sampling", "r_max")) cfg.sampling.r_max = to_double(*v, "r_max");
  if (const auto* v = get("sampling", "h_x")) cfg.sampling.h_x = to_double(*v, "h_x");
  if (const auto* v = get("sampling", "h_v")) cfg.sampling.h_v = to_double(*v, "h_v");
  if (const auto* v = get("sampling", "seed"))
    cfg.sampling.seed = static_cast<std::uint64_t>(to_long(*v, "seed"));
  if (const auto* v = get("sampling", "weight_floor_rel"))
    cfg.sampling.weight_floor_rel = to_double(*v, "weight_floor_rel");
  if (const auto* v = get("run", "cutoffs")) {
    std::istringstream in(*v);
    int n;
    cfg.cutoffs.clear();
    while (in >> n) cfg.cutoffs.push_back(n);
  }
  if (const auto* v = get("run", "t_final")) cfg.t_final = to_double(*v, "t_final");
  if (const auto* v = get("run", "dt")) cfg.dt = to_double(*v, "dt");
  double theta = cfg.method.theta;
  if (const auto* v = get("run", "theta")) theta = to_double(*v, "theta");
  if (const auto* v = get("run", "method")) {
    if (*v == "direct")
      cfg.method = FieldMethod::direct();
    else if (*v == "tree")
      cfg.method = FieldMethod::tree(theta);
    else
      throw std::invalid_argument("method must be direct or tree");
  } else {
    cfg.method = FieldMethod::tree(theta);
  }
  if (const auto* v = get("run", "softening")) cfg.soft.delta_s = to_double(*v, "softening");
  if (const auto* v = get("run", "c_tilde")) cfg.c_tilde = to_double(*v, "c_tilde");
  if (const auto* v = get("run", "guard_frac"))
    cfg.guard_frac = to_double(*v, "guard_frac");
  if (const auto* v = get("run", "snapshot_stride"))
    cfg.snapshot_stride = static_cast<int>(to_long(*v, "snapshot_stride"));
  auto param = [&](const char* key, double& val, bool& is_auto) {
    if (const auto* v = get("params", key)) {
      if (*v == "auto") {
        is_auto = true;
      } else {
        val = to_double(*v, key);
        is_auto = false;
      }
    }
  };
  param("gamma", cfg.gamma, cfg.gamma_auto);
  param("eta", cfg.eta, cfg.eta_auto);
  param("delta", cfg.delta, cfg.delta_auto);
  param("alpha", cfg.alpha, cfg.alpha_auto);
  if (const auto* v = get("diagnostics", "energy_r")) cfg.energy_r = to_double(*v, "energy_r");
  if (const auto* v = get("diagnostics", "mu_spacing"))
    cfg.mu_spacing = to_double(*v, "mu_spacing");
  if (const auto* v = get("diagnostics", "h_rho")) cfg.h_rho = to_double(*v, "h_rho");
  if (const auto* v = get("diagnostics", "probe_pairs"))
    cfg.probe_pairs = static_cast<int>(to_long(*v, "probe_pairs"));
  if (const auto* v = get("output", "dir")) cfg.out_dir = *v;
  cfg.validate();
  return cfg;
}

std::string serialize_run_config(const RunConfig& cfg) {
  IniDoc doc;
  doc.sections.push_back({"profile", {}});
  doc.sections.back().second = {
      {"kind", cfg.profile.kind == ProfileKind::PowerLaw ? "power_law" : "sparse_plateaus"},
      {"epsilon", format_g17(cfg.phys.epsilon)}};
  if (cfg.profile.kind == ProfileKind::PowerLaw) {
    doc.sections.back().second.push_back({"c", format_g17(cfg.profile.c)});
  } else {
    std::string ps;
    for (const auto& p : cfg.profile.plateaus) {
      if (!ps.empty()) ps += "  ";
      ps += format_g17(p.center) + " " + format_g17(p.halfwidth) + " " +
            format_g17(p.height);
    }
    doc.sections.back().second.push_back({"plateaus", ps});
  }
  doc.sections.push_back({"physics",
                          {{"lambda", format_g17(cfg.phys.lambda)},
                           {"c0", format_g17(cfg.phys.c0)},
                           {"c1", format_g17(cfg.phys.c1)}}});
  doc.sections.push_back(
      {"sampling",
       {{"r_max", format_g17(cfg.sampling.r_max)},
        {"h_x", format_g17(cfg.sampling.h_x)},
        {"h_v", format_g17(cfg.sampling.h_v)},
        {"seed", std::to_string(cfg.sampling.seed)},
        {"weight_floor_rel", format_g17(cfg.sampling.weight_floor_rel)}}});
  std::string cuts;
  for (int n : cfg.cutoffs) {
    if (!cuts.empty()) cuts += " ";
    cuts += std::to_string(n);
  }
  doc.sections.push_back(
      {"run",
       {{"cutoffs", cuts},
        {"t_final", format_g17(cfg.t_final)},
        {"dt", format_g17(cfg.dt)},
        {"method", cfg.method.kind == FieldMethod::Kind::Direct ? "direct" : "tree"},
        {"theta", format_g17(cfg.method.theta)},
        {"softening", format_g17(cfg.soft.delta_s)},
        {"c_tilde", format_g17(cfg.c_tilde)},
        {"guard_frac", format_g17(cfg.guard_frac)},
        {"snapshot_stride", std::to_string(cfg.snapshot_stride)}}});
  auto pv = [](double v, bool is_auto) { return is_auto ? std::string("auto") : format_g17(v); };
  doc.sections.push_back({"params",
                          {{"gamma", pv(cfg.gamma, cfg.gamma_auto)},
                           {"eta", pv(cfg.eta, cfg.eta_auto)},
                           {"delta", pv(cfg.delta, cfg.delta_auto)},
                           {"alpha", pv(cfg.alpha, cfg.alpha_auto)}}});
  doc.sections.push_back({"diagnostics",
                          {{"energy_r", format_g17(cfg.energy_r)},
                           {"mu_spacing", format_g17(cfg.mu_spacing)},
                           {"h_rho", format_g17(cfg.h_rho)},
                           {"probe_pairs", std::to_string(cfg.probe_pairs)}}});
  doc.sections.push_back({"output", {{"dir", cfg.out_dir}}});
  return serialize_ini(doc);
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str());
}

std::string config_hash(const RunConfig& cfg) {
  const std::string body = serialize_run_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : body) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_table(const std::string& path, const std::string& title,
                 const std::vector<std::string>& columns,
                 const std::vector<std::vector<double>>& rows) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open output file: " + path);
  out << "# " << title << "\n# columns:";
  for (const auto& c : columns) out << " " << c;
  out << "\n";
  for (const auto& row : rows) {
    if (row.size() != columns.size())
      throw std::invalid_argument("row width does not match the schema");
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? " " : "") << format_g17(row[i]);
    out << "\n";
  }
}

}  // namespace vp
