#include "mnar/config.hpp"

#include <fstream>
#include <sstream>

#include "mnar/errors.hpp"

namespace mnar {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(lineno) +
                        ": expected 'key = value'");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_string(ss.str());
}

bool KeyValueConfig::has(const std::string& key) const {
  return index_.count(key) > 0;
}

std::string KeyValueConfig::get(const std::string& key) const {
  auto it = index_.find(key);
  if (it == index_.end()) throw ConfigError("missing config key: " + key);
  return entries_[it->second].second;
}

std::string KeyValueConfig::get_or(const std::string& key,
                                   const std::string& fallback) const {
  return has(key) ? get(key) : fallback;
}

double KeyValueConfig::get_double(const std::string& key) const {
  try {
    return std::stod(get(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected a number, got '" +
                      get(key) + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key) const {
  try {
    return std::stoi(get(key));
  } catch (const ConfigError&) {
    throw;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected an integer");
  }
}

bool KeyValueConfig::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  const std::string v = get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("config key '" + key + "': expected a boolean");
}

Eigen::VectorXd KeyValueConfig::get_vector(const std::string& key) const {
  const auto parts = split(get(key), ',');
  Eigen::VectorXd out(parts.size());
  for (std::size_t i = 0; i < parts.size(); ++i) {
    try {
      out(i) = std::stod(parts[i]);
    } catch (const std::exception&) {
      throw ConfigError("config key '" + key + "': bad vector entry '" +
                        parts[i] + "'");
    }
  }
  return out;
}

std::vector<std::string> KeyValueConfig::get_list(const std::string& key) const {
  return split(get(key), ',');
}

Eigen::MatrixXd KeyValueConfig::get_matrix(const std::string& key) const {
  const auto rows = split(get(key), ';');
  if (rows.empty()) throw ConfigError("config key '" + key + "': empty matrix");
  std::vector<Eigen::VectorXd> parsed;
  for (const auto& r : rows) {
    const auto parts = split(r, ',');
    Eigen::VectorXd v(parts.size());
    for (std::size_t i = 0; i < parts.size(); ++i) {
      try {
        v(i) = std::stod(parts[i]);
      } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': bad matrix entry '" +
                          parts[i] + "'");
      }
    }
    if (!parsed.empty() && v.size() != parsed.front().size())
      throw ConfigError("config key '" + key + "': ragged matrix rows");
    parsed.push_back(v);
  }
  Eigen::MatrixXd out(parsed.size(), parsed.front().size());
  for (std::size_t i = 0; i < parsed.size(); ++i) out.row(i) = parsed[i];
  return out;
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  auto it = index_.find(key);
  if (it != index_.end()) {
    entries_[it->second].second = value;
    return;
  }
  index_[key] = static_cast<int>(entries_.size());
  entries_.emplace_back(key, value);
}

void KeyValueConfig::set_double(const std::string& key, double value) {
  std::ostringstream ss;
  ss.precision(17);
  ss << value;
  set(key, ss.str());
}

void KeyValueConfig::set_vector(const std::string& key,
                                const Eigen::VectorXd& value) {
  std::ostringstream ss;
  ss.precision(17);
  for (Eigen::Index i = 0; i < value.size(); ++i) {
    if (i) ss << ",";
    ss << value(i);
  }
  set(key, ss.str());
}

std::string KeyValueConfig::serialize() const {
  std::ostringstream ss;
  for (const auto& [k, v] : entries_) ss << k << " = " << v << "\n";
  return ss.str();
}

void KeyValueConfig::write_file(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << serialize();
}

namespace {

// Basis spec text: "intercept,u0,u2,z1" with uJ/zJ indexing the blocks.
LinearBasis parse_basis(const std::string& text, int p_u, int p_z,
                        const std::string& key) {
  LinearBasis b;
  b.intercept = false;
  for (const auto& term : split(text, ',')) {
    if (term == "intercept" || term == "1") {
      b.intercept = true;
    } else if (term.size() > 1 && term[0] == 'u') {
      const int j = std::stoi(term.substr(1));
      if (j < 0 || j >= p_u)
        throw ConfigError(key + ": u index out of range: " + term);
      b.u_cols.push_back(j);
    } else if (term.size() > 1 && term[0] == 'z') {
      const int j = std::stoi(term.substr(1));
      if (j < 0 || j >= p_z)
        throw ConfigError(key + ": z index out of range: " + term);
      b.z_cols.push_back(j);
    } else {
      throw ConfigError(key + ": unknown basis term '" + term + "'");
    }
  }
  return b;
}

std::string basis_to_text(const LinearBasis& b) {
  std::string out;
  if (b.intercept) out = "intercept";
  for (int j : b.u_cols) out += (out.empty() ? "" : ",") + ("u" + std::to_string(j));
  for (int j : b.z_cols) out += (out.empty() ? "" : ",") + ("z" + std::to_string(j));
  return out;
}

}  // namespace

ResponseModel response_model_from_config(const KeyValueConfig& cfg, int p_u) {
  const LinkFunction link = LinkFunction::parse(cfg.get("response.link"));
  LinearBasis h;
  if (cfg.has("response.h.basis")) {
    h = parse_basis(cfg.get("response.h.basis"), p_u, 0, "response.h.basis");
  } else {
    h = LinearBasis::intercept_and_all(p_u, 0);
  }
  LinearBasis g;
  const std::string gspec = cfg.get_or("response.g", "constant");
  if (gspec == "constant") {
    g.intercept = true;
  } else {
    g = parse_basis(gspec, p_u, 0, "response.g");
  }
  const std::string m = cfg.get_or("response.m", "identity");
  if (m != "identity")
    throw ConfigError("response.m: only 'identity' is supported");
  Eigen::VectorXd alpha = cfg.has("response.alpha")
                              ? cfg.get_vector("response.alpha")
                              : Eigen::VectorXd::Zero(h.dim());
  Eigen::VectorXd beta = cfg.has("response.beta")
                             ? cfg.get_vector("response.beta")
                             : Eigen::VectorXd::Zero(g.dim());
  return ResponseModel(link, h, alpha, g, beta);
}

OutcomeModel outcome_model_from_config(const KeyValueConfig& cfg, int p_u,
                                       int p_z) {
  const std::string fam = cfg.get("outcome.family");
  OutcomeFamily family;
  if (fam == "normal") {
    family = OutcomeFamily::Normal;
  } else if (fam == "bernoulli") {
    family = OutcomeFamily::Bernoulli;
  } else {
    throw ConfigError("outcome.family: expected normal|bernoulli");
  }
  LinearBasis b = cfg.has("outcome.mean.basis")
                      ? parse_basis(cfg.get("outcome.mean.basis"), p_u, p_z,
                                    "outcome.mean.basis")
                      : LinearBasis::intercept_and_all(p_u, p_z);
  MeanStructure mean = MeanStructure::from_linear(b);
  Eigen::VectorXd kappa = cfg.has("outcome.kappa")
                              ? cfg.get_vector("outcome.kappa")
                              : Eigen::VectorXd::Zero(b.dim());
  const double sigma2 =
      family == OutcomeFamily::Normal ? cfg.get_double("outcome.sigma2") : 1.0;
  return OutcomeModel(family, mean, kappa, sigma2);
}

void response_model_to_config(const ResponseModel& model, KeyValueConfig& cfg) {
  cfg.set("response.link", model.link().name());
  cfg.set("response.h.basis", basis_to_text(model.h_basis()));
  const LinearBasis& g = model.g_basis();
  cfg.set("response.g", (g.intercept && g.u_cols.empty() && g.z_cols.empty())
                            ? "constant"
                            : basis_to_text(g));
  cfg.set("response.m", "identity");
  cfg.set_vector("response.alpha", model.alpha());
  cfg.set_vector("response.beta", model.beta());
}

void outcome_model_to_config(const OutcomeModel& model, KeyValueConfig& cfg) {
  cfg.set("outcome.family", model.family() == OutcomeFamily::Normal
                                ? "normal"
                                : "bernoulli");
  if (model.mean_structure().kind != MeanStructure::Kind::Linear)
    throw ConfigError("spline mean structures are fitted, not configured");
  cfg.set("outcome.mean.basis", basis_to_text(model.mean_structure().linear));
  cfg.set_vector("outcome.kappa", model.kappa());
  if (model.family() == OutcomeFamily::Normal)
    cfg.set_double("outcome.sigma2", model.sigma2());
}

ColumnRoles roles_from_config(const KeyValueConfig& cfg) {
  ColumnRoles roles;
  roles.outcome = cfg.get("data.outcome");
  roles.indicator = cfg.get("data.indicator");
  roles.covariates = cfg.get_list("data.covariates");
  if (cfg.has("data.instruments"))
    roles.instruments = cfg.get_list("data.instruments");
  return roles;
}

}  // namespace mnar
