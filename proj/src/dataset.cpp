#include "mnar/dataset.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "mnar/errors.hpp"

namespace mnar {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_field(const std::string& s, const std::string& col, int row) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw SchemaError("row " + std::to_string(row) + ": cannot parse '" + s +
                      "' in column " + col);
  }
}

int find_column(const std::vector<std::string>& header,
                const std::string& name) {
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == name) return static_cast<int>(j);
  throw SchemaError("column '" + name + "' not found in CSV header");
}

}  // namespace

int Dataset::n_obs() const {
  int c = 0;
  for (auto d : delta) c += d;
  return c;
}

std::vector<int> Dataset::observed_rows() const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (delta[i]) out.push_back(i);
  return out;
}

std::vector<int> Dataset::missing_rows() const {
  std::vector<int> out;
  for (int i = 0; i < n(); ++i)
    if (!delta[i]) out.push_back(i);
  return out;
}

void Dataset::validate(bool require_instrument) const {
  if (n() < 1) throw SchemaError("dataset is empty");
  if (u.rows() != n() || y.size() != n() ||
      (z.size() > 0 && z.rows() != n()))
    throw SchemaError("dataset blocks have inconsistent row counts");
  for (int i = 0; i < n(); ++i) {
    const bool present = std::isfinite(y(i));
    if (present && !delta[i])
      throw SchemaError("row " + std::to_string(i) +
                        ": y present but delta = 0");
    if (!present && delta[i])
      throw SchemaError("row " + std::to_string(i) +
                        ": y missing but delta = 1");
  }
  if (n_obs() < 1) throw SchemaError("dataset has no respondents");
  if (require_instrument && p_z() < 1)
    throw SchemaError("no instrument column declared");
}

Dataset Dataset::subset(const std::vector<int>& rows) const {
  Dataset out;
  const auto m = static_cast<int>(rows.size());
  out.u.resize(m, u.cols());
  out.z.resize(m, z.cols());
  out.y.resize(m);
  out.delta.resize(m);
  for (int i = 0; i < m; ++i) {
    out.u.row(i) = u.row(rows[i]);
    if (z.cols()) out.z.row(i) = z.row(rows[i]);
    out.y(i) = y(rows[i]);
    out.delta[i] = delta[rows[i]];
  }
  out.u_names = u_names;
  out.z_names = z_names;
  out.y_name = y_name;
  out.standardization = standardization;
  return out;
}

Dataset Dataset::standardized(bool include_y) const {
  Dataset out = *this;
  Standardization rec;
  rec.applied = true;
  auto col_stats = [](const Eigen::VectorXd& c) {
    const double m = c.mean();
    double sd = std::sqrt((c.array() - m).square().sum() /
                          std::max<double>(1.0, c.size() - 1.0));
    if (!(sd > 0.0)) sd = 1.0;  // constant column left unscaled
    return std::make_pair(m, sd);
  };
  rec.u_mean.resize(p_u());
  rec.u_sd.resize(p_u());
  for (int j = 0; j < p_u(); ++j) {
    auto [m, sd] = col_stats(u.col(j));
    rec.u_mean(j) = m;
    rec.u_sd(j) = sd;
    out.u.col(j) = (u.col(j).array() - m) / sd;
  }
  rec.z_mean.resize(p_z());
  rec.z_sd.resize(p_z());
  for (int j = 0; j < p_z(); ++j) {
    auto [m, sd] = col_stats(z.col(j));
    rec.z_mean(j) = m;
    rec.z_sd(j) = sd;
    out.z.col(j) = (z.col(j).array() - m) / sd;
  }
  // y moments over respondents only; missing entries stay NaN
  if (include_y) {
    std::vector<int> obs = observed_rows();
    Eigen::VectorXd yo(obs.size());
    for (std::size_t k = 0; k < obs.size(); ++k) yo(k) = y(obs[k]);
    auto [ym, ysd] = col_stats(yo);
    rec.y_mean = ym;
    rec.y_sd = ysd;
    for (int i = 0; i < n(); ++i)
      if (delta[i]) out.y(i) = (y(i) - ym) / ysd;
  }
  out.standardization = rec;
  return out;
}

Dataset read_dataset_csv(const std::string& path, const ColumnRoles& roles) {
  std::ifstream in(path);
  if (!in) throw SchemaError("cannot open CSV file: " + path);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("CSV file is empty: " + path);
  const std::vector<std::string> header = split_csv_line(line);

  const int y_col = find_column(header, roles.outcome);
  const int d_col = find_column(header, roles.indicator);
  std::vector<int> u_cols, z_cols;
  for (const auto& name : roles.covariates)
    u_cols.push_back(find_column(header, name));
  for (const auto& name : roles.instruments)
    z_cols.push_back(find_column(header, name));

  std::vector<double> ys;
  std::vector<std::uint8_t> deltas;
  std::vector<std::vector<double>> us(u_cols.size()), zs(z_cols.size());
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    ++row;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw SchemaError("row " + std::to_string(row) + ": expected " +
                        std::to_string(header.size()) + " fields, got " +
                        std::to_string(fields.size()));
    const double d = parse_field(fields[d_col], roles.indicator, row);
    if (d != 0.0 && d != 1.0)
      throw SchemaError("row " + std::to_string(row) +
                        ": indicator must be 0 or 1");
    const std::string& yf = fields[y_col];
    if (d == 1.0) {
      if (yf.empty())
        throw SchemaError("row " + std::to_string(row) +
                          ": y missing but delta = 1");
      ys.push_back(parse_field(yf, roles.outcome, row));
    } else {
      if (!yf.empty())
        throw SchemaError("row " + std::to_string(row) +
                          ": y present but delta = 0");
      ys.push_back(std::numeric_limits<double>::quiet_NaN());
    }
    deltas.push_back(static_cast<std::uint8_t>(d));
    for (std::size_t k = 0; k < u_cols.size(); ++k)
      us[k].push_back(parse_field(fields[u_cols[k]], roles.covariates[k], row));
    for (std::size_t k = 0; k < z_cols.size(); ++k)
      zs[k].push_back(
          parse_field(fields[z_cols[k]], roles.instruments[k], row));
  }

  Dataset data;
  const int n = row;
  data.u.resize(n, us.size());
  data.z.resize(n, zs.size());
  data.y.resize(n);
  data.delta = std::move(deltas);
  for (std::size_t k = 0; k < us.size(); ++k)
    data.u.col(k) = Eigen::Map<Eigen::VectorXd>(us[k].data(), n);
  for (std::size_t k = 0; k < zs.size(); ++k)
    data.z.col(k) = Eigen::Map<Eigen::VectorXd>(zs[k].data(), n);
  data.y = Eigen::Map<Eigen::VectorXd>(ys.data(), n);
  data.u_names = roles.covariates;
  data.z_names = roles.instruments;
  data.y_name = roles.outcome;
  data.validate(false);
  return data;
}

void write_dataset_csv(const std::string& path, const Dataset& data,
                       const std::string& indicator_name) {
  std::ofstream out(path);
  if (!out) throw SchemaError("cannot write CSV file: " + path);
  for (const auto& nm : data.u_names) out << nm << ",";
  for (const auto& nm : data.z_names) out << nm << ",";
  out << data.y_name << "," << indicator_name << "\n";
  out.precision(17);
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.p_u(); ++j) out << data.u(i, j) << ",";
    for (int j = 0; j < data.p_z(); ++j) out << data.z(i, j) << ",";
    if (data.delta[i]) out << data.y(i);
    out << "," << int(data.delta[i]) << "\n";
  }
}

}  // namespace mnar
