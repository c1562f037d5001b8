#include "mnar/reports.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "mnar/errors.hpp"

namespace mnar {

std::string format_double(double v, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
  return buf;
}

std::string fit_result_to_csv(const FitResult& fit) {
  std::ostringstream ss;
  ss << "parameter,estimate,se,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < fit.parameter_names.size(); ++i) {
    ss << fit.parameter_names[i] << "," << format_double(fit.estimates(i))
       << "," << format_double(fit.standard_errors(i)) << ","
       << format_double(fit.normal_ci(i, 0)) << ","
       << format_double(fit.normal_ci(i, 1)) << "\n";
  }
  return ss.str();
}

std::string fit_result_to_markdown(const FitResult& fit) {
  std::ostringstream ss;
  ss << "| Parameter | Estimate | Standard error |\n";
  ss << "|---|---|---|\n";
  for (std::size_t i = 0; i < fit.parameter_names.size(); ++i) {
    ss << "| " << fit.parameter_names[i] << " | "
       << format_double(fit.estimates(i), 4) << " | "
       << format_double(fit.standard_errors(i), 4) << " |\n";
  }
  ss << "\nmethod: " << fit.method_tag
     << ", bootstrap B = " << fit.bootstrap_B
     << " (failures: " << fit.bootstrap_failures << ")\n";
  return ss.str();
}

namespace {

std::string cell_csv_row(const McReport& rep, const McCell& c) {
  std::ostringstream ss;
  ss << rep.scenario << "," << c.estimand << "," << format_double(rep.kappa2)
     << "," << c.method << "," << format_double(c.bias) << ","
     << format_double(c.rmse) << ","
     << (c.coverage ? format_double(*c.coverage) : std::string("NA")) << ","
     << format_double(c.bias_mcse) << "," << format_double(c.rmse_mcse) << ","
     << (c.coverage_mcse ? format_double(*c.coverage_mcse) : std::string("NA"))
     << "," << c.n_replicates;
  return ss.str();
}

std::vector<std::string> split_line(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(item);
  return out;
}

}  // namespace

std::string mc_report_to_csv(const McReport& rep) {
  std::ostringstream ss;
  ss << "scenario,parameter,kappa2,method,bias,rmse,cr,bias_mcse,rmse_mcse,"
        "cr_mcse,replicates\n";
  for (const auto& c : rep.cells) ss << cell_csv_row(rep, c) << "\n";
  return ss.str();
}

std::string mc_report_to_markdown(const McReport& rep) {
  std::ostringstream ss;
  ss << "| Scenario | Parameter | kappa2 | Method | Bias | RMSE | CR |\n";
  ss << "|---|---|---|---|---|---|---|\n";
  for (const auto& c : rep.cells) {
    ss << "| " << rep.scenario << " | " << c.estimand << " | "
       << format_double(rep.kappa2, 4) << " | " << c.method << " | "
       << format_double(c.bias, 4) << " | " << format_double(c.rmse, 4)
       << " | " << (c.coverage ? format_double(*c.coverage, 4) : "NA")
       << " |\n";
  }
  ss << "\nn = " << rep.n << ", R = " << rep.R << ", B = " << rep.B
     << ", method = " << rep.method
     << ", failures = " << rep.failures
     << " (rate " << format_double(100.0 * rep.failure_rate, 3) << "%)";
  if (rep.high_failure_rate) ss << " [WARNING: failure rate above 5%]";
  ss << "\n";
  return ss.str();
}

std::string mc_report_csv_to_markdown(const std::string& csv_text) {
  std::stringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("empty report CSV");
  std::ostringstream ss;
  ss << "| Scenario | Parameter | kappa2 | Method | Bias | RMSE | CR |\n";
  ss << "|---|---|---|---|---|---|---|\n";
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_line(line, ',');
    if (f.size() < 7) throw SchemaError("malformed report CSV row: " + line);
    ss << "| " << f[0] << " | " << f[1] << " | " << f[2] << " | " << f[3]
       << " | " << f[4] << " | " << f[5] << " | " << f[6] << " |\n";
  }
  return ss.str();
}

std::string verdict_to_report(const IdentifiabilityVerdict& verdict) {
  return verdict.to_report();
}

std::string witness_to_csv(const IdentifiabilityVerdict& verdict) {
  if (!verdict.witness_mechanism) return "";
  std::ostringstream ss;
  ss << "y_level,base_pi,witness_pi\n";
  for (Eigen::Index i = 0; i < verdict.witness_mechanism->size(); ++i) {
    ss << (i + 1) << ","
       << (verdict.base_mechanism
               ? format_double((*verdict.base_mechanism)(i))
               : std::string("NA"))
       << "," << format_double((*verdict.witness_mechanism)(i)) << "\n";
  }
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw SchemaError("cannot write file: " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SchemaError("cannot read file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace mnar
