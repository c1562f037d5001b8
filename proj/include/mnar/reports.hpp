#pragma once

#include <string>

#include "mnar/estimate.hpp"
#include "mnar/identify.hpp"
#include "mnar/simulate.hpp"

namespace mnar {

/// Fixed-precision number formatting so identical runs serialize to
/// byte-identical files.
std::string format_double(double v, int precision = 10);

std::string fit_result_to_csv(const FitResult& fit);
std::string fit_result_to_markdown(const FitResult& fit);

std::string mc_report_to_csv(const McReport& report);
std::string mc_report_to_markdown(const McReport& report);
/// Re-render a previously written McReport CSV as the Markdown table.
std::string mc_report_csv_to_markdown(const std::string& csv_text);

std::string verdict_to_report(const IdentifiabilityVerdict& verdict);
std::string witness_to_csv(const IdentifiabilityVerdict& verdict);

void write_text_file(const std::string& path, const std::string& text);
std::string read_text_file(const std::string& path);

}  // namespace mnar
