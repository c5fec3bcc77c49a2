#pragma once

#include <string>
#include <vector>

namespace como::pipeline::svg {

/// Horizontal bars; `marked` bars are drawn in the accent colour.
std::string bar_chart(const std::string& title, const std::vector<std::string>& labels,
                      const std::vector<double>& values, const std::vector<bool>& marked);

/// Points coloured by integer group.
std::string scatter(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                    const std::vector<int>& group, const std::string& x_label, const std::string& y_label);

/// Log-log scatter with the line y = exp(log_a) x^b.
std::string power_fit(const std::string& title, const std::vector<double>& x, const std::vector<double>& y,
                      double log_a, double b, const std::string& x_label, const std::string& y_label);

}  // namespace como::pipeline::svg
