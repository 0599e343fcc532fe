#pragma once

#include <string>
#include <vector>

namespace hjcli {

struct Series {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Writes a log-log line plot with markers. Non-positive points are skipped.
void write_loglog_svg(const std::string& path, const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series);

}  // namespace hjcli
