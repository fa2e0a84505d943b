#pragma once

#include "rfi/measures.hpp"

#include <string>
#include <vector>

namespace rfi::app {

/// 17 significant digits, '.' decimal separator.
std::string format_number(double v);
std::string format_number(std::size_t v);

/// RFC-4180 file: header row, comma separated, CRLF line ends.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv(const std::string& path);

/// Point cloud, one point per row. A last column named "weight" gives the
/// weights; otherwise the cloud is uniform.
EmpiricalMeasure read_cloud_csv(const std::string& path);
void write_cloud_csv(const std::string& path, const EmpiricalMeasure& mu);

} // namespace rfi::app
