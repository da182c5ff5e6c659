#pragma once

#include "gms/common.hpp"

#include <fstream>
#include <string>
#include <vector>

namespace gms {

// Full-precision (round-trippable) formatting of a double.
std::string format_double(double v);

// One header row, then one row per matrix row.
void write_csv(const std::string& path, const std::vector<std::string>& header, const Mat& values);

struct CsvTable {
    std::vector<std::string> header;
    Mat values;
};

CsvTable read_csv(const std::string& path);

// Appendable row-oriented writer for report-style files.
class CsvWriter {
public:
    CsvWriter(const std::string& path, const std::vector<std::string>& header);
    void row(const std::vector<std::string>& cells);
    void close();

private:
    std::string path_;
    std::size_t columns_;
    std::ofstream out_;
};

}  // namespace gms
