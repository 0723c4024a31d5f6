#pragma once

#include "esn/esnsm.hpp"
#include "esn/linalg.hpp"

#include <string>
#include <vector>

namespace esn {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 reader: quoted fields, doubled quotes, CRLF or LF line ends.
/// A header row is required. Throws DataError on malformed input.
CsvTable read_csv(const std::string& path);
CsvTable parse_csv(const std::string& text);

void write_csv(const std::string& path, const CsvTable& table);
std::string format_csv(const CsvTable& table);

/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

/// All-numeric table of observations (rows) with d columns.
Mat read_matrix_csv(const std::string& path);
void write_matrix_csv(const std::string& path, const Mat& data, const std::string& prefix = "y");

/// Columns x1..xk, s, y1..yd; censored outcomes are empty fields.
EsnsmData read_esnsm_csv(const std::string& path);
void write_esnsm_csv(const std::string& path, const EsnsmData& data);

}  // namespace esn
