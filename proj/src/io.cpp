#include "esn/io.hpp"

#include "esn/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace esn {

namespace {

double parse_number(const std::string& field, std::size_t row, std::size_t col) {
  const char* begin = field.data();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t')) --end;
  if (begin < end && *begin == '+') ++begin;
  double v = 0.0;
  const auto res = std::from_chars(begin, end, v);
  if (begin == end || res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
    throw DataError("CSV: row " + std::to_string(row + 1) + ", column " + std::to_string(col + 1) +
                    ": not a finite number: '" + field + "'");
  }
  return v;
}

bool is_blank(const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; }

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> records;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;
  const auto end_record = [&] {
    record.push_back(field);
    field.clear();
    field_started = false;
    if (!(record.size() == 1 && record[0].empty())) records.push_back(record);
    record.clear();
  };
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field += ch;
      }
      continue;
    }
    if (ch == '"') {
      if (field_started && !field.empty()) throw DataError("CSV: stray quote inside an unquoted field");
      in_quotes = true;
      field_started = true;
    } else if (ch == ',') {
      record.push_back(field);
      field.clear();
      field_started = false;
    } else if (ch == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      end_record();
    } else if (ch == '\n') {
      end_record();
    } else {
      field += ch;
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("CSV: unterminated quoted field");
  if (!field.empty() || !record.empty()) end_record();
  if (records.empty()) throw DataError("CSV: missing header row");
  CsvTable t;
  t.header = records.front();
  for (std::size_t r = 1; r < records.size(); ++r) {
    if (records[r].size() != t.header.size()) {
      throw DataError("CSV: row " + std::to_string(r) + " has " + std::to_string(records[r].size()) +
                      " fields, header has " + std::to_string(t.header.size()));
    }
    t.rows.push_back(std::move(records[r]));
  }
  return t;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string format_csv(const CsvTable& table) {
  std::string out;
  const auto line = [&out](const std::vector<std::string>& fields) {
    for (std::size_t j = 0; j < fields.size(); ++j) {
      if (j) out += ',';
      out += quote_if_needed(fields[j]);
    }
    out += '\n';
  };
  line(table.header);
  for (const auto& r : table.rows) line(r);
  return out;
}

void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write '" + path + "'");
  out << format_csv(table);
  if (!out) throw DataError("write to '" + path + "' failed");
}

Mat read_matrix_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  if (t.rows.empty()) throw DataError("'" + path + "': no observations");
  Mat m(t.rows.size(), t.header.size());
  for (std::size_t i = 0; i < t.rows.size(); ++i)
    for (std::size_t j = 0; j < t.header.size(); ++j) m(i, j) = parse_number(t.rows[i][j], i, j);
  return m;
}

void write_matrix_csv(const std::string& path, const Mat& data, const std::string& prefix) {
  CsvTable t;
  for (Eigen::Index j = 0; j < data.cols(); ++j) t.header.push_back(prefix + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < data.rows(); ++i) {
    std::vector<std::string> r;
    for (Eigen::Index j = 0; j < data.cols(); ++j) r.push_back(format_double(data(i, j)));
    t.rows.push_back(std::move(r));
  }
  write_csv(path, t);
}

EsnsmData read_esnsm_csv(const std::string& path) {
  const CsvTable t = read_csv(path);
  std::size_t s_col = t.header.size();
  for (std::size_t j = 0; j < t.header.size(); ++j)
    if (t.header[j] == "s") s_col = j;
  if (s_col == t.header.size()) throw DataError("'" + path + "': no 's' column");
  const std::size_t k = s_col;
  const std::size_t d = t.header.size() - s_col - 1;
  if (k == 0 || d == 0) throw DataError("'" + path + "': need covariate columns before and outcome columns after 's'");
  if (t.rows.empty()) throw DataError("'" + path + "': no observations");
  EsnsmData data;
  const auto n = t.rows.size();
  data.x.resize(n, k);
  data.y = Mat::Constant(n, d, kMissing);
  data.s.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < k; ++j) data.x(i, j) = parse_number(t.rows[i][j], i, j);
    const double s = parse_number(t.rows[i][s_col], i, s_col);
    if (s != 0.0 && s != 1.0) throw DataError("'" + path + "': selection indicator must be 0 or 1");
    data.s[i] = static_cast<int>(s);
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& f = t.rows[i][s_col + 1 + j];
      if (data.s[i] == 1) {
        data.y(i, j) = parse_number(f, i, s_col + 1 + j);
      } else if (!is_blank(f)) {
        throw DataError("'" + path + "': censored row " + std::to_string(i + 1) + " has an outcome value");
      }
    }
  }
  data.validate(static_cast<int>(d));
  return data;
}

void write_esnsm_csv(const std::string& path, const EsnsmData& data) {
  CsvTable t;
  for (Eigen::Index j = 0; j < data.x.cols(); ++j) t.header.push_back("x" + std::to_string(j + 1));
  t.header.push_back("s");
  for (Eigen::Index j = 0; j < data.y.cols(); ++j) t.header.push_back("y" + std::to_string(j + 1));
  for (int i = 0; i < data.size(); ++i) {
    std::vector<std::string> r;
    for (Eigen::Index j = 0; j < data.x.cols(); ++j) r.push_back(format_double(data.x(i, j)));
    r.push_back(std::to_string(data.s[i]));
    for (Eigen::Index j = 0; j < data.y.cols(); ++j) r.push_back(data.s[i] == 1 ? format_double(data.y(i, j)) : "");
    t.rows.push_back(std::move(r));
  }
  write_csv(path, t);
}

}  // namespace esn
