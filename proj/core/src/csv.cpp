#include "dsse/csv.hpp"

#include <fstream>
#include <sstream>

#include "dsse/errors.hpp"

namespace dsse {

int CsvTable::column(const std::string& name) const {
  for (size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

Eigen::MatrixXd CsvTable::matrix() const {
  Eigen::MatrixXd m(rows.size(), header.size());
  for (size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != header.size())
      throw DataError("csv row " + std::to_string(r) + " width mismatch");
    for (size_t c = 0; c < header.size(); ++c) m(r, c) = rows[r][c];
  }
  return m;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open csv file: " + path);
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty csv file: " + path);
  std::stringstream hs(line);
  std::string cell;
  while (std::getline(hs, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    while (std::getline(ls, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError("non-numeric csv cell '" + cell + "' in " + path);
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write csv file: " + path);
  out.precision(17);
  for (size_t i = 0; i < header.size(); ++i)
    out << header[i] << (i + 1 < header.size() ? ',' : '\n');
  for (Eigen::Index r = 0; r < rows.rows(); ++r)
    for (Eigen::Index c = 0; c < rows.cols(); ++c)
      out << rows(r, c) << (c + 1 < rows.cols() ? ',' : '\n');
}

void write_csv(const std::string& path, const CsvTable& table) {
  write_csv(path, table.header, table.matrix());
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  out << content;
}

}  // namespace dsse
