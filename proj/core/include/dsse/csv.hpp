#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace dsse {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int column(const std::string& name) const;  // -1 if absent
  Eigen::MatrixXd matrix() const;             // rows x cols
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const Eigen::MatrixXd& rows);
void write_csv(const std::string& path, const CsvTable& table);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace dsse
