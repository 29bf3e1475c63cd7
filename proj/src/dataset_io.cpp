#include "clever/dataset_io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

namespace clever {

Dataset load_dataset_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open dataset file: " + path.string());

  std::vector<std::vector<double>> rows;
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::vector<double> cells;
    std::stringstream fields(line);
    std::string cell;
    while (std::getline(fields, cell, ',')) {
      try {
        cells.push_back(std::stod(cell));
      } catch (const std::exception&) {
        std::ostringstream msg;
        msg << path.string() << ":" << line_no << ": bad numeric field '" << cell << "'";
        throw InputError(msg.str());
      }
    }
    if (cells.size() < 2) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": need at least one feature and a label";
      throw InputError(msg.str());
    }
    if (!rows.empty() && cells.size() != rows.front().size() + 1) {
      std::ostringstream msg;
      msg << path.string() << ":" << line_no << ": inconsistent column count";
      throw InputError(msg.str());
    }
    labels.push_back(static_cast<int>(cells.back()));
    cells.pop_back();
    rows.push_back(std::move(cells));
  }
  if (rows.empty()) throw InputError(path.string() + ": dataset file is empty");

  Dataset data;
  data.d = static_cast<int>(rows.front().size());
  data.features.resize(static_cast<Eigen::Index>(rows.size()), data.d);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < data.d; ++c) data.features(static_cast<Eigen::Index>(r), c) = rows[r][c];
  data.labels = std::move(labels);
  int max_label = 0;
  for (int y : data.labels) max_label = std::max(max_label, y);
  data.K = max_label + 1;
  data.name = path.stem().string();
  data.validate();
  return data;
}

void save_dataset_csv(const Dataset& data, const std::filesystem::path& path) {
  data.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write dataset file: " + path.string());
  char buf[40];
  for (Eigen::Index r = 0; r < data.features.rows(); ++r) {
    for (int c = 0; c < data.d; ++c) {
      std::snprintf(buf, sizeof(buf), "%.17g", data.features(r, c));
      out << buf << ',';
    }
    out << data.labels[static_cast<std::size_t>(r)] << '\n';
  }
}

}  // namespace clever
