#include "vmreg/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace vmreg {

namespace {

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

void write_dataset_csv(const Dataset& d, const std::string& path) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    if (!out) throw std::runtime_error("write_dataset_csv: cannot open " + tmp);
    for (int j = 0; j < d.dim(); ++j) out << 'f' << j << ',';
    out << (d.multi() ? "az,el,tilt" : "phi") << '\n';
    for (int i = 0; i < d.size(); ++i) {
      for (int j = 0; j < d.dim(); ++j) out << fmt(d.x.at(i, j)) << ',';
      if (d.multi()) {
        const auto& t = d.triples[static_cast<std::size_t>(i)];
        out << fmt(t[0].rad()) << ',' << fmt(t[1].rad()) << ',' << fmt(t[2].rad());
      } else {
        out << fmt(d.phi[static_cast<std::size_t>(i)].rad());
      }
      out << '\n';
    }
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw std::runtime_error("write_dataset_csv: rename failed for " + path);
  }
}

Dataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_dataset_csv: cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw CorruptFile("read_dataset_csv: empty file " + path);

  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) header.push_back(cell);
  }
  bool multi;
  int d;
  if (header.size() >= 4 && header[header.size() - 3] == "az") {
    multi = true;
    d = static_cast<int>(header.size()) - 3;
  } else if (header.size() >= 2 && header.back() == "phi") {
    multi = false;
    d = static_cast<int>(header.size()) - 1;
  } else {
    throw CorruptFile("read_dataset_csv: unrecognized header in " + path);
  }

  std::vector<double> values;
  int rows = 0;
  int want = static_cast<int>(header.size());
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int got = 0;
    while (std::getline(ss, cell, ',')) {
      values.push_back(std::strtod(cell.c_str(), nullptr));
      ++got;
    }
    if (got != want) throw CorruptFile("read_dataset_csv: ragged row in " + path);
    ++rows;
  }
  if (rows == 0) throw CorruptFile("read_dataset_csv: no data rows in " + path);

  Dataset out;
  out.x = Tensor(rows, d);
  for (int i = 0; i < rows; ++i) {
    const double* row = &values[static_cast<std::size_t>(i) * want];
    for (int j = 0; j < d; ++j) out.x.at(i, j) = row[j];
    if (multi) {
      out.triples.push_back({Angle(row[d]), Angle(row[d + 1]), Angle(row[d + 2])});
    } else {
      out.phi.emplace_back(row[d]);
    }
  }
  return out;
}

}  // namespace vmreg
