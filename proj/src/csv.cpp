#include "mnlink/csv.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <vector>

#include "mnlink/errors.hpp"

namespace mnlink {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    // trim surrounding blanks
    const auto b = cell.find_first_not_of(" \t\r");
    const auto e = cell.find_last_not_of(" \t\r");
    cells.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

double parse_double(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected a number, got '" + s + "'");
  }
}

int parse_int(const std::string& s, const std::string& where) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw ParseError(where + ": expected an integer, got '" + s + "'");
  }
}

}  // namespace

Dataset read_csv(std::istream& in, const std::string& origin) {
  std::string line;
  long line_no = 0;
  // header
  std::vector<std::string> header;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    header = split_csv_line(line);
    break;
  }
  if (header.empty()) throw ParseError(origin + ": missing header row");

  int k = 0, q = 0;
  std::size_t col = 0;
  while (col < header.size() && header[col] == "x" + std::to_string(k + 1)) {
    ++k;
    ++col;
  }
  while (col < header.size() && header[col] == "y" + std::to_string(q + 1)) {
    ++q;
    ++col;
  }
  if (k == 0 || q == 0 || col + 1 != header.size() || header[col] != "n")
    throw ParseError(origin + ": header must be x1..xk,y1..yq,n");

  Dataset data;
  data.k = k;
  data.q = q;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    const auto cells = split_csv_line(line);
    const std::string where = origin + ":" + std::to_string(line_no);
    if (static_cast<int>(cells.size()) != k + q + 1)
      throw ParseError(where + ": expected " + std::to_string(k + q + 1) + " columns, got " +
                       std::to_string(cells.size()));
    Observation obs;
    obs.x.resize(k);
    obs.y.resize(q);
    for (int c = 0; c < k; ++c)
      obs.x[c] = parse_double(cells[static_cast<std::size_t>(c)], where);
    for (int c = 0; c < q; ++c)
      obs.y[c] = parse_int(cells[static_cast<std::size_t>(k + c)], where);
    obs.n = parse_int(cells[static_cast<std::size_t>(k + q)], where);
    data.observations.push_back(std::move(obs));
  }
  try {
    data.validate();
  } catch (const ValidationError& e) {
    throw ValidationError(origin + ": " + e.what());
  }
  return data;
}

Dataset load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open data file '" + path + "'");
  return read_csv(in, path);
}

void write_csv(const Dataset& data, std::ostream& out) {
  for (int c = 0; c < data.k; ++c) out << "x" << c + 1 << ",";
  for (int c = 0; c < data.q; ++c) out << "y" << c + 1 << ",";
  out << "n\n";
  char buf[64];
  for (const auto& obs : data.observations) {
    for (int c = 0; c < data.k; ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", obs.x[c]);
      out << buf << ",";
    }
    for (int c = 0; c < data.q; ++c) out << obs.y[c] << ",";
    out << obs.n << "\n";
  }
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  write_csv(data, out);
}

}  // namespace mnlink
