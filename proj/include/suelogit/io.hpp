#pragma once

#include "suelogit/core.hpp"
#include "suelogit/network.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace suelogit::io {

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

[[noreturn]] inline void fail(const std::string& source, std::size_t line, const std::string& msg) {
  throw StructuralError(source + ":" + std::to_string(line) + ": " + msg);
}

inline double to_double(const std::string& s, const std::string& source, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) fail(source, line, "trailing characters in number '" + s + "'");
    return v;
  } catch (const std::invalid_argument&) {
    fail(source, line, "not a number: '" + s + "'");
  } catch (const std::out_of_range&) {
    fail(source, line, "number out of range: '" + s + "'");
  }
}

inline int to_int(const std::string& s, const std::string& source, std::size_t line) {
  const double v = to_double(s, source, line);
  if (v != static_cast<double>(static_cast<long long>(v))) fail(source, line, "expected an integer: '" + s + "'");
  return static_cast<int>(v);
}

inline std::ifstream open(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw StructuralError("cannot open file: " + path);
  return in;
}

}  // namespace detail

/// TNTP link table. Link ids are the 1-based row order.
inline std::vector<Link> read_tntp_network(std::istream& in, const std::string& source) {
  std::vector<Link> links;
  std::string line;
  std::size_t lineno = 0;
  bool in_metadata = true;
  long declared_links = -1;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (in_metadata) {
      if (s.rfind("<NUMBER OF LINKS>", 0) == 0) {
        declared_links = detail::to_int(detail::trim(s.substr(17)), source, lineno);
      }
      if (s.rfind("<END OF METADATA>", 0) == 0) in_metadata = false;
      if (!s.empty() && s[0] == '<') continue;
      if (s.empty()) continue;
      in_metadata = false;
    }
    if (s.empty() || s[0] == '~') continue;
    if (auto semi = s.find(';'); semi != std::string::npos) s = detail::trim(s.substr(0, semi));
    std::stringstream ss(s);
    std::vector<std::string> cols;
    for (std::string tok; ss >> tok;) cols.push_back(tok);
    if (cols.size() < 7) detail::fail(source, lineno, "expected at least 7 columns in link row");
    Link link;
    link.id = static_cast<int>(links.size()) + 1;
    link.from_node = detail::to_int(cols[0], source, lineno);
    link.to_node = detail::to_int(cols[1], source, lineno);
    link.capacity = detail::to_double(cols[2], source, lineno);
    link.length = detail::to_double(cols[3], source, lineno);
    link.free_flow_time = detail::to_double(cols[4], source, lineno);
    link.bpr_alpha = detail::to_double(cols[5], source, lineno);
    link.bpr_beta = detail::to_double(cols[6], source, lineno);
    try {
      validate_link(link);
    } catch (const StructuralError& e) {
      detail::fail(source, lineno, e.what());
    }
    links.push_back(link);
  }
  if (declared_links >= 0 && static_cast<std::size_t>(declared_links) != links.size()) {
    throw StructuralError(source + ": metadata declares " + std::to_string(declared_links) + " links, found " +
                          std::to_string(links.size()));
  }
  if (links.empty()) throw StructuralError(source + ": no links");
  return links;
}

inline std::vector<Link> read_tntp_network(const std::string& path) {
  auto in = detail::open(path);
  return read_tntp_network(in, path);
}

/// TNTP trips table. Zero cells and diagonal cells are dropped.
inline ODDemand read_tntp_trips(std::istream& in, const std::string& source) {
  std::vector<ODPair> pairs;
  std::string line;
  std::size_t lineno = 0;
  int origin = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string s = detail::trim(line);
    if (s.empty() || s[0] == '<' || s[0] == '~') continue;
    if (s.rfind("Origin", 0) == 0) {
      origin = detail::to_int(detail::trim(s.substr(6)), source, lineno);
      continue;
    }
    if (origin < 0) detail::fail(source, lineno, "destination entries before any Origin line");
    std::stringstream ss(s);
    std::string entry;
    while (std::getline(ss, entry, ';')) {
      entry = detail::trim(entry);
      if (entry.empty()) continue;
      const auto colon = entry.find(':');
      if (colon == std::string::npos) detail::fail(source, lineno, "expected 'destination : demand'");
      const int dest = detail::to_int(detail::trim(entry.substr(0, colon)), source, lineno);
      const double q = detail::to_double(detail::trim(entry.substr(colon + 1)), source, lineno);
      if (q < 0.0) detail::fail(source, lineno, "negative demand");
      if (dest == origin || q == 0.0) continue;
      pairs.push_back({origin, dest, q});
    }
  }
  try {
    return ODDemand(std::move(pairs));
  } catch (const StructuralError& e) {
    throw StructuralError(source + ": " + e.what());
  }
}

inline ODDemand read_tntp_trips(const std::string& path) {
  auto in = detail::open(path);
  return read_tntp_trips(in, path);
}

/// CSV with header `origin,destination,demand`.
inline ODDemand read_od_csv(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  std::vector<ODPair> pairs;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    if (header) {
      if (cells.size() < 3 || cells[0] != "origin" || cells[1] != "destination" || cells[2] != "demand") {
        detail::fail(source, lineno, "expected header origin,destination,demand");
      }
      header = false;
      continue;
    }
    if (cells.size() < 3) detail::fail(source, lineno, "expected 3 columns");
    const double q = detail::to_double(cells[2], source, lineno);
    if (q < 0.0) detail::fail(source, lineno, "negative demand");
    pairs.push_back({detail::to_int(cells[0], source, lineno), detail::to_int(cells[1], source, lineno), q});
  }
  if (header) throw StructuralError(source + ": empty OD file");
  try {
    return ODDemand(std::move(pairs));
  } catch (const StructuralError& e) {
    throw StructuralError(source + ": " + e.what());
  }
}

/// Dispatches on extension: `.csv` is the CSV format, anything else is TNTP trips.
inline ODDemand read_od(const std::string& path) {
  auto in = detail::open(path);
  if (std::filesystem::path(path).extension() == ".csv") return read_od_csv(in, path);
  return read_tntp_trips(in, path);
}

struct AttributeTable {
  std::vector<std::string> names;
  std::map<int, std::vector<double>> rows;  // by link id
  std::map<int, bool> connector;
};

/// CSV `link_id,<attr>...`; an optional `is_connector` column (0/1) is split off.
inline AttributeTable read_attributes_csv(std::istream& in, const std::string& source) {
  AttributeTable table;
  std::string line;
  std::size_t lineno = 0;
  std::vector<std::string> header;
  int connector_col = -1;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    if (header.empty()) {
      if (cells.empty() || cells[0] != "link_id") detail::fail(source, lineno, "first column must be link_id");
      header = cells;
      for (std::size_t c = 1; c < cells.size(); ++c) {
        if (cells[c] == "is_connector") {
          connector_col = static_cast<int>(c);
        } else {
          table.names.push_back(cells[c]);
        }
      }
      continue;
    }
    if (cells.size() != header.size()) detail::fail(source, lineno, "column count differs from header");
    const int id = detail::to_int(cells[0], source, lineno);
    std::vector<double> row;
    for (std::size_t c = 1; c < cells.size(); ++c) {
      const double v = detail::to_double(cells[c], source, lineno);
      if (static_cast<int>(c) == connector_col) {
        if (v != 0.0 && v != 1.0) detail::fail(source, lineno, "is_connector must be 0 or 1");
        table.connector[id] = v == 1.0;
      } else {
        row.push_back(v);
      }
    }
    if (!table.rows.emplace(id, std::move(row)).second) detail::fail(source, lineno, "duplicate link_id");
  }
  if (header.empty()) throw StructuralError(source + ": empty attribute file");
  return table;
}

inline AttributeTable read_attributes_csv(const std::string& path) {
  auto in = detail::open(path);
  return read_attributes_csv(in, path);
}

/// Joins a link table with attributes. Links absent from the table get zero attributes.
inline Network assemble_network(std::vector<Link> links, const AttributeTable& table) {
  Matrix z = Matrix::Zero(static_cast<Eigen::Index>(links.size()), static_cast<Eigen::Index>(table.names.size()));
  std::map<int, std::size_t> index;
  for (std::size_t a = 0; a < links.size(); ++a) index[links[a].id] = a;
  for (const auto& [id, row] : table.rows) {
    auto it = index.find(id);
    if (it == index.end()) throw StructuralError("attribute row for unknown link id " + std::to_string(id));
    for (std::size_t k = 0; k < row.size(); ++k) {
      z(static_cast<Eigen::Index>(it->second), static_cast<Eigen::Index>(k)) = row[k];
    }
  }
  for (const auto& [id, flag] : table.connector) {
    auto it = index.find(id);
    if (it != index.end()) links[it->second].is_connector = flag;
  }
  return Network(std::move(links), std::move(z), table.names);
}

/// CSV `link_id,count`. Negative counts are legal (noisy synthetic data).
inline std::vector<std::pair<int, double>> read_counts_csv(std::istream& in, const std::string& source) {
  std::vector<std::pair<int, double>> out;
  std::string line;
  std::size_t lineno = 0;
  bool header = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::trim(line).empty()) continue;
    auto cells = detail::split_csv(line);
    if (header) {
      if (cells.size() < 2 || cells[0] != "link_id" || cells[1] != "count") {
        detail::fail(source, lineno, "expected header link_id,count");
      }
      header = false;
      continue;
    }
    if (cells.size() < 2) detail::fail(source, lineno, "expected 2 columns");
    out.emplace_back(detail::to_int(cells[0], source, lineno), detail::to_double(cells[1], source, lineno));
  }
  return out;
}

inline std::vector<std::pair<int, double>> read_counts_csv(const std::string& path) {
  auto in = detail::open(path);
  return read_counts_csv(in, path);
}

/// Writes to a sibling temp file then renames, so readers never see a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw StructuralError("cannot write file: " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw StructuralError("write failed: " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

/// 6 significant digits, as used by every CSV writer.
inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace suelogit::io
