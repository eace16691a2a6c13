#include "balwt/io.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

namespace balwt {

std::string format_sig(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, x);
  return buf;
}

void write_text_atomic(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot open " + tmp + " for writing");
    out << content;
    out.flush();
    if (!out) throw Error("short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error("cannot replace " + path);
  }
}

void write_csv_atomic(const std::string& path, const CsvTable& table) {
  std::ostringstream out;
  for (std::size_t j = 0; j < table.header.size(); ++j) {
    if (j) out << ',';
    out << table.header[j];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw Error("csv row width does not match header");
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << row[j];
    }
    out << '\n';
  }
  write_text_atomic(path, out.str());
}

void write_manifest_atomic(const std::string& path,
                           const std::map<std::string, std::string>& kv) {
  std::ostringstream out;
  for (const auto& [key, value] : kv) out << key << " = " << value << '\n';
  write_text_atomic(path, out.str());
}

}  // namespace balwt
