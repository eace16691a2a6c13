#pragma once

#include <map>
#include <string>
#include <vector>

#include "balwt/types.hpp"

// Artifact plumbing: CSV and text emission with atomic replace semantics,
// and significant-digit formatting shared by every writer. CSV output is
// comma-separated with a header row and LF line endings.

namespace balwt {

// Shortest decimal with the requested significant digits, C locale.
std::string format_sig(double x, int digits = 12);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

// Writers stage to a sibling temp file and rename over the target.
void write_text_atomic(const std::string& path, const std::string& content);
void write_csv_atomic(const std::string& path, const CsvTable& table);

// Manifest: sorted key = value lines, enough to re-run a command.
void write_manifest_atomic(const std::string& path,
                           const std::map<std::string, std::string>& kv);

}  // namespace balwt
