#pragma once

#include <string>
#include <vector>

namespace gpaft::detail {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;   // ragged rows already rejected

  // Header lookup; -1 when absent.
  [[nodiscard]] long column(const std::string& name) const;
};

// RFC-4180-ish reader: header row required, CRLF tolerated, double quotes
// with "" escapes, unquoted fields trimmed. Throws schema_error on missing
// file, empty file, or rows whose width differs from the header.
[[nodiscard]] CsvTable read_csv(const std::string& path);

// Strict double parse; context names the file/row in the schema_error.
[[nodiscard]] double parse_double(const std::string& field,
                                  const std::string& context);

}  // namespace gpaft::detail
