#pragma once

#include "elgof/dataset.hpp"

#include <string>
#include <vector>

namespace elgof {

/// Numeric delimited text with a header row.
struct Table {
  std::vector<std::string> header;
  Matrix values;  // rows x columns
  char delimiter = ',';

  /// Throws Error{bad_input} for unknown names.
  Index column(const std::string& name) const;
};

/// Reads comma- or tab-separated text; the delimiter is taken from the header
/// line (tab if it contains one). Missing or non-numeric cells are errors
/// (Error{bad_input}); a missing file is Error{file_not_found}.
Table read_delimited(const std::string& path);

/// Same, from text already in memory.
Table parse_delimited(const std::string& text, const std::string& source = "<input>");

}  // namespace elgof
