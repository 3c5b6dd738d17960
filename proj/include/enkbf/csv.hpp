#pragma once
// Deterministic text serialization: CSV tables with a fixed float format,
// small file helpers, and the FNV-1a hash used to fingerprint configs and
// artifacts.  All experiment outputs go through this layer so that a rerun
// with the same config and seed produces byte-identical files.

#include <cstdint>
#include <string>
#include <vector>

namespace enkbf::io {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

/// In-memory CSV table.  `comments` are emitted first as "# ..." lines,
/// then the header row, then one line per data row.
struct CsvTable {
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    /// Appends a row; throws invalid_argument_error on width mismatch.
    void add_row(std::vector<double> row);

    /// Renders the full file contents ('\n' line endings, no trailing junk).
    std::string to_text() const;
};

/// Writes `text` to `path`, creating parent directories.  Throws io_error.
void write_text_file(const std::string& path, const std::string& text);

/// Reads a whole file; throws io_error if missing or unreadable.
std::string read_text_file(const std::string& path);

/// 64-bit FNV-1a over the bytes of `data`.
std::uint64_t fnv1a64(const std::string& data);

/// Fixed-width lowercase hex rendering of a 64-bit hash.
std::string hash_hex(std::uint64_t h);

}  // namespace enkbf::io
