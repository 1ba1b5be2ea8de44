#pragma once

#include <string>
#include <vector>

namespace cavfeed {

/// Shortest round-trip decimal form of v, locale-independent ('.' decimal
/// point always). NaN and infinities come back as the empty string, which
/// is the CSV convention for a missing value.
std::string format_number(double v);

/// Complex amplitude as "re+imi" / "re-imi" with format_number components.
std::string format_complex(double re, double im);

/// Buffered CSV writer with atomic commit: content goes to <path>.tmp and
/// is renamed over <path> only by commit(), so failed runs never leave a
/// partial table behind. Destruction without commit removes the temp file.
class CsvFile {
 public:
  explicit CsvFile(std::string path);
  CsvFile(const CsvFile&) = delete;
  CsvFile& operator=(const CsvFile&) = delete;
  ~CsvFile();

  /// Appends "# <text>" to the metadata block.
  void comment(const std::string& text);
  /// Appends a raw line (header row or preformatted data).
  void line(const std::string& text);
  /// Appends cells joined by commas.
  void row(const std::vector<std::string>& cells);

  const std::string& path() const { return path_; }

  /// Writes and renames; throws std::runtime_error on I/O failure.
  void commit();

 private:
  std::string path_;
  std::string buf_;
  bool committed_ = false;
};

/// Minimal reader for the tables this toolkit writes: skips '#' comments,
/// first remaining line is the header. Cells are returned as strings;
/// empty cells mean missing values.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  /// Index of a named column; throws std::runtime_error when absent.
  std::size_t column_index(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);

}  // namespace cavfeed
