#include "cavfeed/csv.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace cavfeed {

std::string format_number(double v) {
  if (!std::isfinite(v)) return {};
  std::array<char, 64> buf;
  auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (res.ec != std::errc{})
    throw std::runtime_error("number formatting failed");
  return std::string(buf.data(), res.ptr);
}

std::string format_complex(double re, double im) {
  std::string s = format_number(re);
  if (s.empty()) return {};
  std::string si = format_number(im);
  if (si.empty()) return {};
  if (!si.empty() && si[0] != '-') s += '+';
  s += si;
  s += 'i';
  return s;
}

CsvFile::CsvFile(std::string path) : path_(std::move(path)) {}

CsvFile::~CsvFile() {
  if (!committed_) {
    // Remove a stale temp file from an earlier failed commit attempt, if any.
    std::remove((path_ + ".tmp").c_str());
  }
}

void CsvFile::comment(const std::string& text) {
  buf_ += "# ";
  buf_ += text;
  buf_ += '\n';
}

void CsvFile::line(const std::string& text) {
  buf_ += text;
  buf_ += '\n';
}

void CsvFile::row(const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) buf_ += ',';
    buf_ += cells[i];
  }
  buf_ += '\n';
}

void CsvFile::commit() {
  const std::string tmp = path_ + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  if (std::rename(tmp.c_str(), path_.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw std::runtime_error("cannot rename " + tmp + " to " + path_);
  }
  committed_ = true;
}

std::size_t CsvTable::column_index(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw std::runtime_error("missing column: " + name);
}

namespace {

std::vector<std::string> split_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  while (true) {
    std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return cells;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (!have_header) {
      table.columns = split_cells(line);
      have_header = true;
    } else {
      table.rows.push_back(split_cells(line));
    }
  }
  if (!have_header) throw std::runtime_error("no header row in " + path);
  return table;
}

}  // namespace cavfeed
