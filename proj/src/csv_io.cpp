// Copyright 2026-present the hlm project
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "hlm/csv_io.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace hlm {

namespace {

std::vector<std::string> read_data_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::io, "cannot open file: " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    lines.push_back(line);
  }
  return lines;
}

// Splits on commas, trimming spaces around each field.
std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    std::size_t comma = line.find(',', start);
    std::string field = line.substr(start, comma == std::string::npos ? comma : comma - start);
    std::size_t a = field.find_first_not_of(" \t");
    std::size_t b = field.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? std::string() : field.substr(a, b - a + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

long parse_int_field(const std::string& field, const std::string& path, int row, int col) {
  long value = 0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  require(ec == std::errc() && ptr == end && !field.empty(), ErrorCode::parse,
          path + ": row " + std::to_string(row) + " column " + std::to_string(col) +
              ": not an integer: '" + field + "'");
  return value;
}

double parse_double_field(const std::string& field, const std::string& path, int row, int col) {
  try {
    std::size_t used = 0;
    double value = std::stod(field, &used);
    require(used == field.size(), ErrorCode::parse, "trailing characters");
    return value;
  } catch (const std::exception&) {
    throw_error(ErrorCode::parse, path + ": row " + std::to_string(row) + " column " +
                                      std::to_string(col) + ": not a number: '" + field + "'");
  }
}

std::int8_t check_label_value(long v, int num_classes, const std::string& path, int row, int col) {
  if (num_classes == 0) {
    require(v == -1 || v == 0 || v == 1, ErrorCode::parse,
            path + ": row " + std::to_string(row) + " column " + std::to_string(col) +
                ": binary label must be -1, 0 or 1, got " + std::to_string(v));
  } else {
    require(v >= 0 && v <= num_classes, ErrorCode::parse,
            path + ": row " + std::to_string(row) + " column " + std::to_string(col) +
                ": label must be in 0.." + std::to_string(num_classes) + ", got " +
                std::to_string(v));
  }
  return static_cast<std::int8_t>(v);
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), ErrorCode::io, "cannot write file: " + path);
  return out;
}

}  // namespace

LabelMatrix load_label_matrix(const std::string& path, int num_classes) {
  const auto lines = read_data_lines(path);
  require(!lines.empty(), ErrorCode::parse, path + ": no data rows");
  const auto first = split_fields(lines[0]);
  LabelMatrix x(static_cast<int>(lines.size()), static_cast<int>(first.size()), num_classes);
  for (int i = 0; i < x.rows; ++i) {
    const auto fields = split_fields(lines[i]);
    require(static_cast<int>(fields.size()) == x.cols, ErrorCode::parse,
            path + ": row " + std::to_string(i) + " has " + std::to_string(fields.size()) +
                " columns, expected " + std::to_string(x.cols));
    for (int j = 0; j < x.cols; ++j) {
      x.at(i, j) = check_label_value(parse_int_field(fields[j], path, i, j), num_classes, path, i, j);
    }
  }
  return x;
}

void save_label_matrix(const std::string& path, const LabelMatrix& x) {
  auto out = open_out(path);
  for (int i = 0; i < x.rows; ++i) {
    for (int j = 0; j < x.cols; ++j) {
      if (j) out << ',';
      out << static_cast<int>(x.at(i, j));
    }
    out << '\n';
  }
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

LabelVector load_label_vector(const std::string& path, int num_classes) {
  const auto lines = read_data_lines(path);
  require(!lines.empty(), ErrorCode::parse, path + ": no data rows");
  LabelVector y;
  y.labels.resize(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const long v = parse_int_field(lines[i], path, static_cast<int>(i), 0);
    if (num_classes == 0) {
      require(v == -1 || v == 1, ErrorCode::parse,
              path + ": row " + std::to_string(i) + ": ground-truth label must be -1 or 1");
    } else {
      require(v >= 1 && v <= num_classes, ErrorCode::parse,
              path + ": row " + std::to_string(i) + ": ground-truth label must be in 1.." +
                  std::to_string(num_classes));
    }
    y.labels[i] = static_cast<std::int8_t>(v);
  }
  return y;
}

void save_label_vector(const std::string& path, const LabelVector& y) {
  auto out = open_out(path);
  for (int i = 0; i < y.size(); ++i) out << static_cast<int>(y[i]) << '\n';
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

std::vector<double> load_prob_column(const std::string& path) {
  const auto lines = read_data_lines(path);
  require(!lines.empty(), ErrorCode::parse, path + ": no data rows");
  std::vector<double> probs(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    probs[i] = parse_double_field(lines[i], path, static_cast<int>(i), 0);
  }
  return probs;
}

namespace {
void write_prob(std::ofstream& out, double p) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", p);
  out << buf;
}
}  // namespace

void save_prob_column(const std::string& path, const std::vector<double>& probs) {
  auto out = open_out(path);
  for (double p : probs) {
    write_prob(out, p);
    out << '\n';
  }
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

void save_prob_matrix(const std::string& path, int rows, int cols, const std::vector<double>& p) {
  require(p.size() == static_cast<std::size_t>(rows) * cols, ErrorCode::contract,
          "probability matrix size mismatch");
  auto out = open_out(path);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      if (j) out << ',';
      write_prob(out, p[static_cast<std::size_t>(i) * cols + j]);
    }
    out << '\n';
  }
  require(out.good(), ErrorCode::io, "write failed: " + path);
}

std::vector<std::vector<double>> load_prob_rows(const std::string& path) {
  const auto lines = read_data_lines(path);
  require(!lines.empty(), ErrorCode::parse, path + ": no data rows");
  std::vector<std::vector<double>> rows;
  rows.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    std::vector<double> row(fields.size());
    for (std::size_t j = 0; j < fields.size(); ++j) {
      row[j] = parse_double_field(fields[j], path, static_cast<int>(i), static_cast<int>(j));
    }
    require(rows.empty() || rows[0].size() == row.size(), ErrorCode::parse,
            path + ": row " + std::to_string(i) + " has inconsistent column count");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<std::pair<int, int>> load_index_label_pairs(const std::string& path) {
  const auto lines = read_data_lines(path);
  require(!lines.empty(), ErrorCode::parse, path + ": no data rows");
  std::vector<std::pair<int, int>> out;
  out.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto fields = split_fields(lines[i]);
    require(fields.size() == 2, ErrorCode::parse,
            path + ": row " + std::to_string(i) + ": expected `index,label`");
    const long idx = parse_int_field(fields[0], path, static_cast<int>(i), 0);
    const long lab = parse_int_field(fields[1], path, static_cast<int>(i), 1);
    out.emplace_back(static_cast<int>(idx), static_cast<int>(lab));
  }
  return out;
}

}  // namespace hlm
