// Copyright 2026 The medcode Authors.
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
#include "medcode/ingest.hpp"

#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "medcode/errors.hpp"

namespace medcode {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

struct CsvTable {
  std::ifstream in;
  std::vector<std::string> header;
  std::filesystem::path path;

  // Column positions for names; throws SchemaError listing every absent one.
  std::vector<std::size_t> require(const std::vector<std::string>& names) const {
    std::vector<std::size_t> cols;
    std::string missing;
    for (const auto& n : names) {
      std::size_t i = 0;
      while (i < header.size() && trim(header[i]) != n) ++i;
      if (i == header.size()) {
        missing += (missing.empty() ? "" : ", ") + n;
      }
      cols.push_back(i);
    }
    if (!missing.empty()) {
      throw SchemaError(path.string() + ": missing columns: " + missing);
    }
    return cols;
  }
};

CsvTable open_table(const std::filesystem::path& path) {
  CsvTable t{std::ifstream(path, std::ios::binary), {}, path};
  if (!t.in) throw DataError("cannot open " + path.string());
  if (!read_csv_record(t.in, t.header)) {
    throw SchemaError(path.string() + ": empty file, expected a header row");
  }
  return t;
}

}  // namespace

bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                     bool* malformed) {
  fields.clear();
  if (malformed) *malformed = false;
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string field;
  bool quoted = false;
  char c;
  while (in.get(c)) {
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (quoted && malformed) *malformed = true;
  fields.push_back(std::move(field));
  return true;
}

IngestResult ingest_csv_notes(const std::filesystem::path& notes_path,
                              const std::vector<std::filesystem::path>& codes_paths,
                              const IngestConfig& config) {
  IngestResult result;
  std::vector<std::string> fields;
  bool malformed = false;

  std::map<std::string, std::set<std::string>> codes;
  for (const auto& path : codes_paths) {
    auto table = open_table(path);
    const auto cols = table.require({config.admission_column, config.code_column});
    while (read_csv_record(table.in, fields, &malformed)) {
      if (fields.size() == 1 && trim(fields[0]).empty()) continue;
      if (malformed || fields.size() != table.header.size() || trim(fields[cols[0]]).empty()) {
        ++result.skipped_rows;
        continue;
      }
      const std::string code = trim(fields[cols[1]]);
      if (!code.empty()) codes[trim(fields[cols[0]])].insert(code);
    }
  }

  auto notes = open_table(notes_path);
  const auto cols = notes.require({config.admission_column, config.category_column,
                                   config.description_column, config.text_column});
  std::vector<std::string> order;
  std::unordered_map<std::string, std::string> texts;
  while (read_csv_record(notes.in, fields, &malformed)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;
    if (malformed || fields.size() != notes.header.size() || trim(fields[cols[0]]).empty()) {
      ++result.skipped_rows;
      continue;
    }
    if (trim(fields[cols[1]]) != config.category_filter) continue;
    const std::string id = trim(fields[cols[0]]);
    auto [it, fresh] = texts.try_emplace(id, fields[cols[3]]);
    if (fresh) {
      order.push_back(id);
    } else {
      it->second += ' ';
      it->second += fields[cols[3]];
    }
  }

  for (const auto& id : order) {
    auto c = codes.find(id);
    if (c == codes.end() || c->second.empty()) {
      ++result.dropped_admissions;
      continue;
    }
    Document d;
    d.id = id;
    d.text = std::move(texts[id]);
    d.tokens = tokenize(d.text);
    d.labels = c->second;
    result.documents.push_back(std::move(d));
  }
  return result;
}

}  // namespace medcode
