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
#pragma once

// Discharge-summary ingestion from noteevents-shaped CSV exports plus
// diagnosis/procedure code tables keyed by admission.

#include <cstddef>
#include <filesystem>
#include <istream>
#include <string>
#include <vector>

#include "medcode/text.hpp"

namespace medcode {

struct IngestConfig {
  std::string admission_column = "HADM_ID";
  std::string category_column = "CATEGORY";
  std::string description_column = "DESCRIPTION";
  std::string text_column = "TEXT";
  std::string code_column = "ICD9_CODE";
  std::string category_filter = "Discharge summary";
};

struct IngestResult {
  std::vector<Document> documents;
  /// Rows that could not be read (bad field count, unterminated quote,
  /// empty admission id).
  std::size_t skipped_rows = 0;
  /// Admissions with notes but no codes.
  std::size_t dropped_admissions = 0;
};

/// One RFC 4180 record per call: quoted fields may hold commas, newlines
/// and doubled quotes. Returns false at end of input. Sets *malformed when
/// the record ends inside an open quote.
bool read_csv_record(std::istream& in, std::vector<std::string>& fields,
                     bool* malformed = nullptr);

/// Documents appear in order of first note per admission; each text is the
/// admission's matching notes joined by one space in file order.
IngestResult ingest_csv_notes(const std::filesystem::path& notes_path,
                              const std::vector<std::filesystem::path>& codes_paths,
                              const IngestConfig& config = {});

}  // namespace medcode
