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

#pragma once

#include <stdexcept>
#include <string>

namespace hlm {

// Error classes map 1:1 onto CLI exit codes (see README).
enum class ErrorCode {
  config = 2,            // bad command line / config file
  io = 3,                // missing or unwritable file
  parse = 4,             // malformed CSV / JSON / model file
  contract = 5,          // dimension mismatch, bad label value, cap exceeded
  no_valid_labeling = 6, // the valid set of a label matrix is empty
  sparse_valid_set = 7,  // Monte-Carlo draw cap exceeded before acceptance
  diverged = 8,          // training produced non-finite loss in every run
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void throw_error(ErrorCode code, const std::string& what) {
  throw Error(code, what);
}

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) throw_error(code, what);
}

}  // namespace hlm
