// Copyright 2025 The rlbf Authors
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

#ifndef RLBF_CORE_ERROR_HPP_
#define RLBF_CORE_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace rlbf {

enum class ErrorCode {
  kParse,
  kRange,
  kUnknownCategory,
  kGrammar,
  kLookup,
  kFormat,
  kTransport,
  kIo,
  kUsage,
  kState,
};

/// Single exception type for all core failure modes; the code maps onto the
/// C API status enum.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rlbf

#endif  // RLBF_CORE_ERROR_HPP_
