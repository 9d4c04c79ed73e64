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

#ifndef ADVFRAME_ERROR_H_
#define ADVFRAME_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace advframe {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input data or configuration. Maps to CLI exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Malformed corpus text. Carries the 1-based line number.
class ParseError : public ValidationError {
 public:
  ParseError(std::size_t line, const std::string &what)
      : ValidationError("line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Numerical failure during training (NaN/Inf gradients or losses).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace advframe

#endif  // ADVFRAME_ERROR_H_
