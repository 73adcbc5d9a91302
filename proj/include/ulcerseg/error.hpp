/*
 * Copyright 2026 The ulcerseg Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <stdexcept>
#include <string>

namespace ulcerseg {

// Error categories. The CLI maps each one to an exit code and prints the
// category name verbatim in its `error: <category>: <detail>` line.
enum class ErrorCategory {
  kInvalidArgument,
  kNotFound,
  kConfiguration,
  kData,
  kTraining,
  kNumeric,
};

const char* CategoryName(ErrorCategory category);

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& detail)
      : std::runtime_error(detail), category_(category) {}

  ErrorCategory category() const { return category_; }

 private:
  ErrorCategory category_;
};

class InvalidArgument : public Error {
 public:
  explicit InvalidArgument(const std::string& detail)
      : Error(ErrorCategory::kInvalidArgument, detail) {}
};

class NotFound : public Error {
 public:
  explicit NotFound(const std::string& detail)
      : Error(ErrorCategory::kNotFound, detail) {}
};

class ConfigurationError : public Error {
 public:
  explicit ConfigurationError(const std::string& detail)
      : Error(ErrorCategory::kConfiguration, detail) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& detail)
      : Error(ErrorCategory::kData, detail) {}
};

// Raised when training diverges or cannot proceed. `epoch` is the 0-based
// epoch at which the failure was detected (-1 if before the first epoch).
class TrainingError : public Error {
 public:
  TrainingError(int epoch, const std::string& detail)
      : Error(ErrorCategory::kTraining,
              "epoch " + std::to_string(epoch) + ": " + detail),
        epoch_(epoch) {}

  int epoch() const { return epoch_; }

 private:
  int epoch_;
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& detail)
      : Error(ErrorCategory::kNumeric, detail) {}
};

}  // namespace ulcerseg
