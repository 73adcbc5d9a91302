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

// Small text helpers shared by the CSV readers and writers.

#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ulcerseg {

// Shortest decimal text that parses back to the same double.
std::string FormatDouble(double v);

// Splits on commas (no quoting); drops carriage returns.
std::vector<std::string> SplitCsvLine(std::string_view line);

std::string_view Trim(std::string_view text);

// Whole-string numeric parses; nullopt on any trailing garbage.
std::optional<double> ParseDouble(std::string_view text);
std::optional<long long> ParseInt(std::string_view text);

// Lines of `text`, split on '\n', with trailing '\r' removed.
std::vector<std::string> SplitLines(const std::string& text);

}  // namespace ulcerseg
