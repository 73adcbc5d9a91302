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

// The ulcerseg command line: slic, extract, reduce, train, segment,
// evaluate, ranktest and synth.

#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "ulcerseg/error.hpp"

namespace ulcerseg {

// 0 success, 2 usage or configuration, 3 data or missing input, 4 numeric
// or training failure.
int ExitCode(ErrorCategory category);

// Runs one command; `args` excludes the program name. Errors are reported
// on `err` as a single `error: <category>: <detail>` line.
int RunCommand(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace ulcerseg
