// Copyright 2026 The EcoTune Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef ECOTUNE_TOOLS_CLI_H_
#define ECOTUNE_TOOLS_CLI_H_

#include <iosfwd>
#include <string>
#include <vector>

namespace ecotune::cli {

// Exit codes: 0 success, 1 user error (bad flags, invalid input, unknown
// ids), 2 internal error.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Splits a script file into replies separated by lines holding only "%%".
std::vector<std::string> SplitScript(const std::string& text);

}  // namespace ecotune::cli

#endif  // ECOTUNE_TOOLS_CLI_H_
