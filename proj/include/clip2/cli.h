/**
 * Copyright 2026 The clip2 Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#ifndef CLIP2_CLI_H_
#define CLIP2_CLI_H_

#include <iostream>
#include <string>
#include <vector>

namespace clip2::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitConfig = 2,
  kExitIo = 3,
  kExitNumerical = 4,
};

// Entry point behind the `clip2` binary. args[0] is the program name.
// Logs go to `log`; data products only to the paths named by flags.
int run(const std::vector<std::string>& args, std::ostream& log = std::cerr);

}  // namespace clip2::cli

#endif  // CLIP2_CLI_H_
