// Copyright 2026 The cvsense Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at

//     http://www.apache.org/licenses/LICENSE-2.0

// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <json.hpp>

#include "cvsense/trace_io.hpp"
#include "cvsense/virtual_bench.hpp"

namespace cvsense {

[[nodiscard]] nlohmann::ordered_json bench_to_json(const BenchConfig &b);

/// Fields absent from `j` keep their value from `defaults`. Throws
/// Error(Config) on unknown fields or wrong types.
[[nodiscard]] BenchConfig bench_from_json(const nlohmann::ordered_json &j, const BenchConfig &defaults = {});

[[nodiscard]] nlohmann::ordered_json summary_to_json(const TraceSummary &s);

} // namespace cvsense
