// Copyright 2026 The DualScribe Authors
// SPDX-License-Identifier: Apache-2.0
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

// nlohmann::json views of library results, shared by the experiment runner
// and the CLI. Not installed.

#include "dualscribe/labeler.h"
#include "json.hpp"

namespace dualscribe::internal {

nlohmann::ordered_json ClinicalF1Json(const ClinicalF1Report& report);

}  // namespace dualscribe::internal
