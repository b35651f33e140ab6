// Copyright 2026 The dpsumm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include "dpsumm/auction.hpp"
#include "dpsumm/baselines.hpp"
#include "dpsumm/core_data.hpp"
#include "dpsumm/dp_release.hpp"
#include "dpsumm/error.hpp"
#include "dpsumm/harness.hpp"
#include "dpsumm/kernel.hpp"
#include "dpsumm/oracle.hpp"
#include "dpsumm/privacy.hpp"
#include "dpsumm/protocol.hpp"
#include "dpsumm/random.hpp"
#include "dpsumm/rff.hpp"
