// spectroforge/spectroforge.hpp

// Copyright 2026 The SpectroForge Authors
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

#include "spectroforge/augment.hpp"
#include "spectroforge/config.hpp"
#include "spectroforge/error.hpp"
#include "spectroforge/features.hpp"
#include "spectroforge/lpc.hpp"
#include "spectroforge/pipeline.hpp"
#include "spectroforge/report.hpp"
#include "spectroforge/rng.hpp"
#include "spectroforge/signal_io.hpp"
#include "spectroforge/spectrum.hpp"
