// Copyright 2026 The ftbo Authors. All Rights Reserved.
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
// =============================================================================

// Everything in one include.

#pragma once

#include "ftbo/linalg.hpp"
#include "ftbo/kernels.hpp"
#include "ftbo/curves.hpp"
#include "ftbo/latent_gp.hpp"
#include "ftbo/ftgp.hpp"
#include "ftbo/dense_oracle.hpp"
#include "ftbo/slice_sampler.hpp"
#include "ftbo/hypers.hpp"
#include "ftbo/candidates.hpp"
#include "ftbo/acquisition.hpp"
#include "ftbo/controller.hpp"
#include "ftbo/protocol.hpp"
#include "ftbo/bench.hpp"
