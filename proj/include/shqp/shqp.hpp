// Copyright 2026 The SHQP Authors
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

// Umbrella header.

#ifndef SHQP_SHQP_HPP_
#define SHQP_SHQP_HPP_

#include "shqp/core.hpp"
#include "shqp/qp.hpp"
#include "shqp/sets.hpp"
#include "shqp/polyhedra.hpp"
#include "shqp/solvers.hpp"
#include "shqp/diagnostics.hpp"
#include "shqp/gallery.hpp"
#include "shqp/config.hpp"
#include "shqp/trace_io.hpp"
#include "shqp/experiment.hpp"

#endif  // SHQP_SHQP_HPP_
