/*
 * Copyright 2026 The mlood Authors.
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

// Umbrella header.

#ifndef MLOOD_MLOOD_HPP_
#define MLOOD_MLOOD_HPP_

#include "mlood/commands.hpp"
#include "mlood/core.hpp"
#include "mlood/detector.hpp"
#include "mlood/error.hpp"
#include "mlood/harness.hpp"
#include "mlood/io.hpp"
#include "mlood/isolation_forest.hpp"
#include "mlood/linear_model.hpp"
#include "mlood/lof.hpp"
#include "mlood/mahalanobis.hpp"
#include "mlood/metrics.hpp"
#include "mlood/numeric.hpp"
#include "mlood/scoring.hpp"
#include "mlood/tuning.hpp"

#endif  // MLOOD_MLOOD_HPP_
