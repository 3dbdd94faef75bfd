/* Copyright 2026 The RSRL Authors

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#ifndef RSRL_RSRL_HPP
#define RSRL_RSRL_HPP

#include "rsrl/canonical_json.hpp"
#include "rsrl/checkpoint_io.hpp"
#include "rsrl/dataset.hpp"
#include "rsrl/engine.hpp"
#include "rsrl/error.hpp"
#include "rsrl/highlight.hpp"
#include "rsrl/layers.hpp"
#include "rsrl/metrics.hpp"
#include "rsrl/network.hpp"
#include "rsrl/random.hpp"
#include "rsrl/run.hpp"
#include "rsrl/tensor.hpp"
#include "rsrl/train.hpp"

#endif  // RSRL_RSRL_HPP
