// SPDX-License-Identifier: Apache-2.0
//
// beamsync: link-level simulator for over-the-air carrier synchronization
// Copyright (C) 2026 The beamsync authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#pragma once

#include "beamsync/channel.hpp"
#include "beamsync/common.hpp"
#include "beamsync/config.hpp"
#include "beamsync/crb.hpp"
#include "beamsync/estimator.hpp"
#include "beamsync/montecarlo.hpp"
#include "beamsync/protocol.hpp"
#include "beamsync/random.hpp"
#include "beamsync/signal.hpp"
