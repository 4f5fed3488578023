// SPDX-License-Identifier: Apache-2.0
//
// Umbrella header.
#pragma once

#include "qtf/analytic.hpp"
#include "qtf/binomial.hpp"
#include "qtf/engine.hpp"
#include "qtf/model.hpp"
#include "qtf/philox.hpp"
#include "qtf/sweep.hpp"
#include "qtf/version.hpp"
