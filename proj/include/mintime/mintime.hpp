#pragma once

// Umbrella header for the minimum-time control toolkit.

#include "mintime/admissible_set.hpp"
#include "mintime/common.hpp"
#include "mintime/demo_fixtures.hpp"
#include "mintime/lti.hpp"
#include "mintime/mpc.hpp"
#include "mintime/pipeline.hpp"
#include "mintime/rng.hpp"
#include "mintime/solver.hpp"
#include "mintime/weights.hpp"
