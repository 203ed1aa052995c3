#pragma once

#include "smclab/controllers.hpp"
#include "smclab/csv.hpp"
#include "smclab/defaults.hpp"
#include "smclab/errors.hpp"
#include "smclab/metrics.hpp"
#include "smclab/plants.hpp"
#include "smclab/scenarios.hpp"
#include "smclab/sim.hpp"
#include "smclab/svg.hpp"
