#pragma once

// Umbrella header; pulls in the whole library.

#include "snnadmm/data.hpp"
#include "snnadmm/distributed.hpp"
#include "snnadmm/errors.hpp"
#include "snnadmm/model.hpp"
#include "snnadmm/objective.hpp"
#include "snnadmm/rng.hpp"
#include "snnadmm/run_config.hpp"
#include "snnadmm/state.hpp"
#include "snnadmm/trainer.hpp"
#include "snnadmm/types.hpp"
#include "snnadmm/updates.hpp"
