#pragma once

#include "demandforge/error.hpp"
#include "demandforge/dataset.hpp"
#include "demandforge/features.hpp"
#include "demandforge/models.hpp"
#include "demandforge/metrics.hpp"
#include "demandforge/config.hpp"
#include "demandforge/validation.hpp"
#include "demandforge/tuning.hpp"
#include "demandforge/synth.hpp"
#include "demandforge/run_config.hpp"
