#pragma once

#include "amip/amip.hpp"
#include "amip/audit.hpp"
#include "amip/core.hpp"
#include "amip/estimator.hpp"
#include "amip/harness.hpp"
#include "amip/io.hpp"
#include "amip/oracles.hpp"
#include "amip/random.hpp"
#include "amip/resample.hpp"
#include "amip/samplers.hpp"
