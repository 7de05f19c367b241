#pragma once

// Umbrella header for the whole library.

#include "testagg/core.hpp"
#include "testagg/rules.hpp"
#include "testagg/aggregation.hpp"
#include "testagg/uncertainty.hpp"
#include "testagg/metrics.hpp"
#include "testagg/frontier.hpp"
#include "testagg/prevalence.hpp"
#include "testagg/oracle.hpp"
#include "testagg/io.hpp"
