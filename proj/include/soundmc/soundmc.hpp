#pragma once

#include "soundmc/binomial_ci.hpp"
#include "soundmc/bounded_mean.hpp"
#include "soundmc/checker.hpp"
#include "soundmc/coverage.hpp"
#include "soundmc/dtmc.hpp"
#include "soundmc/error.hpp"
#include "soundmc/interval.hpp"
#include "soundmc/quantiles.hpp"
#include "soundmc/reward_bounds.hpp"
#include "soundmc/rng.hpp"
#include "soundmc/sequential.hpp"
#include "soundmc/simulate.hpp"
