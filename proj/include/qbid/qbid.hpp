#pragma once

// Umbrella header for the quantile-space repeated-auction toolkit.

#include "qbid/adversaries.hpp"
#include "qbid/analysis.hpp"
#include "qbid/auction.hpp"
#include "qbid/config.hpp"
#include "qbid/distributions.hpp"
#include "qbid/engine.hpp"
#include "qbid/errors.hpp"
#include "qbid/learners.hpp"
#include "qbid/quantile.hpp"
#include "qbid/rng.hpp"
