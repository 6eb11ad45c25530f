#pragma once

#include "brwp/common.hpp"
#include "brwp/rng.hpp"
#include "brwp/potential.hpp"
#include "brwp/ensemble.hpp"
#include "brwp/samplers.hpp"
#include "brwp/gaussian_analytic.hpp"
#include "brwp/diagnostics.hpp"
#include "brwp/bayes_lr.hpp"
#include "brwp/config.hpp"
#include "brwp/report.hpp"
#include "brwp/harness.hpp"
