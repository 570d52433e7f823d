#pragma once

#include "sbmcov/chernoff.hpp"
#include "sbmcov/cluster.hpp"
#include "sbmcov/harness/config.hpp"
#include "sbmcov/harness/experiment.hpp"
#include "sbmcov/harness/io.hpp"
#include "sbmcov/inference.hpp"
#include "sbmcov/linalg.hpp"
#include "sbmcov/model.hpp"
#include "sbmcov/optimize.hpp"
#include "sbmcov/rng.hpp"
#include "sbmcov/spectral.hpp"
