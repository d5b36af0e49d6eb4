#pragma once

#include "momest/approx.hpp"
#include "momest/bounds.hpp"
#include "momest/divergence.hpp"
#include "momest/errors.hpp"
#include "momest/estimate.hpp"
#include "momest/eval.hpp"
#include "momest/gel.hpp"
#include "momest/gmm.hpp"
#include "momest/monte_carlo.hpp"
#include "momest/problem.hpp"
#include "momest/rng.hpp"
