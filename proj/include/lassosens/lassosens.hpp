#pragma once

#include "lassosens/cs_experiments.hpp"
#include "lassosens/dense_linalg.hpp"
#include "lassosens/errors.hpp"
#include "lassosens/io.hpp"
#include "lassosens/lasso_solver.hpp"
#include "lassosens/random.hpp"
#include "lassosens/sensitivity.hpp"
#include "lassosens/simplex.hpp"
