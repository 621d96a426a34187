#pragma once
#include "types.hpp"
#include "errors.hpp"
#include "log.hpp"
#include "rng.hpp"
#include "model.hpp"
#include "lasso.hpp"
#include "cholesky.hpp"
#include "homotopy.hpp"
#include "tuned.hpp"
#include "strategy_a.hpp"
#include "strategy_b.hpp"
#include "theory.hpp"
#include "oracle.hpp"
#include "io.hpp"
#include "experiments.hpp"
