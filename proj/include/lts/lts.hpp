#pragma once

#include "lts/error.hpp"
#include "lts/numeric.hpp"
#include "lts/parallel.hpp"
#include "lts/model.hpp"
#include "lts/solver.hpp"
#include "lts/population.hpp"
#include "lts/montecarlo.hpp"
#include "lts/inference.hpp"
#include "lts/io.hpp"
