#pragma once

#include "sfdm/errors.hpp"
#include "sfdm/linalg.hpp"
#include "sfdm/interpolation.hpp"
#include "sfdm/parallel.hpp"
#include "sfdm/model.hpp"
#include "sfdm/equilibria.hpp"
#include "sfdm/reduction.hpp"
#include "sfdm/fokker_planck.hpp"
#include "sfdm/first_passage.hpp"
#include "sfdm/monte_carlo.hpp"
