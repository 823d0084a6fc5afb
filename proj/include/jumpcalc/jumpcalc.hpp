#pragma once

#include "rng.hpp"
#include "point_measure.hpp"
#include "quadrature.hpp"
#include "intensity.hpp"
#include "parallel.hpp"
#include "stats.hpp"
#include "malliavin.hpp"
#include "functionals.hpp"
#include "integrals.hpp"
#include "market.hpp"
#include "representation.hpp"
#include "hedging.hpp"
#include "library.hpp"
#include "config.hpp"
#include "report.hpp"
#include "verify.hpp"
#include "cli.hpp"
