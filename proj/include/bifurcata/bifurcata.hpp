#pragma once

#include "bifurcata/errors.hpp"
#include "bifurcata/model.hpp"
#include "bifurcata/polynomial.hpp"
#include "bifurcata/bvp.hpp"
#include "bifurcata/problems.hpp"
#include "bifurcata/spectral.hpp"
#include "bifurcata/crossing.hpp"
#include "bifurcata/reduction.hpp"
#include "bifurcata/detector.hpp"
#include "bifurcata/config.hpp"
#include "bifurcata/report.hpp"
