#pragma once

#include "trendsim/errors.hpp"
#include "trendsim/contrasts.hpp"
#include "trendsim/dataset.hpp"
#include "trendsim/model.hpp"
#include "trendsim/mvt.hpp"
#include "trendsim/inference.hpp"
#include "trendsim/report.hpp"
#include "trendsim/forest_plot.hpp"
#include "trendsim/simulation.hpp"
#include "trendsim/commands.hpp"
