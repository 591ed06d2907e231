#pragma once

#include "pmmp/version.hpp"
#include "pmmp/errors.hpp"
#include "pmmp/io.hpp"
#include "pmmp/data_model.hpp"
#include "pmmp/design.hpp"
#include "pmmp/grouping.hpp"
#include "pmmp/estimator.hpp"
#include "pmmp/predictor.hpp"
#include "pmmp/mse.hpp"
#include "pmmp/enet.hpp"
#include "pmmp/serialize.hpp"
#include "pmmp/simulation.hpp"
