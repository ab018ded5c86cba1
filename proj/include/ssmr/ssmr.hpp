#pragma once

#include "ssmr/error.hpp"
#include "ssmr/random.hpp"
#include "ssmr/polyfeatures.hpp"
#include "ssmr/trajectory.hpp"
#include "ssmr/plant.hpp"
#include "ssmr/datapipe.hpp"
#include "ssmr/regression.hpp"
#include "ssmr/ssmlearn.hpp"
#include "ssmr/controllearn.hpp"
#include "ssmr/model_io.hpp"
#include "ssmr/qp.hpp"
#include "ssmr/mpc.hpp"
#include "ssmr/closed_loop.hpp"
