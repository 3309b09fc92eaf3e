#pragma once

#include "nkhitchin/background.hpp"
#include "nkhitchin/commands.hpp"
#include "nkhitchin/errors.hpp"
#include "nkhitchin/hitchin.hpp"
#include "nkhitchin/io.hpp"
#include "nkhitchin/minkowski.hpp"
#include "nkhitchin/ode.hpp"
#include "nkhitchin/oracles.hpp"
#include "nkhitchin/parallel.hpp"
#include "nkhitchin/series.hpp"
#include "nkhitchin/singular.hpp"
