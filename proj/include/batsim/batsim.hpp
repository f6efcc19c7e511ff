#pragma once

#include "batsim/battery.hpp"
#include "batsim/energy_routing.hpp"
#include "batsim/hello_codec.hpp"
#include "batsim/occupancy.hpp"
#include "batsim/onoff_chain.hpp"
#include "batsim/quadrature.hpp"
#include "batsim/reports.hpp"
#include "batsim/rng.hpp"
#include "batsim/scenario.hpp"
