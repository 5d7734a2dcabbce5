#pragma once

// Umbrella header for the whole library.

#include "mrlsim/devices.hpp"
#include "mrlsim/engine.hpp"
#include "mrlsim/gates.hpp"
#include "mrlsim/golden.hpp"
#include "mrlsim/measure.hpp"
#include "mrlsim/netlist.hpp"
