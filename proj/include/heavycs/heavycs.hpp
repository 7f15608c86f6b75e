// heavycs.hpp: umbrella header.
#pragma once

#include "accumulators.hpp"
#include "boundaries.hpp"
#include "confseq.hpp"
#include "csv.hpp"
#include "rng.hpp"
#include "simulator.hpp"
#include "special_functions.hpp"
