#pragma once

#include "offgrid/array_model.hpp"
#include "offgrid/aspg.hpp"
#include "offgrid/bench.hpp"
#include "offgrid/cadmm.hpp"
#include "offgrid/config.hpp"
#include "offgrid/csv.hpp"
#include "offgrid/egt.hpp"
#include "offgrid/metrics.hpp"
#include "offgrid/prox.hpp"
#include "offgrid/rng.hpp"
#include "offgrid/sdco.hpp"
#include "offgrid/signal.hpp"
#include "offgrid/types.hpp"
