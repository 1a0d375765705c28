#pragma once

#include "nclbf/assumptions.hpp"
#include "nclbf/barrier.hpp"
#include "nclbf/controller.hpp"
#include "nclbf/plot.hpp"
#include "nclbf/report.hpp"
#include "nclbf/scenario.hpp"
#include "nclbf/scenario_io.hpp"
#include "nclbf/simulator.hpp"
#include "nclbf/systems.hpp"
#include "nclbf/types.hpp"
#include "nclbf/verify.hpp"
