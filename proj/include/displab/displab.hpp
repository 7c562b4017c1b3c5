#pragma once

#include "displab/asymptotics.hpp"
#include "displab/experiment/config.hpp"
#include "displab/experiment/datum.hpp"
#include "displab/experiment/presets.hpp"
#include "displab/experiment/report.hpp"
#include "displab/experiment/runner.hpp"
#include "displab/expression.hpp"
#include "displab/fft.hpp"
#include "displab/grid.hpp"
#include "displab/gronwall.hpp"
#include "displab/hamiltonian.hpp"
#include "displab/norms.hpp"
#include "displab/potential.hpp"
#include "displab/propagators.hpp"
#include "displab/random.hpp"
