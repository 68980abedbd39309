#pragma once

#include "dcsim/fock.hpp"
#include "dcsim/phase.hpp"
#include "dcsim/experiment.hpp"
#include "dcsim/stats.hpp"
#include "dcsim/stochastic.hpp"
#include "dcsim/eraser.hpp"
#include "dcsim/serialize.hpp"
