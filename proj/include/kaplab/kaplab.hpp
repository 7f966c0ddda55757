#pragma once

#include "kaplab/error.hpp"
#include "kaplab/grid.hpp"
#include "kaplab/operator.hpp"
#include "kaplab/nonlinearity.hpp"
#include "kaplab/steady.hpp"
#include "kaplab/spectral.hpp"
#include "kaplab/coefficients.hpp"
#include "kaplab/odelab.hpp"
#include "kaplab/kaplan.hpp"
#include "kaplab/evolve.hpp"
