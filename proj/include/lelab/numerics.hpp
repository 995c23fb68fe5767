#pragma once

#include "lelab/numerics/banded.hpp"
#include "lelab/numerics/dense.hpp"
#include "lelab/numerics/grid.hpp"
#include "lelab/numerics/interp.hpp"
#include "lelab/numerics/newton.hpp"
#include "lelab/numerics/powerfit.hpp"
#include "lelab/numerics/quadrature.hpp"
