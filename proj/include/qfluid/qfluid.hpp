#pragma once

#include "qfluid/basis.hpp"
#include "qfluid/config.hpp"
#include "qfluid/domain.hpp"
#include "qfluid/energy.hpp"
#include "qfluid/errors.hpp"
#include "qfluid/field.hpp"
#include "qfluid/io.hpp"
#include "qfluid/limits.hpp"
#include "qfluid/operators.hpp"
#include "qfluid/physics.hpp"
#include "qfluid/relative_energy.hpp"
#include "qfluid/semiflow.hpp"
#include "qfluid/solver.hpp"
#include "qfluid/state.hpp"
