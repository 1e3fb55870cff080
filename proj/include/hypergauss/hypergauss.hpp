#pragma once

#include "borell.hpp"
#include "constants.hpp"
#include "errors.hpp"
#include "flow.hpp"
#include "function_pair.hpp"
#include "gaussian.hpp"
#include "global.hpp"
#include "hermite.hpp"
#include "linalg.hpp"
#include "local.hpp"
#include "mehler.hpp"
#include "quadrature.hpp"
#include "report.hpp"
#include "rng.hpp"
#include "special.hpp"
#include "suite.hpp"
