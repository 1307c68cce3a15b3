#pragma once

#include "gmoi/errors.hpp"
#include "gmoi/scalar.hpp"
#include "gmoi/matrix.hpp"
#include "gmoi/jordan.hpp"
#include "gmoi/functions.hpp"
#include "gmoi/spectral_map.hpp"
#include "gmoi/engine.hpp"
#include "gmoi/analysis.hpp"
#include "gmoi/derivative.hpp"
#include "gmoi/fixtures.hpp"
#include "gmoi/json_io.hpp"
