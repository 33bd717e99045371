#pragma once

#include "negbound/error.hpp"
#include "negbound/geometry.hpp"
#include "negbound/quadrature.hpp"
#include "negbound/weight.hpp"
#include "negbound/potential.hpp"
#include "negbound/named_examples.hpp"
#include "negbound/series.hpp"
#include "negbound/estimates.hpp"
#include "negbound/tiling.hpp"
#include "negbound/strip.hpp"
#include "negbound/conformal.hpp"
#include "negbound/spectral.hpp"
#include "negbound/oscillation.hpp"
#include "negbound/hardy.hpp"
#include "negbound/io.hpp"
