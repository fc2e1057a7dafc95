// ============================================================================
// bernoulli.hpp -- umbrella header for the Bernoulli free-boundary library.
// ============================================================================
#pragma once

#include "bernoulli/check_report.hpp"
#include "bernoulli/convex_geometry.hpp"
#include "bernoulli/errors.hpp"
#include "bernoulli/exterior_fbp.hpp"
#include "bernoulli/inequality_harness.hpp"
#include "bernoulli/interior_fbp.hpp"
#include "bernoulli/io.hpp"
#include "bernoulli/minkowski_comb.hpp"
#include "bernoulli/ring_solver.hpp"
