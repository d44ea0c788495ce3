#pragma once

// Umbrella header: minimal strongly positive deviation bounds for block
// Hankel data. Include this to get the whole library.

#include "nehari/errors.hpp"
#include "nehari/feasibility.hpp"
#include "nehari/hankel.hpp"
#include "nehari/instance_io.hpp"
#include "nehari/kernel_reduction.hpp"
#include "nehari/matrix_kernel.hpp"
#include "nehari/solver.hpp"
