#pragma once

// Umbrella header for the velocity-field registration library.

#include "flowreg/chebyshev.hpp"
#include "flowreg/continuation.hpp"
#include "flowreg/csv.hpp"
#include "flowreg/diagnostics.hpp"
#include "flowreg/errors.hpp"
#include "flowreg/fft.hpp"
#include "flowreg/field.hpp"
#include "flowreg/image_io.hpp"
#include "flowreg/optimality.hpp"
#include "flowreg/optimizer.hpp"
#include "flowreg/problems.hpp"
#include "flowreg/spectral.hpp"
#include "flowreg/time_grid.hpp"
#include "flowreg/transport.hpp"
