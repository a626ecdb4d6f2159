#pragma once

// Everything except io.hpp, which needs nlohmann_json.

#include "speclab/errors.hpp"
#include "speclab/exact_linalg.hpp"
#include "speclab/hadamard.hpp"
#include "speclab/parallel.hpp"
#include "speclab/convolution.hpp"
#include "speclab/cycles.hpp"
#include "speclab/spectra.hpp"
#include "speclab/quasi_product.hpp"
#include "speclab/ensemble.hpp"
