#ifndef LSPK_LSPK_HPP
#define LSPK_LSPK_HPP

#include "lspk/error.hpp"
#include "lspk/experiments.hpp"
#include "lspk/metrics.hpp"
#include "lspk/regularizers.hpp"
#include "lspk/solvers.hpp"
#include "lspk/tensor.hpp"
#include "lspk/tensor_io.hpp"
#include "lspk/tlinalg.hpp"
#include "lspk/transforms.hpp"

#endif  // LSPK_LSPK_HPP
