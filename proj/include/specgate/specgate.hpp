#pragma once

#include "specgate/bigfloat.hpp"
#include "specgate/expr.hpp"
#include "specgate/interval.hpp"
#include "specgate/linalg.hpp"
#include "specgate/ltp_bounds.hpp"
#include "specgate/numeric.hpp"
#include "specgate/operator_model.hpp"
#include "specgate/sigma_kernel.hpp"
#include "specgate/solver.hpp"
#include "specgate/truncation.hpp"
#include "specgate/verify.hpp"
#include "specgate/worker_pool.hpp"
