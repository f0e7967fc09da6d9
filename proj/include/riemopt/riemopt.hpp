#pragma once

#include "riemopt/checkpoint.hpp"
#include "riemopt/checks.hpp"
#include "riemopt/error.hpp"
#include "riemopt/linalg.hpp"
#include "riemopt/manifolds.hpp"
#include "riemopt/optimizers.hpp"
#include "riemopt/random.hpp"
#include "riemopt/tensor.hpp"
