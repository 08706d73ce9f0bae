#pragma once

#include "lssmor/errors.hpp"
#include "lssmor/expm.hpp"
#include "lssmor/gramians.hpp"
#include "lssmor/h2.hpp"
#include "lssmor/lyapunov.hpp"
#include "lssmor/model.hpp"
#include "lssmor/model_io.hpp"
#include "lssmor/reduction.hpp"
#include "lssmor/rng.hpp"
#include "lssmor/simulate.hpp"
