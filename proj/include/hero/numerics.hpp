#pragma once

#include "hero/numerics/adam.hpp"
#include "hero/numerics/finite_diff.hpp"
#include "hero/numerics/matrix.hpp"
#include "hero/numerics/normalize.hpp"
#include "hero/numerics/ops.hpp"
#include "hero/numerics/random.hpp"
#include "hero/numerics/tape.hpp"
