#pragma once

#include "hero/metrics/regression.hpp"
#include "hero/metrics/rul.hpp"
