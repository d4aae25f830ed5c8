#pragma once

#include "hero/forecaster/forecaster.hpp"
#include "hero/forecaster/io.hpp"
#include "hero/forecaster/ridge.hpp"
#include "hero/forecaster/tst_mini.hpp"
