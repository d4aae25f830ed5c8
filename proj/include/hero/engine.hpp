#pragma once

#include "hero/engine/aro.hpp"
#include "hero/engine/attack.hpp"
#include "hero/engine/complexity.hpp"
#include "hero/engine/ga.hpp"
#include "hero/engine/selection.hpp"
