#pragma once

#include "hero/dataset/bounds.hpp"
#include "hero/dataset/csv.hpp"
#include "hero/dataset/dataset.hpp"
#include "hero/dataset/io.hpp"
#include "hero/dataset/preprocess.hpp"
#include "hero/dataset/synth.hpp"
#include "hero/dataset/windows.hpp"
