#pragma once

#include "hero/latent/kde.hpp"
#include "hero/latent/vae.hpp"
