// Umbrella header: the whole library in one include.

#pragma once

#include "idem/approx_algebra.hpp"
#include "idem/capacity.hpp"
#include "idem/channel.hpp"
#include "idem/core.hpp"
#include "idem/discrimination.hpp"
#include "idem/emulation.hpp"
#include "idem/io.hpp"
#include "idem/structure.hpp"
