#pragma once

#include "powerlogit/errors.hpp"
#include "powerlogit/rng.hpp"
#include "powerlogit/math.hpp"
#include "powerlogit/distributions.hpp"
#include "powerlogit/augmentation.hpp"
#include "powerlogit/prior.hpp"
#include "powerlogit/data.hpp"
#include "powerlogit/coefficients.hpp"
#include "powerlogit/parallel.hpp"
#include "powerlogit/sampler.hpp"
#include "powerlogit/diagnostics.hpp"
