#pragma once

#include "feelsel/config.hpp"
#include "feelsel/engine.hpp"
#include "feelsel/errors.hpp"
#include "feelsel/io.hpp"
#include "feelsel/lyapunov.hpp"
#include "feelsel/policies.hpp"
#include "feelsel/radio.hpp"
#include "feelsel/rng.hpp"
#include "feelsel/scenario.hpp"
#include "feelsel/sps.hpp"
#include "feelsel/status.hpp"
