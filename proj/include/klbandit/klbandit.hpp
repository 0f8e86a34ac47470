#pragma once

#include "klbandit/error.hpp"
#include "klbandit/dist.hpp"
#include "klbandit/divergence.hpp"
#include "klbandit/indices.hpp"
#include "klbandit/policies.hpp"
#include "klbandit/sim.hpp"
#include "klbandit/bounds.hpp"
#include "klbandit/verify.hpp"
