#pragma once

// Umbrella header: the whole engine in one include.

#include "afv/acceptance.hpp"
#include "afv/aggregate.hpp"
#include "afv/energy.hpp"
#include "afv/errors.hpp"
#include "afv/fap.hpp"
#include "afv/preferences.hpp"
#include "afv/protocol.hpp"
#include "afv/simulator.hpp"
#include "afv/sweep.hpp"
#include "afv/types.hpp"
