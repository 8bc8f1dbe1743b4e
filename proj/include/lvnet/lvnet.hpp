#pragma once

// Single include for the whole library: network model, signals, structural
// certificates, adaptive integration, trajectory property checks, config and
// CSV/JSON IO, and the command-line driver.

#include "lvnet/app.hpp"
#include "lvnet/certify.hpp"
#include "lvnet/config.hpp"
#include "lvnet/io.hpp"
#include "lvnet/network.hpp"
#include "lvnet/scenario.hpp"
#include "lvnet/signals.hpp"
#include "lvnet/sim.hpp"
#include "lvnet/verify.hpp"
