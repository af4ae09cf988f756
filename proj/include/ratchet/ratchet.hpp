#pragma once

#include "ratchet/backtest.hpp"
#include "ratchet/data_io.hpp"
#include "ratchet/market_model.hpp"
#include "ratchet/rng.hpp"
#include "ratchet/sde_sim.hpp"
#include "ratchet/strategies.hpp"
#include "ratchet/version.hpp"
