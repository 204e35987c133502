#pragma once

#include "gnep/equilibrium.hpp"
#include "gnep/explorer.hpp"
#include "gnep/io/csv.hpp"
#include "gnep/io/manifest.hpp"
#include "gnep/io/scenario.hpp"
#include "gnep/oracles.hpp"
#include "gnep/racing/monte_carlo.hpp"
#include "gnep/reference_games.hpp"
#include "gnep/selector.hpp"
