#pragma once

#include "robustkf/correntropy.hpp"
#include "robustkf/diagnostics.hpp"
#include "robustkf/error.hpp"
#include "robustkf/kf.hpp"
#include "robustkf/linalg.hpp"
#include "robustkf/matrix.hpp"
#include "robustkf/mckf.hpp"
#include "robustkf/model.hpp"
#include "robustkf/rng.hpp"
#include "robustkf/simulation.hpp"
