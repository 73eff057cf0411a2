#pragma once

#include "dynamics.hpp"
#include "errors.hpp"
#include "models.hpp"
#include "noise.hpp"
#include "observables.hpp"
#include "operators.hpp"
#include "scenario.hpp"
