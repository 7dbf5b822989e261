#pragma once

#include "odeen/world.hpp"
#include "odeen/rule_lang.hpp"
#include "odeen/bitvec.hpp"
#include "odeen/interpreter.hpp"
#include "odeen/semmatrix.hpp"
#include "odeen/rng.hpp"
#include "odeen/environment.hpp"
#include "odeen/datasetgen.hpp"
#include "odeen/solver.hpp"
#include "odeen/metrics.hpp"
#include "odeen/sit.hpp"
