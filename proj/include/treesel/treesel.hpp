#pragma once

#include "treesel/baseline.hpp"
#include "treesel/decompose.hpp"
#include "treesel/error.hpp"
#include "treesel/experiment.hpp"
#include "treesel/io.hpp"
#include "treesel/linalg.hpp"
#include "treesel/lowerbound.hpp"
#include "treesel/model.hpp"
#include "treesel/polytope.hpp"
#include "treesel/protocol.hpp"
#include "treesel/riccati.hpp"
#include "treesel/rng.hpp"
#include "treesel/scheduler.hpp"
#include "treesel/testbed.hpp"
