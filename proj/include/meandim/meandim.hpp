#pragma once

#include "meandim/common.hpp"
#include "meandim/lp.hpp"
#include "meandim/metric_space.hpp"
#include "meandim/intmat.hpp"
#include "meandim/systems.hpp"
#include "meandim/information.hpp"
#include "meandim/ratedist.hpp"
#include "meandim/hausdorff.hpp"
#include "meandim/ergodic.hpp"
#include "meandim/tiling.hpp"
#include "meandim/algebraic.hpp"
#include "meandim/experiments.hpp"
#include "meandim/serialize.hpp"
