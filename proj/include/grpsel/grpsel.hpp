#pragma once

#include "types.hpp"
#include "stats.hpp"
#include "grouped_design.hpp"
#include "loss.hpp"
#include "penalty.hpp"
#include "cd_solver.hpp"
#include "local_search.hpp"
#include "oracle.hpp"
#include "path.hpp"
#include "cv.hpp"
#include "semiparam.hpp"
#include "clean.hpp"
#include "io.hpp"
#include "serialize.hpp"
