#pragma once

#include "rayen/core.hpp"
#include "rayen/rng.hpp"
#include "rayen/constraint_model.hpp"
#include "rayen/dense_linalg.hpp"
#include "rayen/lp_solver.hpp"
#include "rayen/plan.hpp"
#include "rayen/interior_point.hpp"
#include "rayen/preprocess.hpp"
#include "rayen/mapper.hpp"
#include "rayen/oracle.hpp"
#include "rayen/gallery.hpp"
#include "rayen/bench.hpp"
#include "rayen/io.hpp"
