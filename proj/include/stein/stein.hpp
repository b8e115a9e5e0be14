#pragma once

#include "stein/common.hpp"
#include "stein/diagnostics.hpp"
#include "stein/ensemble.hpp"
#include "stein/io.hpp"
#include "stein/kernel.hpp"
#include "stein/linsolve.hpp"
#include "stein/model.hpp"
#include "stein/parallel.hpp"
#include "stein/problems.hpp"
#include "stein/rng.hpp"
#include "stein/run.hpp"
#include "stein/svgd.hpp"
#include "stein/svn.hpp"
