#pragma once

#include "gadlab/attack.hpp"
#include "gadlab/defense.hpp"
#include "gadlab/error.hpp"
#include "gadlab/eval.hpp"
#include "gadlab/graph.hpp"
#include "gadlab/graph_io.hpp"
#include "gadlab/graph_ops.hpp"
#include "gadlab/lgcn.hpp"
#include "gadlab/objectives.hpp"
#include "gadlab/oddball.hpp"
#include "gadlab/parallel.hpp"
#include "gadlab/rng.hpp"
#include "gadlab/version.hpp"
