#pragma once

#include "anchorcc/numerics.hpp"
#include "anchorcc/anchor_graph.hpp"
#include "anchorcc/alignment.hpp"
#include "anchorcc/metrics.hpp"
#include "anchorcc/data_io.hpp"
#include "anchorcc/pipeline.hpp"
