#pragma once

// Umbrella header for the NeuNcut library: differentiable normalized-cut
// clustering trained in mini-batches, a classical spectral-clustering
// baseline, and the supporting graph, data and evaluation utilities.

#include "neuncut/baseline.hpp"
#include "neuncut/data.hpp"
#include "neuncut/error.hpp"
#include "neuncut/gamma_search.hpp"
#include "neuncut/graph.hpp"
#include "neuncut/loss.hpp"
#include "neuncut/matrix.hpp"
#include "neuncut/metrics.hpp"
#include "neuncut/model.hpp"
#include "neuncut/model_io.hpp"
#include "neuncut/rng.hpp"
#include "neuncut/trainer.hpp"
