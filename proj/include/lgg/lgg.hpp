#pragma once

#include "lgg/error.hpp"
#include "lgg/eval.hpp"
#include "lgg/graph.hpp"
#include "lgg/manifest.hpp"
#include "lgg/matrix.hpp"
#include "lgg/mixup.hpp"
#include "lgg/npy.hpp"
#include "lgg/refnet.hpp"
#include "lgg/rng.hpp"
#include "lgg/scoring.hpp"
#include "lgg/tensor_io.hpp"
#include "lgg/variation.hpp"
