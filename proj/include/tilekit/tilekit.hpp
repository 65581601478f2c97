#pragma once

#include "tilekit/analysis.hpp"
#include "tilekit/config.hpp"
#include "tilekit/conv.hpp"
#include "tilekit/device.hpp"
#include "tilekit/errors.hpp"
#include "tilekit/gemm.hpp"
#include "tilekit/layers.hpp"
#include "tilekit/numeric.hpp"
#include "tilekit/tensor.hpp"
#include "tilekit/tuner.hpp"
#include "tilekit/winograd.hpp"
