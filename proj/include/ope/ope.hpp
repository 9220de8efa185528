#pragma once

// Umbrella header for the one-plus-epsilon anomaly detection library.

#include "ope/adam.hpp"
#include "ope/cli.hpp"
#include "ope/config.hpp"
#include "ope/data.hpp"
#include "ope/errors.hpp"
#include "ope/eval.hpp"
#include "ope/io.hpp"
#include "ope/losses.hpp"
#include "ope/math.hpp"
#include "ope/net.hpp"
#include "ope/rng.hpp"
#include "ope/samplers.hpp"
#include "ope/tensor.hpp"
#include "ope/train.hpp"
