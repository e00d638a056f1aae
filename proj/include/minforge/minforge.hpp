#pragma once

#include "activation.hpp"
#include "certify.hpp"
#include "dualspace.hpp"
#include "errors.hpp"
#include "experiments.hpp"
#include "forge_piecewise.hpp"
#include "forge_sigmoid.hpp"
#include "forge_smooth.hpp"
#include "network.hpp"
#include "rng.hpp"
#include "serialize.hpp"
