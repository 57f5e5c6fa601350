#pragma once

#include "flowridge/asymptotics.hpp"
#include "flowridge/bounds.hpp"
#include "flowridge/estimators.hpp"
#include "flowridge/experiments.hpp"
#include "flowridge/io.hpp"
#include "flowridge/numeric.hpp"
#include "flowridge/risk.hpp"
#include "flowridge/spectral.hpp"
