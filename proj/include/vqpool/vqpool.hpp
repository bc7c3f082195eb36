#pragma once

// Umbrella header.

#include "vqpool/dataset.hpp"
#include "vqpool/ensemble.hpp"
#include "vqpool/errors.hpp"
#include "vqpool/evaluate.hpp"
#include "vqpool/matrix.hpp"
#include "vqpool/pooling.hpp"
#include "vqpool/series.hpp"
#include "vqpool/stats.hpp"
#include "vqpool/svr.hpp"
#include "vqpool/synth.hpp"
