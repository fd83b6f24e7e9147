#pragma once

// Umbrella header: the whole library.

#include "mno/common.hpp"
#include "mno/prng.hpp"
#include "mno/kernels.hpp"
#include "mno/tensor.hpp"
#include "mno/dft.hpp"
#include "mno/tape.hpp"
#include "mno/dynamics.hpp"
#include "mno/container.hpp"
#include "mno/dataset.hpp"
#include "mno/optim.hpp"
#include "mno/fno.hpp"
#include "mno/baselines.hpp"
#include "mno/rollout.hpp"
#include "mno/models.hpp"
#include "mno/csv.hpp"
#include "mno/svg.hpp"
#include "mno/bench.hpp"
#include "mno/config.hpp"
