#pragma once

// Switch-based hybrid precoder design for mmWave massive MIMO: clustered
// channel generation, mutual-information metrics, the norm-maximization and
// QR/quadratic-update designs, partially connected switch networks, and the
// Monte-Carlo sweep harness.

#include "switchbeam/array.hpp"
#include "switchbeam/channel.hpp"
#include "switchbeam/connectivity.hpp"
#include "switchbeam/experiment.hpp"
#include "switchbeam/metrics.hpp"
#include "switchbeam/plot.hpp"
#include "switchbeam/rng.hpp"
#include "switchbeam/shd_nm.hpp"
#include "switchbeam/shd_qrqu.hpp"
