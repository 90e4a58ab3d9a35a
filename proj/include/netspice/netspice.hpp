#pragma once

#include "netspice/netmodel.hpp"
#include "netspice/spice.hpp"
#include "netspice/l0_oracle.hpp"
#include "netspice/datagen.hpp"
#include "netspice/metrics.hpp"
#include "netspice/harness.hpp"
#include "netspice/io.hpp"
