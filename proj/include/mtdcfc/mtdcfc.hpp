#pragma once

#include "mtdcfc/errors.hpp"
#include "mtdcfc/netgraph.hpp"
#include "mtdcfc/plant.hpp"
#include "mtdcfc/control.hpp"
#include "mtdcfc/assembly.hpp"
#include "mtdcfc/analysis.hpp"
#include "mtdcfc/sim.hpp"
#include "mtdcfc/config.hpp"
#include "mtdcfc/report.hpp"
#include "mtdcfc/commands.hpp"
