#pragma once

#include "common.hpp"
#include "criteria.hpp"
#include "ev.hpp"
#include "hosting_capacity.hpp"
#include "intervals.hpp"
#include "network.hpp"
#include "network_io.hpp"
#include "parallel.hpp"
#include "power_flow.hpp"
#include "profiles.hpp"
#include "pv.hpp"
#include "reconfiguration.hpp"
#include "report.hpp"
#include "scenarios.hpp"
#include "study.hpp"
#include "synthetic.hpp"
