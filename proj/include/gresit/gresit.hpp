#pragma once

#include "gresit/common.hpp"
#include "gresit/discovery.hpp"
#include "gresit/graph.hpp"
#include "gresit/grouped_data.hpp"
#include "gresit/independence.hpp"
#include "gresit/metrics.hpp"
#include "gresit/murgs.hpp"
#include "gresit/regression.hpp"
#include "gresit/synth.hpp"
