#pragma once

#include "gcnsim/cnfs.hpp"
#include "gcnsim/energy.hpp"
#include "gcnsim/engine.hpp"
#include "gcnsim/error.hpp"
#include "gcnsim/format.hpp"
#include "gcnsim/log.hpp"
#include "gcnsim/model.hpp"
#include "gcnsim/network.hpp"
#include "gcnsim/placement.hpp"
#include "gcnsim/tea_oracle.hpp"
