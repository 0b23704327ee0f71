#pragma once

#include "tmkit/dsl.hpp"
#include "tmkit/eventing.hpp"
#include "tmkit/export.hpp"
#include "tmkit/model.hpp"
#include "tmkit/simulator.hpp"
