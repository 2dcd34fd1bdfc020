#pragma once

#include "asca/automaton.hpp"
#include "asca/checkpoint.hpp"
#include "asca/commands.hpp"
#include "asca/config.hpp"
#include "asca/dataio.hpp"
#include "asca/dictionary.hpp"
#include "asca/pipeline.hpp"
#include "asca/random.hpp"
#include "asca/solver.hpp"
#include "asca/tensor.hpp"
