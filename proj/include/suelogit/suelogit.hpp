#pragma once

#include "suelogit/core.hpp"
#include "suelogit/equilibrium.hpp"
#include "suelogit/estimation.hpp"
#include "suelogit/inference.hpp"
#include "suelogit/io.hpp"
#include "suelogit/network.hpp"
#include "suelogit/paths.hpp"
#include "suelogit/synthetic.hpp"
