// Umbrella header.
#pragma once

#include "erd/core.hpp"
#include "erd/dynamics.hpp"
#include "erd/entropy.hpp"
#include "erd/rates.hpp"
#include "erd/verify.hpp"
#include "erd/config.hpp"
#include "erd/cli.hpp"
