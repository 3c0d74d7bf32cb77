#pragma once

#include "qst/chain.hpp"
#include "qst/design.hpp"
#include "qst/dynamics.hpp"
#include "qst/errors.hpp"
#include "qst/modes.hpp"
#include "qst/spectral.hpp"
