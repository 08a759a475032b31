#pragma once

#include "thermadiab/adiabaticity.hpp"
#include "thermadiab/commands.hpp"
#include "thermadiab/errors.hpp"
#include "thermadiab/evolution.hpp"
#include "thermadiab/hamiltonian.hpp"
#include "thermadiab/io.hpp"
#include "thermadiab/linalg.hpp"
#include "thermadiab/random.hpp"
#include "thermadiab/spin.hpp"
#include "thermadiab/wire_model.hpp"
