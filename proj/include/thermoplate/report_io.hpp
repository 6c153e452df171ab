#pragma once

#include <string>
#include <vector>

#include "thermoplate/multiplier.hpp"
#include "thermoplate/plate_fd.hpp"
#include "thermoplate/symbol.hpp"
#include "thermoplate/torus.hpp"

namespace thermoplate {

// Doubles are always written with 17 significant digits.
std::string format_double(double x);

std::string roots_json(const CharacteristicRoots& roots);
std::string roots_text(const CharacteristicRoots& roots);

// k, witness, closed form, relative difference
std::string witness_csv(const std::vector<double>& k_list);

// One row per (symbol, alpha).
std::string multiplier_csv(const std::vector<MultiplierReport>& reports);
std::string multiplier_json(const std::vector<MultiplierReport>& reports);

std::string sweep_csv(const ResolventSweep& sweep);
std::string sweep_json(const ResolventSweep& sweep);

std::string decay_csv(const DecayReport& report);
std::string decay_json(const DecayReport& report);

std::string convergence_csv(const ConvergenceStudy& study);
std::string convergence_json(const ConvergenceStudy& study);

}  // namespace thermoplate
