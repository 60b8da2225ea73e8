#pragma once

#include <string>
#include <vector>

#include "kconv/verify.hpp"

namespace kconv {

/// Deterministic serialization: fixed key order, every float rendered with
/// %.12e, so identical inputs produce byte-identical files.
std::string reports_to_json(const std::vector<VerificationReport>& reports);
std::string reports_to_csv(const std::vector<VerificationReport>& reports);

std::vector<VerificationReport> reports_from_json(const std::string& text);

std::string rigidity_to_json(const RigidityReport& report);

/// Plot-ready contraction series extracted from a w2-contraction report:
/// columns t, ratio, exp(-K t).
std::string contraction_plot_csv(const VerificationReport& report);

std::string format_float(double x);  // %.12e

}  // namespace kconv
