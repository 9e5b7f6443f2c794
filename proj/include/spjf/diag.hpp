#pragma once

// Optional per-forward diagnostics: range invariants the paper states for
// gamma, the gating map and the amplitude gate, plus attention row sums.

#include <limits>
#include <vector>

namespace spjf {

struct ForwardDiag {
    std::vector<double> gamma;                // flattened per-channel gamma values
    double ms_min = std::numeric_limits<double>::infinity();
    double ms_max = -std::numeric_limits<double>::infinity();
    double attn_rowsum_maxdev = 0.0;          // max |row sum - 1|
    double b2_abs_minus_a_max = -std::numeric_limits<double>::infinity();
    bool saw_gate = false;
    bool saw_attention = false;
    bool saw_amplitude = false;
};

}  // namespace spjf
