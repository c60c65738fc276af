// semiclassics.hpp - closed-form mean-field predictions for the transition
#pragma once

#include "rabi/model.hpp"

namespace rabi {

// sqrt(omega0 * delta) / 2. Throws std::invalid_argument unless both are > 0.
double lambda_c(double delta, double omega0);

enum class Side { below, at, above };

const char* side_name(Side side);
Side side_of(double lambda_rel);

// Below: sqrt(2) omega0 (1 - r)^(1/2), the lowest gap.
// Above: 2 omega0 (r - 1)^(1/2), the pair spacing E_n - E_{n-2}.
// r = 1 returns 0.
double gap_semiclassical(double lambda_rel, double omega0);

struct AlphaPrediction {
    double full{0.0};  // delta/(4 lambda) [(lambda/lambda_c)^4 - 1]^(1/2)
    double near{0.0};  // delta/(2 lambda_c) (lambda/lambda_c - 1)^(1/2)
};

// Single-qubit field amplitude in one branch; zero at and below lambda_c.
AlphaPrediction alpha_semiclassical(double lambda, double delta, double lambda_c);

// cos^(2N)(theta / 2): overlap of the N-qubit states in the two branches.
double qubit_overlap(int n_qubits, double theta);

struct SemiclassicalPrediction {
    double lambda_c{0.0};
    double lambda_rel{0.0};
    double gap_below{0.0};   // NaN unless below
    double gap_above{0.0};   // NaN unless above
    double alpha_full{0.0};  // per-qubit amplitude, scaled by sqrt(N)
    double alpha_near{0.0};
    Side valid_side{Side::below};
};

SemiclassicalPrediction predict(const ModelSpec& spec);

}  // namespace rabi
