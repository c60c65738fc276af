#include "rabi/semiclassics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace rabi {

double lambda_c(double delta, double omega0) {
    if (!(delta > 0.0) || !(omega0 > 0.0) || !std::isfinite(delta) || !std::isfinite(omega0)) {
        throw std::invalid_argument("lambda_c needs positive delta and omega0");
    }
    return 0.5 * std::sqrt(omega0 * delta);
}

const char* side_name(Side side) {
    switch (side) {
        case Side::below: return "below";
        case Side::at: return "at";
        case Side::above: return "above";
    }
    return "?";
}

Side side_of(double lambda_rel) {
    if (lambda_rel < 1.0) return Side::below;
    if (lambda_rel > 1.0) return Side::above;
    return Side::at;
}

double gap_semiclassical(double lambda_rel, double omega0) {
    if (!(lambda_rel >= 0.0)) throw std::invalid_argument("lambda_rel must be non-negative");
    switch (side_of(lambda_rel)) {
        case Side::below: return std::sqrt(2.0) * omega0 * std::sqrt(1.0 - lambda_rel);
        case Side::above: return 2.0 * omega0 * std::sqrt(lambda_rel - 1.0);
        case Side::at: break;
    }
    return 0.0;
}

AlphaPrediction alpha_semiclassical(double lambda, double delta, double lc) {
    AlphaPrediction out;
    if (!(lambda > lc)) return out;
    const double r = lambda / lc;
    out.full = delta / (4.0 * lambda) * std::sqrt(r * r * r * r - 1.0);
    out.near = delta / (2.0 * lc) * std::sqrt(r - 1.0);
    return out;
}

double qubit_overlap(int n_qubits, double theta) {
    if (n_qubits < 1) throw std::invalid_argument("n_qubits must be at least 1");
    const double c = std::cos(0.5 * theta);
    return std::pow(c * c, n_qubits);
}

SemiclassicalPrediction predict(const ModelSpec& spec) {
    spec.validate();
    SemiclassicalPrediction p;
    p.lambda_c = lambda_c(spec.delta, spec.omega0);
    p.lambda_rel = spec.lambda / p.lambda_c;
    p.valid_side = side_of(p.lambda_rel);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    p.gap_below = p.valid_side == Side::below ? gap_semiclassical(p.lambda_rel, spec.omega0) : nan;
    p.gap_above = p.valid_side == Side::above ? gap_semiclassical(p.lambda_rel, spec.omega0) : nan;
    if (p.valid_side == Side::at) p.gap_below = p.gap_above = 0.0;
    const AlphaPrediction a = alpha_semiclassical(spec.lambda, spec.delta, p.lambda_c);
    const double scale = std::sqrt(double(spec.n_qubits));
    p.alpha_full = scale * a.full;
    p.alpha_near = scale * a.near;
    return p;
}

}  // namespace rabi
