#include "rabi/model.hpp"

#include <cmath>
#include <stdexcept>
#include <unordered_map>

namespace rabi {

namespace {

using Triplet = Eigen::Triplet<double>;

void require_finite(double value, const char* name) {
    if (!std::isfinite(value)) {
        throw std::invalid_argument(std::string("non-finite parameter: ") + name);
    }
}

void require_cutoff(Index n_max) {
    if (n_max < kMinCutoff) {
        throw std::invalid_argument("Fock cutoff n_max = " + std::to_string(n_max) +
                                    " is below the minimum of " +
                                    std::to_string(kMinCutoff));
    }
}

// Spin quantum number M for spin index s (s = 0 is M = +J).
double spin_m(const ModelSpec& spec, Index s) { return spec.total_spin() - double(s); }

// <M+1| J+ |M>
double ladder(double j, double m) { return std::sqrt(j * (j + 1.0) - m * (m + 1.0)); }

OperatorMatrix make_operator(Index spin_dim, Index fock_dim, std::vector<Triplet>& triplets,
                             std::string tag) {
    OperatorMatrix op;
    op.spin_dim = spin_dim;
    op.fock_dim = fock_dim;
    op.basis_tag = std::move(tag);
    const Index dim = spin_dim * fock_dim;
    op.matrix.resize(dim, dim);
    op.matrix.setFromTriplets(triplets.begin(), triplets.end());
    op.matrix.makeCompressed();
    return op;
}

constexpr const char* kFullTag = "spin-major:sz|fock";

// Columns of the parity-adapted spin basis with P = q, unnormalised
// (entries +-1). Each column lists (spin index, sign).
struct SpinColumn {
    Index first{0};
    Index second{-1};  // -1 when M = 0
    double sign{1.0};
    double norm() const { return second < 0 ? 1.0 : 2.0; }
};

std::vector<SpinColumn> parity_columns(Index spin_dim, int q) {
    std::vector<SpinColumn> cols;
    const Index last = spin_dim - 1;
    for (Index s = 0; s <= last - s; ++s) {
        if (s == last - s) {
            if (q > 0) cols.push_back({s, -1, 1.0});
        } else {
            cols.push_back({s, last - s, q > 0 ? 1.0 : -1.0});
        }
    }
    return cols;
}

// <col_a| X |col_b> for a dense spin-space matrix X, normalised.
double project(const Eigen::MatrixXd& x, const SpinColumn& a, const SpinColumn& b) {
    double sum = x(a.first, b.first);
    if (b.second >= 0) sum += b.sign * x(a.first, b.second);
    if (a.second >= 0) {
        sum += a.sign * x(a.second, b.first);
        if (b.second >= 0) sum += a.sign * b.sign * x(a.second, b.second);
    }
    const double norm = a.norm() * b.norm();
    return norm == 1.0 ? sum : (norm == 4.0 ? sum / 2.0 : sum / std::sqrt(norm));
}

Eigen::MatrixXd spin_jx(const ModelSpec& spec) {
    const Index d = spec.spin_dim();
    const double j = spec.total_spin();
    Eigen::MatrixXd jx = Eigen::MatrixXd::Zero(d, d);
    for (Index s = 1; s < d; ++s) {
        // |s> has M = J - s, |s-1> has M + 1.
        const double v = 0.5 * ladder(j, spin_m(spec, s));
        jx(s - 1, s) = v;
        jx(s, s - 1) = v;
    }
    return jx;
}

Eigen::MatrixXd spin_jz(const ModelSpec& spec) {
    const Index d = spec.spin_dim();
    Eigen::MatrixXd jz = Eigen::MatrixXd::Zero(d, d);
    for (Index s = 0; s < d; ++s) jz(s, s) = spin_m(spec, s);
    return jz;
}

}  // namespace

void ModelSpec::validate() const {
    require_finite(delta, "delta");
    require_finite(epsilon, "epsilon");
    require_finite(omega0, "omega0");
    require_finite(lambda, "lambda");
    if (delta < 0.0) throw std::invalid_argument("delta must be non-negative");
    if (!(omega0 > 0.0)) throw std::invalid_argument("omega0 must be positive");
    if (lambda < 0.0) throw std::invalid_argument("lambda must be non-negative");
    if (n_qubits < 1) throw std::invalid_argument("n_qubits must be at least 1");
}

ModelSpec ModelSpec::from_ratios(double ratio, double lambda_rel, int n_qubits,
                                 double epsilon) {
    ModelSpec spec;
    spec.delta = 1.0;
    spec.omega0 = ratio;
    spec.lambda = lambda_rel * 0.5 * std::sqrt(ratio);
    spec.n_qubits = n_qubits;
    spec.epsilon = epsilon;
    return spec;
}

void TruncationConfig::validate() const {
    require_cutoff(n_max);
    if (!(growth_factor > 1.0)) throw std::invalid_argument("growth_factor must exceed 1");
    if (!(tol_energy > 0.0) || !(tol_observable > 0.0)) {
        throw std::invalid_argument("tolerances must be positive");
    }
    if (max_rounds < 1) throw std::invalid_argument("max_rounds must be at least 1");
    if (max_dimension < 2) throw std::invalid_argument("max_dimension must be at least 2");
}

bool OperatorMatrix::is_symmetric() const {
    for (Index col = 0; col < matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
            if (matrix.coeff(it.col(), it.row()) != it.value()) return false;
        }
    }
    return true;
}

double OperatorMatrix::norm_inf() const {
    Vector row_sums = Vector::Zero(matrix.rows());
    for (Index col = 0; col < matrix.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(matrix, col); it; ++it) {
            row_sums[it.row()] += std::abs(it.value());
        }
    }
    return row_sums.size() ? row_sums.maxCoeff() : 0.0;
}

OperatorKind parse_operator_kind(const std::string& name) {
    static const std::unordered_map<std::string, OperatorKind> kinds = {
        {"annihilate", OperatorKind::annihilate}, {"create", OperatorKind::create},
        {"field_x", OperatorKind::field_x},       {"p_squared", OperatorKind::p_squared},
        {"sigma_z", OperatorKind::sigma_z},       {"sigma_x", OperatorKind::sigma_x},
        {"J_z", OperatorKind::J_z},               {"J_x", OperatorKind::J_x},
        {"parity", OperatorKind::parity},
    };
    auto it = kinds.find(name);
    if (it == kinds.end()) throw std::invalid_argument("unknown operator kind: " + name);
    return it->second;
}

OperatorMatrix build_rabi_hamiltonian(const ModelSpec& spec, Index n_max) {
    spec.validate();
    require_cutoff(n_max);
    if (spec.n_qubits != 1) {
        throw std::invalid_argument("the Rabi Hamiltonian needs n_qubits = 1");
    }
    const Index fock = n_max + 1;
    std::vector<Triplet> t;
    t.reserve(8 * fock);
    for (Index n = 0; n < fock; ++n) {
        const double osc = spec.omega0 * double(n);
        // sigma_z = diag(+1, -1), bias term -eps/2 sz
        t.emplace_back(n, n, osc - 0.5 * spec.epsilon);
        t.emplace_back(fock + n, fock + n, osc + 0.5 * spec.epsilon);
        if (spec.delta != 0.0) {
            t.emplace_back(n, fock + n, -0.5 * spec.delta);
            t.emplace_back(fock + n, n, -0.5 * spec.delta);
        }
        if (n + 1 < fock && spec.lambda != 0.0) {
            const double c = spec.lambda * std::sqrt(double(n + 1));
            t.emplace_back(n, n + 1, c);
            t.emplace_back(n + 1, n, c);
            t.emplace_back(fock + n, fock + n + 1, -c);
            t.emplace_back(fock + n + 1, fock + n, -c);
        }
    }
    return make_operator(2, fock, t, kFullTag);
}

OperatorMatrix build_dicke_hamiltonian(const ModelSpec& spec, Index n_max) {
    spec.validate();
    require_cutoff(n_max);
    const Index fock = n_max + 1;
    const Index spins = spec.spin_dim();
    const double j = spec.total_spin();
    const double g = 2.0 * spec.lambda / std::sqrt(double(spec.n_qubits));
    std::vector<Triplet> t;
    t.reserve(std::size_t(spins * fock * 5));
    for (Index s = 0; s < spins; ++s) {
        const double m = spin_m(spec, s);
        const double coupling = g * m;
        for (Index n = 0; n < fock; ++n) {
            const Index row = s * fock + n;
            t.emplace_back(row, row, spec.omega0 * double(n) - spec.epsilon * m);
            if (s + 1 < spins && spec.delta != 0.0) {
                // <M| Jx |M-1> couples spin index s to s + 1
                const double v = -spec.delta * (0.5 * ladder(j, m - 1.0));
                t.emplace_back(row, row + fock, v);
                t.emplace_back(row + fock, row, v);
            }
            if (n + 1 < fock && coupling != 0.0) {
                const double c = coupling * std::sqrt(double(n + 1));
                t.emplace_back(row, row + 1, c);
                t.emplace_back(row + 1, row, c);
            }
        }
    }
    return make_operator(spins, fock, t, kFullTag);
}

OperatorMatrix build_hamiltonian(const ModelSpec& spec, Index n_max) {
    return spec.n_qubits == 1 ? build_rabi_hamiltonian(spec, n_max)
                              : build_dicke_hamiltonian(spec, n_max);
}

OperatorMatrix build_operator(OperatorKind kind, const ModelSpec& spec, Index n_max) {
    spec.validate();
    require_cutoff(n_max);
    const Index fock = n_max + 1;
    const Index spins = spec.spin_dim();
    const bool spin_half_only = kind == OperatorKind::sigma_x || kind == OperatorKind::sigma_z;
    if (spin_half_only && spec.n_qubits != 1) {
        throw std::invalid_argument("Pauli operators are defined for a single qubit only");
    }
    std::vector<Triplet> t;
    auto each_spin = [&](auto&& fock_entries) {
        for (Index s = 0; s < spins; ++s) fock_entries(s * fock);
    };
    switch (kind) {
        case OperatorKind::annihilate:
            each_spin([&](Index base) {
                for (Index n = 1; n < fock; ++n)
                    t.emplace_back(base + n - 1, base + n, std::sqrt(double(n)));
            });
            break;
        case OperatorKind::create:
            each_spin([&](Index base) {
                for (Index n = 1; n < fock; ++n)
                    t.emplace_back(base + n, base + n - 1, std::sqrt(double(n)));
            });
            break;
        case OperatorKind::field_x:
            each_spin([&](Index base) {
                for (Index n = 1; n < fock; ++n) {
                    const double v = 0.5 * std::sqrt(double(n));
                    t.emplace_back(base + n - 1, base + n, v);
                    t.emplace_back(base + n, base + n - 1, v);
                }
            });
            break;
        case OperatorKind::p_squared:
            // -(a^dag - a)^2 / 2 = (2n + 1)/2 - (a^2 + a^dag^2)/2
            each_spin([&](Index base) {
                for (Index n = 0; n < fock; ++n) {
                    t.emplace_back(base + n, base + n, double(n) + 0.5);
                    if (n + 2 < fock) {
                        const double v = -0.5 * std::sqrt(double(n + 1) * double(n + 2));
                        t.emplace_back(base + n, base + n + 2, v);
                        t.emplace_back(base + n + 2, base + n, v);
                    }
                }
            });
            break;
        case OperatorKind::sigma_z:
        case OperatorKind::J_z: {
            const double scale = kind == OperatorKind::sigma_z ? 2.0 : 1.0;
            for (Index s = 0; s < spins; ++s) {
                const double m = scale * spin_m(spec, s);
                if (m == 0.0) continue;
                for (Index n = 0; n < fock; ++n) t.emplace_back(s * fock + n, s * fock + n, m);
            }
            break;
        }
        case OperatorKind::sigma_x:
        case OperatorKind::J_x: {
            const double scale = kind == OperatorKind::sigma_x ? 2.0 : 1.0;
            const double j = spec.total_spin();
            for (Index s = 1; s < spins; ++s) {
                const double v = scale * 0.5 * ladder(j, spin_m(spec, s));
                for (Index n = 0; n < fock; ++n) {
                    t.emplace_back((s - 1) * fock + n, s * fock + n, v);
                    t.emplace_back(s * fock + n, (s - 1) * fock + n, v);
                }
            }
            break;
        }
        case OperatorKind::parity:
            for (Index s = 0; s < spins; ++s) {
                const Index flipped = spins - 1 - s;
                for (Index n = 0; n < fock; ++n) {
                    t.emplace_back(flipped * fock + n, s * fock + n, n % 2 == 0 ? 1.0 : -1.0);
                }
            }
            break;
    }
    return make_operator(spins, fock, t, kFullTag);
}

ParityBlock build_parity_block(const ModelSpec& spec, Index n_max, int parity) {
    spec.validate();
    require_cutoff(n_max);
    if (spec.epsilon != 0.0) {
        throw std::invalid_argument("parity blocks require epsilon = 0");
    }
    if (parity != 1 && parity != -1) throw std::invalid_argument("parity must be +1 or -1");

    const Index fock = n_max + 1;
    const Index spins = spec.spin_dim();
    const Eigen::MatrixXd jx = spin_jx(spec);
    const Eigen::MatrixXd jz = spin_jz(spec);
    const double g = 2.0 * spec.lambda / std::sqrt(double(spec.n_qubits));

    // Spin-flip eigenvalue carried by Fock level n.
    auto flip_of = [&](Index n) { return (n % 2 == 0) ? parity : -parity; };
    const std::vector<SpinColumn> cols_plus = parity_columns(spins, +1);
    const std::vector<SpinColumn> cols_minus = parity_columns(spins, -1);
    auto cols_of = [&](Index n) -> const std::vector<SpinColumn>& {
        return flip_of(n) > 0 ? cols_plus : cols_minus;
    };

    // Small spin matrices in the parity-adapted basis.
    auto project_all = [](const Eigen::MatrixXd& x, const std::vector<SpinColumn>& rows,
                          const std::vector<SpinColumn>& cols) {
        Eigen::MatrixXd out(Index(rows.size()), Index(cols.size()));
        for (std::size_t a = 0; a < rows.size(); ++a)
            for (std::size_t b = 0; b < cols.size(); ++b)
                out(Index(a), Index(b)) = project(x, rows[a], cols[b]);
        return out;
    };
    const Eigen::MatrixXd jx_plus = project_all(jx, cols_plus, cols_plus);
    const Eigen::MatrixXd jx_minus = project_all(jx, cols_minus, cols_minus);
    const Eigen::MatrixXd jz_pm = project_all(jz, cols_plus, cols_minus);

    ParityBlock block;
    OperatorMatrix& h = block.hamiltonian;
    h.spin_dim = spins;
    h.fock_dim = fock;
    h.basis_tag = parity > 0 ? "fock-major:spin-flip|parity=+1" : "fock-major:spin-flip|parity=-1";
    h.level_offsets.resize(std::size_t(fock + 1));
    h.level_offsets[0] = 0;
    for (Index n = 0; n < fock; ++n) {
        h.level_offsets[std::size_t(n + 1)] = h.level_offsets[std::size_t(n)] + Index(cols_of(n).size());
    }
    const Index dim = h.level_offsets.back();

    std::vector<Triplet> t;
    std::vector<Triplet> emb;
    t.reserve(std::size_t(dim * (2 + 2 * spins)));
    emb.reserve(std::size_t(2 * dim));
    for (Index n = 0; n < fock; ++n) {
        const Index base = h.level_offsets[std::size_t(n)];
        const auto& cols = cols_of(n);
        const Eigen::MatrixXd& x = flip_of(n) > 0 ? jx_plus : jx_minus;
        for (Index a = 0; a < Index(cols.size()); ++a) {
            for (Index b = 0; b < Index(cols.size()); ++b) {
                double v = -spec.delta * x(a, b);
                if (a == b) v += spec.omega0 * double(n);
                if (v != 0.0 || a == b) t.emplace_back(base + a, base + b, v);
            }
            const SpinColumn& c = cols[std::size_t(a)];
            const double amp = c.second < 0 ? 1.0 : std::sqrt(0.5);
            emb.emplace_back(c.first * fock + n, base + a, amp);
            if (c.second >= 0) emb.emplace_back(c.second * fock + n, base + a, c.sign * amp);
        }
        if (n + 1 < fock && g != 0.0) {
            const Index next = h.level_offsets[std::size_t(n + 1)];
            const auto& cols_next = cols_of(n + 1);
            const double root = std::sqrt(double(n + 1));
            for (Index a = 0; a < Index(cols.size()); ++a) {
                for (Index b = 0; b < Index(cols_next.size()); ++b) {
                    const double z = flip_of(n) > 0 ? jz_pm(a, b) : jz_pm(b, a);
                    if (z == 0.0) continue;
                    const double v = (g * z) * root;
                    t.emplace_back(base + a, next + b, v);
                    t.emplace_back(next + b, base + a, v);
                }
            }
        }
    }
    h.matrix.resize(dim, dim);
    h.matrix.setFromTriplets(t.begin(), t.end());
    h.matrix.makeCompressed();

    block.embedding.parity = parity;
    block.embedding.map.resize(spins * fock, dim);
    block.embedding.map.setFromTriplets(emb.begin(), emb.end());
    block.embedding.map.makeCompressed();
    return block;
}

ParitySplit parity_block_split(const OperatorMatrix& H) {
    if (H.fock_major() || H.spin_dim < 2 || H.fock_dim < 1 ||
        H.spin_dim * H.fock_dim != H.dimension()) {
        throw std::invalid_argument("parity_block_split needs a spin-major full-space operator");
    }
    ModelSpec shape;
    shape.n_qubits = int(H.spin_dim - 1);
    const OperatorMatrix parity = build_operator(OperatorKind::parity, shape, H.n_max());
    const SparseMatrix comm = commutator(H, parity);
    for (Index col = 0; col < comm.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(comm, col); it; ++it) {
            if (it.value() != 0.0) {
                throw std::invalid_argument(
                    "Hamiltonian does not commute with parity (nonzero bias?)");
            }
        }
    }

    ParitySplit split;
    for (int p : {+1, -1}) {
        // Take the layout and embedding from the analytic builder, then project
        // H itself so the split works for any parity-symmetric operator.
        ModelSpec probe = shape;
        probe.omega0 = 1.0;
        ParityBlock block = build_parity_block(probe, H.n_max(), p);
        const SparseMatrix& w = block.embedding.map;
        SparseMatrix projected = SparseMatrix(w.transpose()) * H.matrix * w;
        projected.prune(0.0);
        // Symmetrise bitwise: products can differ in the last ulp.
        SparseMatrix sym = (projected + SparseMatrix(projected.transpose())) * 0.5;
        block.hamiltonian.matrix = sym;
        block.hamiltonian.matrix.makeCompressed();
        (p > 0 ? split.even : split.odd) = std::move(block);
    }
    return split;
}

SparseMatrix commutator(const OperatorMatrix& a, const OperatorMatrix& b) {
    if (a.dimension() != b.dimension()) throw std::invalid_argument("dimension mismatch");
    SparseMatrix c = a.matrix * b.matrix - b.matrix * a.matrix;
    c.prune(0.0);
    return c;
}

}  // namespace rabi
