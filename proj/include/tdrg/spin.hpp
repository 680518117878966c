#pragma once

#include <cmath>
#include <string>

#include "tdrg/sparse.hpp"

namespace tdrg {

enum class SpinKind { half, one };

enum class SpinIndex { x, y, z, identity, plus, minus };

// Spin-1/2 Pauli matrices. The ladder pair carries the factor 1/2:
// sigma^{+-} = (sigma^x +- i sigma^y)/2, so sigma^+ = |up><down|.
inline SparseComplexOperator pauli(SpinIndex k) {
    using E = SparseComplexOperator::Entry;
    const cplx I(0.0, 1.0);
    switch (k) {
        case SpinIndex::x: return {2, 2, {E{0, 1, 1.0}, E{1, 0, 1.0}}};
        case SpinIndex::y: return {2, 2, {E{0, 1, -I}, E{1, 0, I}}};
        case SpinIndex::z: return {2, 2, {E{0, 0, 1.0}, E{1, 1, -1.0}}};
        case SpinIndex::identity: return SparseComplexOperator::identity(2);
        case SpinIndex::plus: return {2, 2, {E{0, 1, 1.0}}};
        case SpinIndex::minus: return {2, 2, {E{1, 0, 1.0}}};
    }
    throw ConfigError("unknown Pauli index");
}

// Spin-1 matrices in the basis ordering (+1, 0, -1): slot 0 is m=+1, slot 2 is m=-1.
// Every correlator translation in the library relies on this ordering.
inline SparseComplexOperator spin1(SpinIndex k) {
    using E = SparseComplexOperator::Entry;
    const double r2 = std::sqrt(2.0);
    const double h = 1.0 / r2;
    const cplx I(0.0, 1.0);
    switch (k) {
        case SpinIndex::x: return {3, 3, {E{0, 1, h}, E{1, 0, h}, E{1, 2, h}, E{2, 1, h}}};
        case SpinIndex::y: return {3, 3, {E{0, 1, -I * h}, E{1, 0, I * h}, E{1, 2, -I * h}, E{2, 1, I * h}}};
        case SpinIndex::z: return {3, 3, {E{0, 0, 1.0}, E{2, 2, -1.0}}};
        case SpinIndex::identity: return SparseComplexOperator::identity(3);
        case SpinIndex::plus: return {3, 3, {E{0, 1, r2}, E{1, 2, r2}}};
        case SpinIndex::minus: return {3, 3, {E{1, 0, r2}, E{2, 1, r2}}};
    }
    throw ConfigError("unknown spin-1 index");
}

inline SparseComplexOperator spin_operator(SpinKind kind, SpinIndex k) {
    return kind == SpinKind::half ? pauli(k) : spin1(k);
}

// op acting on `site` of an n_sites tensor product; site 0 is the leftmost factor.
inline SparseComplexOperator site_operator(const SparseComplexOperator& op, int site, int n_sites) {
    if (n_sites < 1 || site < 0 || site >= n_sites)
        throw ConfigError("site " + std::to_string(site) + " out of range for " + std::to_string(n_sites) + " sites");
    if (op.rows() != op.cols()) throw ConfigError("site_operator needs a square operator");
    const std::size_t d = op.rows();
    std::size_t left = 1, right = 1;
    for (int s = 0; s < site; ++s) left *= d;
    for (int s = site + 1; s < n_sites; ++s) right *= d;
    SparseComplexOperator out = op;
    if (left > 1) out = kron(SparseComplexOperator::identity(left), out);
    if (right > 1) out = kron(out, SparseComplexOperator::identity(right));
    return out;
}

inline std::size_t ipow(std::size_t base, int exp) {
    std::size_t r = 1;
    for (int i = 0; i < exp; ++i) r *= base;
    return r;
}

}  // namespace tdrg
