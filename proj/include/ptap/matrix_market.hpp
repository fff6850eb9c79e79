#pragma once

#include <filesystem>
#include <iosfwd>

#include "ptap/csr_matrix.hpp"

namespace ptap {

/// Reads "%%MatrixMarket matrix coordinate {real|integer|pattern} {general|symmetric}".
/// Symmetric files are expanded; pattern files produce structure-only matrices.
CsrMatrix read_matrix_market(std::istream& in);
CsrMatrix read_matrix_market(const std::filesystem::path& path);

/// Writes coordinate/real/general with 17 significant digits so values round-trip exactly.
/// Symbolic-only matrices are written as "pattern".
void write_matrix_market(std::ostream& out, const CsrMatrix& m);
void write_matrix_market(const std::filesystem::path& path, const CsrMatrix& m);

} // namespace ptap
