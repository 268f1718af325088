#include "mipcr/data.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mipcr {

std::string_view to_string(ColumnRole role) {
    switch (role) {
    case ColumnRole::analysis_target: return "analysis";
    case ColumnRole::mar_predictor: return "mar";
    case ColumnRole::auxiliary: return "auxiliary";
    }
    return "unknown";
}

std::uint64_t derive_seed(std::uint64_t root, std::uint64_t stream) {
    std::uint64_t z = root + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

ColumnSubset::ColumnSubset(std::vector<Index> indices, Index n_cols) : indices_(std::move(indices)) {
    std::vector<Index> sorted = indices_;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
        throw InputError("column subset contains duplicate indices");
    for (Index c : indices_)
        if (c < 0 || c >= n_cols)
            throw InputError("column index " + std::to_string(c) + " out of range");
}

ColumnSubset ColumnSubset::all(Index n_cols) {
    std::vector<Index> idx(static_cast<std::size_t>(n_cols));
    for (Index c = 0; c < n_cols; ++c) idx[static_cast<std::size_t>(c)] = c;
    return ColumnSubset(std::move(idx), n_cols);
}

ColumnSubset ColumnSubset::all_except(Index n_cols, Index excluded) {
    std::vector<Index> idx;
    idx.reserve(static_cast<std::size_t>(n_cols));
    for (Index c = 0; c < n_cols; ++c)
        if (c != excluded) idx.push_back(c);
    return ColumnSubset(std::move(idx), n_cols);
}

bool ColumnSubset::contains(Index col) const {
    return std::find(indices_.begin(), indices_.end(), col) != indices_.end();
}

Matrix ColumnSubset::extract(const Matrix& m) const {
    Matrix out(m.rows(), size());
    for (Index k = 0; k < size(); ++k) out.col(k) = m.col(indices_[static_cast<std::size_t>(k)]);
    return out;
}

IncompleteData::IncompleteData(Matrix values, BoolMatrix mask, std::vector<std::string> names,
                               std::vector<ColumnRole> roles)
    : values_(std::move(values)), mask_(std::move(mask)), names_(std::move(names)), roles_(std::move(roles)) {
    if (values_.rows() != mask_.rows() || values_.cols() != mask_.cols())
        throw InputError("mask and values differ in shape");
    if (values_.rows() < 1 || values_.cols() < 2)
        throw InputError("dataset needs at least 1 row and 2 columns");
    if (static_cast<Index>(names_.size()) != values_.cols())
        throw InputError("column name count does not match column count");
    if (static_cast<Index>(roles_.size()) != values_.cols())
        throw InputError("column role count does not match column count");
    const double nan = std::numeric_limits<double>::quiet_NaN();
    for (Index j = 0; j < values_.cols(); ++j) {
        for (Index i = 0; i < values_.rows(); ++i) {
            if (!mask_(i, j)) {
                values_(i, j) = nan;
            } else if (!std::isfinite(values_(i, j))) {
                throw InputError("non-finite observed value at row " + std::to_string(i + 1) +
                                 ", column " + std::to_string(j + 1));
            }
        }
    }
}

IncompleteData IncompleteData::complete(Matrix values) {
    const Index p = values.cols();
    std::vector<std::string> names;
    for (Index j = 0; j < p; ++j) names.push_back("x" + std::to_string(j + 1));
    BoolMatrix mask = BoolMatrix::Constant(values.rows(), p, true);
    return IncompleteData(std::move(values), std::move(mask), std::move(names),
                          std::vector<ColumnRole>(static_cast<std::size_t>(p), ColumnRole::auxiliary));
}

Index IncompleteData::observed_count(Index col) const { return mask_.col(col).count(); }

Index IncompleteData::missing_count() const { return mask_.size() - mask_.count(); }

std::vector<Index> IncompleteData::incomplete_columns() const {
    std::vector<Index> out;
    for (Index j = 0; j < cols(); ++j)
        if (observed_count(j) < rows()) out.push_back(j);
    return out;
}

std::vector<Index> IncompleteData::columns_with_role(ColumnRole role) const {
    std::vector<Index> out;
    for (Index j = 0; j < cols(); ++j)
        if (roles_[static_cast<std::size_t>(j)] == role) out.push_back(j);
    return out;
}

Index IncompleteData::column_index(std::string_view name) const {
    auto it = std::find(names_.begin(), names_.end(), name);
    if (it == names_.end()) throw InputError("unknown column '" + std::string(name) + "'");
    return static_cast<Index>(it - names_.begin());
}

IncompleteData IncompleteData::with_roles(std::vector<ColumnRole> roles) const {
    return IncompleteData(values_, mask_, names_, std::move(roles));
}

IncompleteData IncompleteData::with_mask(BoolMatrix mask) const {
    if (mask.rows() != rows() || mask.cols() != cols()) throw InputError("mask shape mismatch");
    for (Index j = 0; j < cols(); ++j)
        for (Index i = 0; i < rows(); ++i)
            if (mask(i, j) && !mask_(i, j))
                throw InputError("cannot reveal a cell that was never observed");
    return IncompleteData(values_, std::move(mask), names_, roles_);
}

std::vector<double> response_proportions(const IncompleteData& data) {
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(data.cols()));
    for (Index j = 0; j < data.cols(); ++j)
        out.push_back(static_cast<double>(data.observed_count(j)) / static_cast<double>(data.rows()));
    return out;
}

std::vector<Index> complete_case_rows(const IncompleteData& data) {
    std::vector<Index> out;
    for (Index i = 0; i < data.rows(); ++i)
        if (data.mask().row(i).all()) out.push_back(i);
    return out;
}

Matrix select_rows(const Matrix& m, const std::vector<Index>& rows) {
    Matrix out(static_cast<Index>(rows.size()), m.cols());
    for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Index>(k)) = m.row(rows[k]);
    return out;
}

bool agrees_on_observed(const IncompleteData& original, const Matrix& completed) {
    if (completed.rows() != original.rows() || completed.cols() != original.cols()) return false;
    for (Index j = 0; j < original.cols(); ++j)
        for (Index i = 0; i < original.rows(); ++i)
            if (original.observed(i, j) && completed(i, j) != original.values()(i, j)) return false;
    return true;
}

}  // namespace mipcr
