#ifndef MIPCR_DATA_HPP
#define MIPCR_DATA_HPP

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "mipcr/types.hpp"

namespace mipcr {

/// Partition of the columns: T (analysis targets), M (predictors of
/// missingness) and A (everything else).
enum class ColumnRole { analysis_target, mar_predictor, auxiliary };

std::string_view to_string(ColumnRole role);

/// Ordered, duplicate-free list of column indices into a dataset.
class ColumnSubset {
public:
    ColumnSubset() = default;
    ColumnSubset(std::vector<Index> indices, Index n_cols);

    static ColumnSubset all(Index n_cols);
    static ColumnSubset all_except(Index n_cols, Index excluded);

    const std::vector<Index>& indices() const { return indices_; }
    Index size() const { return static_cast<Index>(indices_.size()); }
    bool empty() const { return indices_.empty(); }
    bool contains(Index col) const;

    /// Copies the selected columns of `m` into a new matrix.
    Matrix extract(const Matrix& m) const;

private:
    std::vector<Index> indices_;
};

/// Rectangular numeric data with a response mask. The mask is authoritative:
/// cells with mask == false hold a quiet NaN regardless of what was passed
/// in. Immutable after construction.
class IncompleteData {
public:
    IncompleteData(Matrix values, BoolMatrix mask, std::vector<std::string> names,
                   std::vector<ColumnRole> roles);

    /// Fully observed data with generated names x1..xp and auxiliary roles.
    static IncompleteData complete(Matrix values);

    Index rows() const { return values_.rows(); }
    Index cols() const { return values_.cols(); }
    const Matrix& values() const { return values_; }
    const BoolMatrix& mask() const { return mask_; }
    const std::vector<std::string>& names() const { return names_; }
    const std::vector<ColumnRole>& roles() const { return roles_; }

    bool observed(Index row, Index col) const { return mask_(row, col); }
    Index observed_count(Index col) const;
    Index missing_count() const;

    /// Columns with at least one missing cell, ascending.
    std::vector<Index> incomplete_columns() const;
    std::vector<Index> columns_with_role(ColumnRole role) const;
    /// Index of the column named `name`; throws InputError when absent.
    Index column_index(std::string_view name) const;

    IncompleteData with_roles(std::vector<ColumnRole> roles) const;
    IncompleteData with_mask(BoolMatrix mask) const;

private:
    Matrix values_;
    BoolMatrix mask_;
    std::vector<std::string> names_;
    std::vector<ColumnRole> roles_;
};

/// Observed fraction per column.
std::vector<double> response_proportions(const IncompleteData& data);

/// Rows with no missing cell, in original order.
std::vector<Index> complete_case_rows(const IncompleteData& data);

/// Copies the given rows of `m`.
Matrix select_rows(const Matrix& m, const std::vector<Index>& rows);

/// True when `completed` equals `original` on every observed cell.
bool agrees_on_observed(const IncompleteData& original, const Matrix& completed);

// CSV ingestion and emission. Header row required; `na_token` marks missing
// cells. Columns that are entirely missing are rejected.
IncompleteData read_csv(std::istream& in, std::string_view na_token = "NA");
IncompleteData load_csv(const std::string& path, std::string_view na_token = "NA");
void write_csv(std::ostream& out, const IncompleteData& data, std::string_view na_token = "NA");
void write_csv(const std::string& path, const IncompleteData& data,
               std::string_view na_token = "NA");
/// Writes a complete matrix under the given header.
void write_csv(const std::string& path, const Matrix& values,
               const std::vector<std::string>& names);

/// Splits one RFC-4180 record. Quoted fields may contain separators and
/// doubled quotes.
std::vector<std::string> split_csv_record(std::string_view line);
std::string quote_csv_field(std::string_view field);
/// Shortest decimal text that reads back to the same double.
std::string format_double(double v);

}  // namespace mipcr

#endif
