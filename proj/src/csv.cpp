#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "mipcr/data.hpp"

namespace mipcr {

namespace {

// Parses the whole stream into records, honouring quoted fields that span
// separators, doubled quotes and line breaks. Returns (line number, fields).
std::vector<std::pair<std::size_t, std::vector<std::string>>> parse_records(std::istream& in) {
    std::vector<std::pair<std::size_t, std::vector<std::string>>> records;
    std::vector<std::string> fields;
    std::string field;
    bool in_quotes = false;
    bool record_has_content = false;
    std::size_t line = 1;
    std::size_t record_line = 1;
    char c;
    auto end_record = [&] {
        if (record_has_content || !fields.empty() || !field.empty()) {
            fields.push_back(std::move(field));
            records.emplace_back(record_line, std::move(fields));
        }
        fields.clear();
        field.clear();
        record_has_content = false;
    };
    while (in.get(c)) {
        if (in_quotes) {
            if (c == '"') {
                if (in.peek() == '"') {
                    in.get(c);
                    field.push_back('"');
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
        case '"':
            in_quotes = true;
            record_has_content = true;
            break;
        case ',':
            fields.push_back(std::move(field));
            field.clear();
            record_has_content = true;
            break;
        case '\r':
            break;
        case '\n':
            end_record();
            ++line;
            record_line = line;
            break;
        default:
            field.push_back(c);
            record_has_content = true;
        }
    }
    if (in_quotes) throw InputError("unterminated quoted field starting on line " + std::to_string(record_line));
    end_record();
    return records;
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
    return s;
}

bool parse_number(std::string_view text, double& out) {
    text = trim(text);
    if (text.empty()) return false;
    if (text.front() == '+') text.remove_prefix(1);
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc() && ptr == text.data() + text.size() && std::isfinite(out);
}

}  // namespace

std::vector<std::string> split_csv_record(std::string_view line) {
    std::istringstream in{std::string(line)};
    auto records = parse_records(in);
    if (records.empty()) return {std::string()};
    return std::move(records.front().second);
}

std::string quote_csv_field(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out.push_back('"');
        out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string format_double(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc()) throw InputError("cannot format value");
    return std::string(buf, ptr);
}

IncompleteData read_csv(std::istream& in, std::string_view na_token) {
    auto records = parse_records(in);
    if (records.empty()) throw InputError("empty CSV input");
    std::vector<std::string> names = std::move(records.front().second);
    const auto p = static_cast<Index>(names.size());
    const auto n = static_cast<Index>(records.size() - 1);
    if (n < 1) throw InputError("CSV input has a header but no data rows");
    if (p < 2) throw InputError("CSV input needs at least 2 columns");

    Matrix values(n, p);
    BoolMatrix mask(n, p);
    for (Index i = 0; i < n; ++i) {
        const auto& [line, fields] = records[static_cast<std::size_t>(i + 1)];
        if (static_cast<Index>(fields.size()) != p)
            throw InputError("ragged row at line " + std::to_string(line) + ": expected " + std::to_string(p) +
                             " fields, found " + std::to_string(fields.size()));
        for (Index j = 0; j < p; ++j) {
            const std::string& cell = fields[static_cast<std::size_t>(j)];
            if (cell == na_token) {
                mask(i, j) = false;
                values(i, j) = 0.0;
                continue;
            }
            double v = 0.0;
            if (!parse_number(cell, v))
                throw InputError("unparseable cell '" + cell + "' at row " + std::to_string(i + 1) + ", column " +
                                 std::to_string(j + 1) + " (line " + std::to_string(line) + ")");
            values(i, j) = v;
            mask(i, j) = true;
        }
    }
    for (Index j = 0; j < p; ++j)
        if (!mask.col(j).any())
            throw InputError("column '" + names[static_cast<std::size_t>(j)] + "' has no observed values");
    return IncompleteData(std::move(values), std::move(mask), std::move(names),
                          std::vector<ColumnRole>(static_cast<std::size_t>(p), ColumnRole::auxiliary));
}

IncompleteData load_csv(const std::string& path, std::string_view na_token) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open '" + path + "'");
    return read_csv(in, na_token);
}

void write_csv(std::ostream& out, const IncompleteData& data, std::string_view na_token) {
    for (Index j = 0; j < data.cols(); ++j) {
        if (j > 0) out << ',';
        out << quote_csv_field(data.names()[static_cast<std::size_t>(j)]);
    }
    out << '\n';
    for (Index i = 0; i < data.rows(); ++i) {
        for (Index j = 0; j < data.cols(); ++j) {
            if (j > 0) out << ',';
            if (data.observed(i, j))
                out << format_double(data.values()(i, j));
            else
                out << na_token;
        }
        out << '\n';
    }
}

void write_csv(const std::string& path, const IncompleteData& data, std::string_view na_token) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    write_csv(out, data, na_token);
}

void write_csv(const std::string& path, const Matrix& values, const std::vector<std::string>& names) {
    if (static_cast<Index>(names.size()) != values.cols()) throw InputError("header does not match column count");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < names.size(); ++j) out << (j ? "," : "") << quote_csv_field(names[j]);
    out << '\n';
    for (Index i = 0; i < values.rows(); ++i) {
        for (Index j = 0; j < values.cols(); ++j) out << (j ? "," : "") << format_double(values(i, j));
        out << '\n';
    }
}

}  // namespace mipcr
